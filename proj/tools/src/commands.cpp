#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "changeplane/fit.hpp"
#include "changeplane/subgroup_test.hpp"

namespace changeplane::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

json vec(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

void emit(const json& doc, const std::string& path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_positive(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::invalid_argument,
                flag + " expects a positive number or a keyword, got '" + text + "'");
  }
  return v;
}

TauPolicy parse_tau(const std::string& text) {
  const std::string t = lowercase(text);
  if (t == "auto" || t == "adaptive") return AdaptiveTau{};
  if (t == "inf" || t == "infinity") return InfiniteTau{};
  return FixedTau{parse_positive(text, "--tau")};
}

HPolicy parse_h(const std::string& text, double c_h, int folds) {
  const std::string t = lowercase(text);
  if (t == "auto") return RuleOfThumbH{c_h};
  if (t == "cv") {
    CrossValidatedH cv;
    cv.folds = folds;
    return cv;
  }
  return FixedH{parse_positive(text, "--h")};
}

json error_json(const std::string& kind, const std::string& message) {
  return json{{"error", {{"kind", kind}, {"message", message}}}};
}

// ---- fit ----------------------------------------------------------------

struct FitArgs {
  std::string data, spec, kernel = "sigmoid", h = "auto", tau = "auto", out;
  double c_h = 1.0;
  int folds = 5;
  int bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  int max_iter = 50;
  double tol = 1e-6;
  int eta_starts = 20;
  double eta_bound = 10.0;
  unsigned threads = 0;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const ColumnSpec spec = read_column_spec_file(a.spec);
  const Dataset d = load_csv(a.data, spec);
  validate_dataset(d);

  FitConfig cfg;
  cfg.kernel = kernel_kind_from_string(a.kernel);
  cfg.h_policy = parse_h(a.h, a.c_h, a.folds);
  cfg.tau_policy = parse_tau(a.tau);
  cfg.max_outer_iter = a.max_iter;
  cfg.tol = a.tol;
  cfg.seed = a.seed;
  cfg.eta_starts = a.eta_starts;
  cfg.eta_bound = a.eta_bound;
  cfg.validate();

  const SmoothedFitResult fit = fit_alternating(d, cfg);
  json doc;
  doc["command"] = "fit";
  doc["n"] = d.n();
  doc["p"] = d.p();
  doc["q"] = d.q();
  doc["r"] = d.r();
  doc["kernel"] = to_string(fit.kernel);
  doc["h"] = fit.h;
  doc["tau"] = number(fit.tau);
  doc["alpha"] = vec(fit.params.alpha);
  doc["beta"] = vec(fit.params.beta);
  doc["eta"] = vec(fit.params.eta);
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  json trace = json::array();
  for (double v : fit.loss_trace) trace.push_back(number(v));
  doc["loss_trace"] = trace;
  doc["subgroup_labels"] = fit.subgroup_labels;
  double ones = 0.0;
  for (int l : fit.subgroup_labels) ones += l;
  doc["subgroup_fraction"] = ones / static_cast<double>(d.n());
  doc["seed"] = a.seed;

  if (a.bootstrap > 0) {
    BootstrapOptions options;
    options.threads = resolve_threads(a.threads);
    const BootstrapCI ci = bootstrap_ci(d, cfg, fit, a.bootstrap, a.level, options);
    doc["confidence_intervals"] = {{"level", ci.level},
                                   {"B", ci.B},
                                   {"dropped", ci.dropped},
                                   {"lower", vec(ci.lower)},
                                   {"upper", vec(ci.upper)}};
  }
  emit(doc, a.out, out);
  return kSuccess;
}

// ---- test ---------------------------------------------------------------

struct TestArgs {
  std::string data, spec, method = "rwast", tau, out;
  int B = 300;
  int sst_grid = 1000;
  double level = 0.05;
  std::uint64_t seed = 0;
  bool timing = false;
  unsigned threads = 0;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const ColumnSpec spec = read_column_spec_file(a.spec);
  const Dataset d = load_csv(a.data, spec);
  if (!(a.level > 0.0 && a.level < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "--level must lie in (0, 1)");
  }

  TestOptions options;
  options.method = test_method_from_string(lowercase(a.method));
  options.B = a.B;
  options.sst_grid = a.sst_grid;
  if (!a.tau.empty()) options.tau = parse_tau(a.tau);
  options.threads = resolve_threads(a.threads);
  const TestResult result = bootstrap_pvalue(d, options, derive_stream(a.seed, 0));

  double mean = 0.0;
  for (double t : result.bootstrap_stats) mean += t;
  mean /= static_cast<double>(result.bootstrap_stats.size());
  double ss = 0.0;
  for (double t : result.bootstrap_stats) ss += (t - mean) * (t - mean);
  std::vector<double> sorted = result.bootstrap_stats;
  std::sort(sorted.begin(), sorted.end());
  const auto q95 = sorted[static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1];

  json doc;
  doc["command"] = "test";
  doc["method"] = to_string(result.method);
  doc["n"] = d.n();
  doc["statistic"] = number(result.statistic);
  doc["p_value"] = result.p_value;
  doc["B"] = result.B;
  doc["tau"] = number(result.tau);
  doc["level"] = a.level;
  doc["reject"] = result.p_value <= a.level;
  doc["bootstrap"] = {{"mean", number(mean)},
                      {"sd", number(std::sqrt(ss / static_cast<double>(sorted.size() - 1)))},
                      {"q95", number(q95)}};
  doc["seed"] = a.seed;
  if (a.timing) {
    doc["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  emit(doc, a.out, out);
  return kSuccess;
}

// ---- simulate -----------------------------------------------------------

struct SimulateArgs {
  std::string suite, config, out_dir;
  std::optional<int> reps;
  std::optional<int> B;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const std::string suite_name = lowercase(a.suite);
  Suite suite;
  if (suite_name == "estimation") {
    suite = Suite::estimation;
  } else if (suite_name == "test") {
    suite = Suite::test;
  } else {
    throw Error(ErrorKind::invalid_argument, "--suite must be estimation or test");
  }
  json j = json::object();
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + a.config + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse, std::string("config is not valid JSON: ") + e.what());
    }
  }
  SimulationConfig cfg = parse_simulation_config(j, suite);
  if (a.reps) cfg.reps = *a.reps;
  if (a.B) cfg.B = *a.B;

  fs::create_directories(a.out_dir);
  const unsigned threads = resolve_threads(a.threads);
  ExperimentReport report;
  std::string plot;
  if (suite == Suite::estimation) {
    report = run_estimation_experiment(cfg.estimation, cfg.reps, a.seed, threads);
    plot = estimation_plot_csv(report);
  } else {
    report = run_test_experiment(cfg.test, cfg.reps, cfg.B, a.seed, threads);
    plot = test_plot_csv(report);
  }
  const std::string report_path = (fs::path(a.out_dir) / "report.csv").string();
  const std::string plot_path = (fs::path(a.out_dir) / "plot_data.csv").string();
  write_text(report_path, report_csv(report));
  write_text(plot_path, plot);

  json doc;
  doc["command"] = "simulate";
  doc["suite"] = suite_name;
  doc["rows"] = report.rows.size();
  doc["report"] = report_path;
  doc["plot_data"] = plot_path;
  out << doc.dump(2) << "\n";
  return kSuccess;
}

// ---- generate -----------------------------------------------------------

struct GenerateArgs {
  int n = 200, p = 3, q = 3, r = 3;
  std::string dist = "gaussian", out, spec_out, truth_out;
  double beta_scale = 1.0;
  double design_scale = 1.4142135623730951;
  bool separate_z = false;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  DgpConfig cfg;
  cfg.n = a.n;
  cfg.p = a.p;
  cfg.q = a.q;
  cfg.r = a.r;
  cfg.error_dist = error_dist_from_string(lowercase(a.dist));
  cfg.beta_scale = a.beta_scale;
  cfg.design_scale = a.design_scale;
  cfg.z_equals_x = !a.separate_z;
  cfg.seed = a.seed;
  const GeneratedData gen = gen_dataset(cfg);
  const Dataset& d = gen.data;

  ColumnSpec spec;
  spec.response = "y";
  spec.add_intercept_x = spec.add_intercept_z = spec.add_intercept_u = true;
  std::vector<std::string> header{"y"};
  std::vector<const Matrix*> blocks;
  const auto add_block = [&](const Matrix& M, const std::string& prefix,
                             std::vector<std::string>& names) {
    for (Index j = 1; j < M.cols(); ++j) {
      names.push_back(prefix + std::to_string(j + 1));
      header.push_back(names.back());
    }
    blocks.push_back(&M);
  };
  add_block(d.X, "x", spec.baseline);
  if (cfg.z_equals_x) {
    spec.difference = spec.baseline;
  } else {
    add_block(d.Z, "z", spec.difference);
  }
  add_block(d.U, "u", spec.grouping);

  std::ostringstream csv;
  for (std::size_t k = 0; k < header.size(); ++k) csv << (k ? "," : "") << csv_escape(header[k]);
  csv << "\n";
  for (Index i = 0; i < d.n(); ++i) {
    csv << format_number(d.y(i));
    for (const Matrix* M : blocks) {
      for (Index j = 1; j < M->cols(); ++j) csv << "," << format_number((*M)(i, j));
    }
    csv << "\n";
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  if (!a.spec_out.empty()) write_text(a.spec_out, column_spec_to_json(spec));
  if (!a.truth_out.empty()) {
    json truth;
    truth["alpha"] = vec(gen.truth.alpha);
    truth["beta"] = vec(gen.truth.beta);
    truth["eta"] = vec(gen.truth.eta);
    truth["gamma1"] = gen.gamma1;
    truth["labels"] = gen.labels_true;
    write_text(a.truth_out, truth.dump(2) + "\n");
  }
  return kSuccess;
}

// ---- config parsing -----------------------------------------------------

[[noreturn]] void config_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorKind::parse, "invalid config at " + pointer + ": " + what);
}

template <typename T, typename Convert>
std::vector<T> config_list(const json& j, const std::string& key, Convert convert) {
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) config_error("/" + key, "expected a nonempty array");
  std::vector<T> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string pointer = "/" + key + "/" + std::to_string(k);
    try {
      out.push_back(convert(v[k], pointer));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::parse) throw;
      config_error(pointer, e.what());
    }
  }
  return out;
}

Index config_int(const json& v, const std::string& pointer, Index lo) {
  if (!v.is_number_integer() || v.get<long long>() < lo) {
    config_error(pointer, "expected an integer >= " + std::to_string(lo));
  }
  return static_cast<Index>(v.get<long long>());
}

double config_real(const json& v, const std::string& pointer) {
  if (!v.is_number()) config_error(pointer, "expected a number");
  return v.get<double>();
}

std::string config_string(const json& v, const std::string& pointer) {
  if (!v.is_string()) config_error(pointer, "expected a string");
  return v.get<std::string>();
}

bool config_bool(const json& v, const std::string& pointer) {
  if (!v.is_boolean()) config_error(pointer, "expected a boolean");
  return v.get<bool>();
}

}  // namespace

unsigned resolve_threads(unsigned flag_value) {
  if (const char* env = std::getenv("CHANGEPLANE_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0') {
      throw Error(ErrorKind::invalid_argument,
                  std::string("CHANGEPLANE_THREADS must be a nonnegative integer, got '") + env + "'");
    }
    return static_cast<unsigned>(v);
  }
  return flag_value;
}

SimulationConfig parse_simulation_config(const json& j, Suite suite) {
  if (!j.is_object()) config_error("/", "expected a JSON object");
  static const std::set<std::string> known{
      "ns",   "error_dists", "methods",        "beta_scales", "p",          "q",
      "r",    "design_scale", "z_equals_x",    "kernel",      "h",          "c_h",
      "max_outer_iter", "tol", "eta_starts",   "eta_bound",   "sst_grid",   "level",
      "reps", "B"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) config_error("/" + item.key(), "unknown key");
  }

  SimulationConfig cfg;
  if (suite == Suite::test) {
    cfg.test.beta_scales = {0.0};
  }
  DgpConfig dgp;
  FitConfig fit;
  std::vector<Index> ns = suite == Suite::estimation ? cfg.estimation.ns : cfg.test.ns;
  std::vector<ErrorDist> dists{ErrorDist::pareto21};
  std::vector<double> scales = suite == Suite::estimation ? cfg.estimation.beta_scales
                                                          : cfg.test.beta_scales;

  if (j.contains("ns")) {
    ns = config_list<Index>(j, "ns", [](const json& v, const std::string& ptr) {
      return config_int(v, ptr, 2);
    });
  }
  if (j.contains("error_dists")) {
    dists = config_list<ErrorDist>(j, "error_dists", [](const json& v, const std::string& ptr) {
      return error_dist_from_string(config_string(v, ptr));
    });
  }
  if (j.contains("beta_scales")) {
    scales = config_list<double>(j, "beta_scales", [](const json& v, const std::string& ptr) {
      const double s = config_real(v, ptr);
      if (!(s >= 0.0)) config_error(ptr, "expected a nonnegative number");
      return s;
    });
  }
  if (j.contains("methods")) {
    if (suite == Suite::estimation) {
      cfg.estimation.methods = config_list<EstimationMethod>(
          j, "methods", [](const json& v, const std::string& ptr) {
            return estimation_method_from_string(config_string(v, ptr));
          });
    } else {
      cfg.test.methods =
          config_list<TestMethod>(j, "methods", [](const json& v, const std::string& ptr) {
            return test_method_from_string(lowercase(config_string(v, ptr)));
          });
    }
  }
  if (j.contains("p")) dgp.p = config_int(j["p"], "/p", 1);
  if (j.contains("q")) dgp.q = config_int(j["q"], "/q", 1);
  if (j.contains("r")) dgp.r = config_int(j["r"], "/r", 2);
  if (j.contains("design_scale")) {
    dgp.design_scale = config_real(j["design_scale"], "/design_scale");
    if (!(dgp.design_scale > 0.0)) config_error("/design_scale", "expected a positive number");
  }
  if (j.contains("z_equals_x")) dgp.z_equals_x = config_bool(j["z_equals_x"], "/z_equals_x");
  if (dgp.z_equals_x && dgp.q != dgp.p) config_error("/q", "z_equals_x requires q = p");

  if (j.contains("kernel")) {
    try {
      fit.kernel = kernel_kind_from_string(config_string(j["kernel"], "/kernel"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::parse) throw;
      config_error("/kernel", e.what());
    }
  }
  double c_h = 1.0;
  if (j.contains("c_h")) {
    c_h = config_real(j["c_h"], "/c_h");
    if (!(c_h > 0.0)) config_error("/c_h", "expected a positive number");
  }
  fit.h_policy = RuleOfThumbH{c_h};
  if (j.contains("h")) {
    const json& h = j["h"];
    if (h.is_string()) {
      try {
        fit.h_policy = parse_h(h.get<std::string>(), c_h, 5);
      } catch (const Error& e) {
        config_error("/h", e.what());
      }
    } else if (h.is_number() && h.get<double>() > 0.0) {
      fit.h_policy = FixedH{h.get<double>()};
    } else {
      config_error("/h", "expected \"auto\", \"cv\" or a positive number");
    }
  }
  if (j.contains("max_outer_iter")) {
    fit.max_outer_iter = static_cast<int>(config_int(j["max_outer_iter"], "/max_outer_iter", 1));
  }
  if (j.contains("tol")) {
    fit.tol = config_real(j["tol"], "/tol");
    if (!(fit.tol > 0.0)) config_error("/tol", "expected a positive number");
  }
  if (j.contains("eta_starts")) {
    fit.eta_starts = static_cast<int>(config_int(j["eta_starts"], "/eta_starts", 0));
  }
  if (j.contains("eta_bound")) {
    fit.eta_bound = config_real(j["eta_bound"], "/eta_bound");
    if (!(fit.eta_bound > 0.0)) config_error("/eta_bound", "expected a positive number");
  }
  if (j.contains("sst_grid")) {
    cfg.test.sst_grid = static_cast<int>(config_int(j["sst_grid"], "/sst_grid", 1));
  }
  if (j.contains("level")) {
    cfg.test.level = config_real(j["level"], "/level");
    if (!(cfg.test.level > 0.0 && cfg.test.level < 1.0)) {
      config_error("/level", "expected a number in (0, 1)");
    }
  }
  if (j.contains("reps")) cfg.reps = static_cast<int>(config_int(j["reps"], "/reps", 1));
  if (j.contains("B")) cfg.B = static_cast<int>(config_int(j["B"], "/B", 100));
  for (Index n : ns) {
    if (n < std::max(dgp.p + dgp.q, dgp.r) + 1) {
      config_error("/ns", "n = " + std::to_string(n) + " is too small for p, q, r");
    }
  }

  cfg.estimation.ns = cfg.test.ns = ns;
  cfg.estimation.dists = cfg.test.dists = dists;
  cfg.estimation.beta_scales = cfg.test.beta_scales = scales;
  cfg.estimation.dgp = cfg.test.dgp = dgp;
  cfg.estimation.fit = fit;
  return cfg;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,n,error_dist,beta_scale,metric,median,iqr,mean,mc_se,replications,failures\n";
  for (const ReportRow& row : report.rows) {
    out << csv_escape(row.method) << ',' << row.n << ',' << csv_escape(row.error_dist) << ','
        << format_number(row.beta_scale) << ',' << csv_escape(row.metric) << ','
        << format_number(row.median) << ',' << format_number(row.iqr) << ','
        << format_number(row.mean) << ',' << format_number(row.mc_se) << ','
        << row.replications << ',' << row.failures << '\n';
  }
  return out.str();
}

std::string estimation_plot_csv(const ExperimentReport& report) {
  // (method, dist, beta_scale, n) -> (l2 median, l2 iqr, acc median, acc iqr)
  std::map<std::tuple<std::string, std::string, double, Index>, std::array<double, 4>> table;
  for (const ReportRow& row : report.rows) {
    auto& cell = table[{row.method, row.error_dist, row.beta_scale, row.n}];
    if (row.metric == "l2_error") {
      cell[0] = row.median;
      cell[1] = row.iqr;
    } else if (row.metric == "accuracy") {
      cell[2] = row.median;
      cell[3] = row.iqr;
    }
  }
  std::ostringstream out;
  out << "method,error_dist,beta_scale,n,l2_error_median,l2_error_iqr,accuracy_median,"
         "accuracy_iqr\n";
  for (const auto& [key, v] : table) {
    out << csv_escape(std::get<0>(key)) << ',' << csv_escape(std::get<1>(key)) << ','
        << format_number(std::get<2>(key)) << ',' << std::get<3>(key) << ','
        << format_number(v[0]) << ',' << format_number(v[1]) << ',' << format_number(v[2])
        << ',' << format_number(v[3]) << '\n';
  }
  return out.str();
}

std::string test_plot_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,error_dist,n,beta_scale,rejection_rate,mc_se\n";
  std::map<std::tuple<std::string, std::string, Index, double>, const ReportRow*> table;
  for (const ReportRow& row : report.rows) {
    if (row.metric == "rejection_rate") table[{row.method, row.error_dist, row.n, row.beta_scale}] = &row;
  }
  for (const auto& [key, row] : table) {
    out << csv_escape(std::get<0>(key)) << ',' << csv_escape(std::get<1>(key)) << ','
        << std::get<2>(key) << ',' << format_number(std::get<3>(key)) << ','
        << format_number(row->mean) << ',' << format_number(row->mc_se) << '\n';
  }
  return out.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust change-plane regression: fitting, subgroup tests, simulation"};
  app.name("changeplane");
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit the smoothed Huber change-plane model to a CSV");
  fit->set_help_flag("--help", "Print this help message and exit");
  fit->add_option("--data", fa.data, "Input CSV")->required();
  fit->add_option("--spec", fa.spec, "Column spec JSON")->required();
  fit->add_option("--kernel", fa.kernel, "sigmoid | normcdf | normmix")->capture_default_str();
  fit->add_option("--h", fa.h, "auto | cv | <value>")->capture_default_str();
  fit->add_option("--c-h", fa.c_h, "Rule-of-thumb constant")->capture_default_str();
  fit->add_option("--cv-folds", fa.folds, "Folds for --h cv")->capture_default_str();
  fit->add_option("--tau", fa.tau, "auto | inf | <value>")->capture_default_str();
  fit->add_option("--bootstrap", fa.bootstrap, "Bootstrap replicates for intervals (0 = none)");
  fit->add_option("--level", fa.level, "Interval coverage")->capture_default_str();
  fit->add_option("--seed", fa.seed, "Random seed")->capture_default_str();
  fit->add_option("--max-iter", fa.max_iter, "Outer iterations")->capture_default_str();
  fit->add_option("--tol", fa.tol, "Relative objective tolerance")->capture_default_str();
  fit->add_option("--eta-starts", fa.eta_starts, "Random restarts per eta step")->capture_default_str();
  fit->add_option("--eta-bound", fa.eta_bound, "Largest admissible ||eta||")->capture_default_str();
  fit->add_option("--threads", fa.threads, "Worker threads (0 = all cores)");
  fit->add_option("--out", fa.out, "Output JSON path (default stdout)");

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Test for subgroup existence (H0: beta = 0)");
  test->add_option("--data", ta.data, "Input CSV")->required();
  test->add_option("--spec", ta.spec, "Column spec JSON")->required();
  test->add_option("--method", ta.method, "rwast | wast | sst")->capture_default_str();
  test->add_option("--B", ta.B, "Bootstrap replicates")->capture_default_str();
  test->add_option("--sst-grid", ta.sst_grid, "Directions for sst")->capture_default_str();
  test->add_option("--tau", ta.tau, "Null-fit tau: auto | inf | <value>");
  test->add_option("--level", ta.level, "Rejection level")->capture_default_str();
  test->add_option("--seed", ta.seed, "Random seed")->capture_default_str();
  test->add_flag("--timing", ta.timing, "Include runtime_seconds in the output");
  test->add_option("--threads", ta.threads, "Worker threads (0 = all cores)");
  test->add_option("--out", ta.out, "Output JSON path (default stdout)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run an estimation or test simulation suite");
  sim->add_option("--suite", sa.suite, "estimation | test")->required();
  sim->add_option("--config", sa.config, "Suite config JSON");
  sim->add_option("--reps", sa.reps, "Replications per cell");
  sim->add_option("--B", sa.B, "Bootstrap replicates (test suite)");
  sim->add_option("--seed", sa.seed, "Base seed")->capture_default_str();
  sim->add_option("--out-dir", sa.out_dir, "Directory for report.csv and plot_data.csv")->required();
  sim->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a simulated dataset as CSV");
  gen->add_option("--n", ga.n, "Sample size")->capture_default_str();
  gen->add_option("--p", ga.p)->capture_default_str();
  gen->add_option("--q", ga.q)->capture_default_str();
  gen->add_option("--r", ga.r)->capture_default_str();
  gen->add_option("--dist", ga.dist, "Error distribution")->capture_default_str();
  gen->add_option("--beta-scale", ga.beta_scale, "Signal multiplier")->capture_default_str();
  gen->add_option("--design-scale", ga.design_scale, "Design variance")->capture_default_str();
  gen->add_flag("--separate-z", ga.separate_z, "Draw Z independently of X");
  gen->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", ga.out, "Output CSV path (default stdout)");
  gen->add_option("--spec-out", ga.spec_out, "Write a matching column spec JSON");
  gen->add_option("--truth-out", ga.truth_out, "Write the true parameters as JSON");

  std::vector<std::string> owned{"changeplane"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : owned) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    out << error_json("usage", e.what()).dump(2) << "\n";
    return kUserError;
  }

  try {
    if (fit->parsed()) return cmd_fit(fa, out);
    if (test->parsed()) return cmd_test(ta, out);
    if (sim->parsed()) return cmd_simulate(sa, out);
    if (gen->parsed()) return cmd_generate(ga, out);
  } catch (const Error& e) {
    out << error_json(to_string(e.kind()), e.what()).dump(2) << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    out << error_json("internal", e.what()).dump(2) << "\n";
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace changeplane::cli
