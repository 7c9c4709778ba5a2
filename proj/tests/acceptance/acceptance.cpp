// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.
// usage: acceptance [criterion ...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "changeplane/experiment.hpp"
#include "changeplane/fit.hpp"
#include "changeplane/huber.hpp"
#include "changeplane/parallel.hpp"
#include "changeplane/simlab.hpp"
#include "changeplane/subgroup_test.hpp"

#ifdef CHANGEPLANE_HAVE_CLI
#include <filesystem>
#include <fstream>

#include "commands.hpp"
#endif

namespace cp = changeplane;
using cp::Matrix;
using cp::Vector;

namespace {

constexpr std::uint64_t kSeed = 20240917;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

unsigned threads() { return cp::default_thread_count(); }

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// ---- 1 ------------------------------------------------------------------

Outcome weight_identity() {
  double worst = 0.0;
  std::string where;
  for (cp::Index r : {2, 3, 5}) {
    for (int k = 0; k <= 20; ++k) {
      const double rho = -1.0 + 0.1 * k;
      Vector ui = Vector::Zero(r), uj = Vector::Zero(r);
      ui(0) = 1.0;
      uj(0) = rho;
      uj(1) = std::sqrt(std::max(0.0, 1.0 - rho * rho));
      const double w = cp::pair_weight(ui, uj);
      cp::RngStream s = cp::derive_stream(kSeed, cp::combine_ids({1, std::uint64_t(r), std::uint64_t(k)}));
      const int draws = 1000000;
      int both = 0;
      Vector g(r);
      for (int b = 0; b < draws; ++b) {
        for (cp::Index j = 0; j < r; ++j) g(j) = s.normal();
        both += ui.dot(g) >= 0.0 && uj.dot(g) >= 0.0;
      }
      const double err = std::abs(w - double(both) / draws);
      if (err > worst) {
        worst = err;
        where = fmt("r=%d rho=%.1f", int(r), rho);
      }
    }
  }
  return {worst < 0.003, fmt("max |w - MC| = %.5f at %s over 63 pairs, tol 0.003", worst, where.c_str())};
}

// ---- 2 ------------------------------------------------------------------

Outcome gradient_check() {
  double worst = 0.0;
  const cp::KernelKind kinds[] = {cp::KernelKind::sigmoid, cp::KernelKind::normal_cdf,
                                  cp::KernelKind::normal_mix};
  for (int inst = 0; inst < 100; ++inst) {
    cp::DgpConfig dgp;
    dgp.n = 50;
    dgp.seed = cp::combine_ids({kSeed, 2, std::uint64_t(inst)});
    const auto gen = cp::gen_dataset(dgp);
    cp::RngStream s = cp::derive_stream(dgp.seed, 1);
    cp::ChangePlaneParams z = gen.truth;
    for (cp::Index k = 0; k < z.alpha.size(); ++k) z.alpha(k) += 0.5 * s.normal();
    for (cp::Index k = 0; k < z.beta.size(); ++k) z.beta(k) += 0.5 * s.normal();
    for (cp::Index k = 0; k < z.eta.size(); ++k) z.eta(k) += 0.5 * s.normal();
    const double tau = inst % 4 == 3 ? kInf : 0.5 + 3.0 * s.uniform();
    const double h = 0.1 + s.uniform();
    for (cp::KernelKind kind : kinds) {
      const cp::KernelSpec spec{kind, h};
      const Vector g = cp::smoothed_loss_grad(gen.data, z, tau, spec);
      const Vector base = z.stacked();
      Vector fd(base.size());
      for (cp::Index k = 0; k < base.size(); ++k) {
        const double step = 1e-6 * std::max(1.0, std::abs(base(k)));
        Vector up = base, dn = base;
        up(k) += step;
        dn(k) -= step;
        const auto pu = cp::ChangePlaneParams::from_stacked(up, 3, 3, 3);
        const auto pd = cp::ChangePlaneParams::from_stacked(dn, 3, 3, 3);
        fd(k) = (cp::smoothed_loss(gen.data, pu, tau, spec) - cp::smoothed_loss(gen.data, pd, tau, spec)) /
                (2 * step);
      }
      worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / g.lpNorm<Eigen::Infinity>());
    }
  }
  return {worst < 1e-5, fmt("max relative error %.3g over 300 gradients, tol 1e-5", worst)};
}

// ---- 3 ------------------------------------------------------------------

Outcome huber_degeneracy() {
  double ls_worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    cp::RngStream s = cp::derive_stream(kSeed, cp::combine_ids({3, std::uint64_t(inst)}));
    const cp::Index n = 30 + static_cast<cp::Index>(s.below(200));
    const cp::Index p = 1 + static_cast<cp::Index>(s.below(6));
    Matrix W(n, p);
    Vector y(n);
    for (cp::Index i = 0; i < n; ++i) {
      for (cp::Index j = 0; j < p; ++j) W(i, j) = s.normal();
      y(i) = 3.0 * s.normal() + (s.uniform() < 0.1 ? 50.0 * s.normal() : 0.0);
    }
    const Vector qr = (W.transpose() * W).ldlt().solve(W.transpose() * y);
    const cp::HuberFit fit = cp::huber_fit_fixed_tau(W, y, kInf);
    const cp::NullFit nf = cp::fit_null(W, y, cp::InfiniteTau{});
    const double scale = std::max(1.0, qr.norm());
    ls_worst = std::max({ls_worst, (fit.theta - qr).norm() / scale, (nf.alpha_tau - qr).norm() / scale});
  }
  double cal_worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    cp::RngStream s = cp::derive_stream(kSeed, cp::combine_ids({31, std::uint64_t(inst)}));
    const cp::Index n = 20 + static_cast<cp::Index>(s.below(500));
    Vector r(n);
    const auto dist = cp::all_error_dists()[s.below(8)];
    r = cp::gen_errors(dist, n, s);
    const double d = double(s.below(6));
    const double z = std::log(double(n));
    const double tau = cp::calibrate_tau(r, d, z);
    double lhs = 0.0;
    for (cp::Index i = 0; i < n; ++i) lhs += std::min(r(i) * r(i), tau * tau) / (tau * tau);
    cal_worst = std::max(cal_worst, std::abs(lhs - (d + z)));
  }
  return {ls_worst < 1e-8 && cal_worst < 1e-8,
          fmt("tau=inf vs normal equations: max rel diff %.3g (50 instances); calibrate_tau "
              "equation residual max %.3g (100 vectors); tol 1e-8",
              ls_worst, cal_worst)};
}

// ---- 4, 10 ----------------------------------------------------------------

cp::ExperimentReport& null_rwast_report() {
  static cp::ExperimentReport report = [] {
    cp::TestGrid grid;
    grid.ns = {200};
    grid.dists = {cp::ErrorDist::pareto21};
    grid.methods = {cp::TestMethod::rwast};
    grid.beta_scales = {0.0};
    return cp::run_test_experiment(grid, 500, 300, kSeed, threads());
  }();
  return report;
}

Outcome type_one_error() {
  const auto& row = null_rwast_report().find("rwast", 200, "pareto21", 0.0, "rejection_rate");
  const bool pass = row.failures == 0 && row.mean >= 0.02 && row.mean <= 0.09;
  return {pass, fmt("RWAST n=200 Pareto null, 500 reps, B=300: rejection rate %.3f (mc_se %.3f, "
                    "failures %d), band [0.02, 0.09]",
                    row.mean, row.mc_se, row.failures)};
}

Outcome pvalue_uniformity() {
  const auto& row = null_rwast_report().find("rwast", 200, "pareto21", 0.0, "p_value");
  const double d = ks_distance(row.values, [](double p) { return std::clamp(p, 0.0, 1.0); });
  return {row.values.size() == 500 && d < 0.1,
          fmt("KS distance of %zu null p-values from U(0,1): %.4f, tol 0.1", row.values.size(), d)};
}

// ---- 5 ------------------------------------------------------------------

Outcome power_ordering() {
  cp::TestGrid grid;
  grid.ns = {400};
  grid.dists = {cp::ErrorDist::pareto21};
  grid.methods = {cp::TestMethod::rwast, cp::TestMethod::wast};
  grid.beta_scales = {0.0, 0.2, 0.4};
  const auto report = cp::run_test_experiment(grid, 300, 300, kSeed, threads());
  const auto rate = [&](const char* m, double s) -> const cp::ReportRow& {
    return report.find(m, 400, "pareto21", s, "rejection_rate");
  };
  bool pass = true;
  std::ostringstream detail;
  for (double s : {0.2, 0.4}) {
    const auto& r = rate("rwast", s);
    const auto& w = rate("wast", s);
    const bool ok = r.mean >= w.mean - 2.0 * w.mc_se;
    pass = pass && ok;
    detail << fmt("scale %.1f: RWAST %.3f vs WAST %.3f (mc_se %.3f)%s; ", s, r.mean, w.mean, w.mc_se,
                  ok ? "" : " [ordering violated]");
  }
  const double gain = rate("rwast", 0.4).mean - rate("rwast", 0.0).mean;
  pass = pass && gain >= 0.3;
  detail << fmt("RWAST power(0.4) - power(0) = %.3f, need >= 0.3", gain);
  return {pass, detail.str()};
}

// ---- 6, 7 ---------------------------------------------------------------

cp::ExperimentReport estimation_report(cp::ErrorDist dist) {
  cp::EstimationGrid grid;
  grid.ns = {200, 600};
  grid.dists = {dist};
  grid.methods = {cp::EstimationMethod::ahu, cp::EstimationMethod::ols};
  return cp::run_estimation_experiment(grid, 200, kSeed, threads());
}

Outcome estimation_robustness() {
  const auto report = estimation_report(cp::ErrorDist::pareto21);
  const auto med = [&](const char* m, cp::Index n, const char* metric) {
    return report.find(m, n, "pareto21", 1.0, metric).median;
  };
  bool pass = true;
  std::ostringstream detail;
  for (cp::Index n : {200, 600}) {
    const double la = med("AHu", n, "l2_error"), lo = med("OLS", n, "l2_error");
    const double aa = med("AHu", n, "accuracy"), ao = med("OLS", n, "accuracy");
    pass = pass && la <= lo && aa >= ao;
    detail << fmt("n=%d: L2 AHu %.3f vs OLS %.3f, ACC AHu %.4f vs OLS %.4f; ", int(n), la, lo, aa, ao);
  }
  const bool shrinks = med("AHu", 600, "l2_error") < med("AHu", 200, "l2_error");
  pass = pass && shrinks;
  detail << (shrinks ? "AHu L2 decreases with n" : "AHu L2 does not decrease with n");
  return {pass, detail.str()};
}

Outcome symmetric_comparability() {
  const auto report = estimation_report(cp::ErrorDist::gaussian);
  bool pass = true;
  std::ostringstream detail;
  for (cp::Index n : {200, 600}) {
    const double a = report.find("AHu", n, "gaussian", 1.0, "accuracy").median;
    const double o = report.find("OLS", n, "gaussian", 1.0, "accuracy").median;
    pass = pass && std::abs(a - o) < 0.02;
    detail << fmt("n=%d: median ACC AHu %.4f vs OLS %.4f (|diff| %.4f); ", int(n), a, o, std::abs(a - o));
  }
  detail << "tol 0.02";
  return {pass, detail.str()};
}

// ---- 8 ------------------------------------------------------------------

Outcome sst_null_calibration() {
  const int reps = 500;
  const Vector gamma = Vector{{0.3, 1.0, -0.5}}.normalized();
  std::vector<double> stats(reps);
  cp::parallel_for(reps, threads(), [&](std::size_t rep) {
    cp::DgpConfig dgp;
    dgp.n = 400;
    dgp.beta_scale = 0.0;
    dgp.seed = cp::combine_ids({kSeed, 8, rep});
    const auto gen = cp::gen_dataset(dgp);
    const cp::NullFit nf = cp::fit_null(gen.data.X, gen.data.y, cp::InfiniteTau{});
    stats[rep] = cp::sst_statistic_at(gen.data, nf, cp::score_pieces(gen.data, nf), gamma);
  });
  const boost::math::chi_squared chi(3.0);
  const double d = ks_distance(stats, [&](double x) { return boost::math::cdf(chi, std::max(0.0, x)); });
  return {d < 0.08, fmt("fixed-gamma score statistic, 500 Gaussian nulls at n=400: KS distance "
                        "from chi2_3 = %.4f, tol 0.08",
                        d)};
}

// ---- 9 ------------------------------------------------------------------

Outcome determinism() {
#ifdef CHANGEPLANE_HAVE_CLI
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "changeplane_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  {
    std::ofstream(root / "est.json") << R"({"ns": [150, 250], "error_dists": ["pareto21", "gaussian"]})";
    std::ofstream(root / "test.json") << R"({"ns": [150], "beta_scales": [0, 0.5], "sst_grid": 200})";
  }
  bool pass = true;
  std::ostringstream detail;
  for (const char* suite : {"estimation", "test"}) {
    std::vector<std::string> outputs;
    for (const char* t : {"1", "3", "8"}) {
      const fs::path dir = root / (std::string(suite) + "_" + t);
      std::ostringstream out, err;
      const int code = cp::cli::run({"simulate", "--suite", suite, "--config",
                                     (root / (std::string(suite) == "test" ? "test.json" : "est.json")).string(),
                                     "--reps", "6", "--B", "100", "--seed", "11", "--threads", t,
                                     "--out-dir", dir.string()},
                                    out, err);
      if (code != 0) {
        pass = false;
        detail << suite << " failed: " << out.str();
      }
      outputs.push_back(slurp(dir / "report.csv") + slurp(dir / "plot_data.csv"));
    }
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && !outputs[0].empty();
    pass = pass && same;
    detail << suite << " suite report.csv + plot_data.csv with 1/3/8 threads: "
           << (same ? "byte-identical" : "DIFFER") << "; ";
  }
  fs::remove_all(root);
  return {pass, detail.str()};
#else
  cp::EstimationGrid grid;
  grid.ns = {150, 250};
  const auto a = cp::run_estimation_experiment(grid, 6, 11, 1);
  const auto b = cp::run_estimation_experiment(grid, 6, 11, 8);
  bool same = a.rows.size() == b.rows.size();
  for (std::size_t k = 0; same && k < a.rows.size(); ++k) same = a.rows[k].values == b.rows[k].values;
  return {same, same ? "estimation rows identical with 1/8 threads" : "rows differ"};
#endif
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "pair weight identity", weight_identity},
      {2, "gradient correctness", gradient_check},
      {3, "Huber degeneracy", huber_degeneracy},
      {4, "RWAST type-I error", type_one_error},
      {5, "power ordering", power_ordering},
      {6, "estimation robustness", estimation_robustness},
      {7, "symmetric-error comparability", symmetric_comparability},
      {8, "SST null calibration", sst_null_calibration},
      {9, "determinism", determinism},
      {10, "bootstrap p-value uniformity", pvalue_uniformity},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
