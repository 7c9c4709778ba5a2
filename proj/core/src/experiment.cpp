#include "changeplane/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "changeplane/parallel.hpp"

namespace changeplane {

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double quantile7(const std::vector<double>& sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Cell {
  Index n;
  ErrorDist dist;
  double beta_scale;
};

std::vector<Cell> cells_of(const std::vector<Index>& ns, const std::vector<ErrorDist>& dists,
                           const std::vector<double>& scales) {
  std::vector<Cell> cells;
  for (Index n : ns) {
    for (ErrorDist dist : dists) {
      for (double s : scales) cells.push_back({n, dist, s});
    }
  }
  return cells;
}

TauPolicy policy_for(EstimationMethod method, const Vector& y) {
  switch (method) {
    case EstimationMethod::ahu: return AdaptiveTau{};
    case EstimationMethod::hub: return FixedTau{hub_tau(y)};
    case EstimationMethod::ols: return InfiniteTau{};
  }
  throw Error(ErrorKind::invalid_argument, "unknown estimation method");
}

// One slot per (replicate, method, metric); NaN marks a failure.
ReportRow make_row(const std::string& method, const Cell& cell, const std::string& metric,
                   const std::vector<double>& slots) {
  std::vector<double> kept;
  for (double v : slots) {
    if (!std::isnan(v)) kept.push_back(v);
  }
  ReportRow row = summarize(kept);
  row.method = method;
  row.n = cell.n;
  row.error_dist = to_string(cell.dist);
  row.beta_scale = cell.beta_scale;
  row.metric = metric;
  row.failures = static_cast<int>(slots.size() - kept.size());
  return row;
}

}  // namespace

const char* to_string(EstimationMethod method) {
  switch (method) {
    case EstimationMethod::ahu: return "AHu";
    case EstimationMethod::hub: return "Hub";
    case EstimationMethod::ols: return "OLS";
  }
  return "unknown";
}

EstimationMethod estimation_method_from_string(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ahu") return EstimationMethod::ahu;
  if (lower == "hub") return EstimationMethod::hub;
  if (lower == "ols") return EstimationMethod::ols;
  throw Error(ErrorKind::invalid_argument, "unknown estimation method '" + name + "'");
}

double hub_tau(const Vector& y) {
  if (y.size() == 0) throw Error(ErrorKind::invalid_argument, "hub_tau needs data");
  std::vector<double> v(y.data(), y.data() + y.size());
  const double med = median_of(v);
  for (double& x : v) x = std::abs(x - med);
  const double mad = median_of(v);
  const boost::math::normal_distribution<double> standard;
  const double tau = 1.345 * mad / boost::math::quantile(standard, 0.75);
  if (!(tau > 0.0)) throw Error(ErrorKind::unsolvable, "median absolute deviation of y is zero");
  return tau;
}

const ReportRow& ExperimentReport::find(const std::string& method, Index n,
                                        const std::string& error_dist, double beta_scale,
                                        const std::string& metric) const {
  for (const ReportRow& row : rows) {
    if (row.method == method && row.n == n && row.error_dist == error_dist &&
        row.beta_scale == beta_scale && row.metric == metric) {
      return row;
    }
  }
  std::ostringstream msg;
  msg << "no report row for " << method << ", n = " << n << ", " << error_dist << ", "
      << beta_scale << ", " << metric;
  throw Error(ErrorKind::invalid_argument, msg.str());
}

ReportRow summarize(std::vector<double> values) {
  ReportRow row;
  row.replications = static_cast<int>(values.size());
  row.values = values;
  if (values.empty()) {
    row.median = row.iqr = row.mean = row.mc_se = std::nan("");
    return row;
  }
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  row.median = quantile7(values, 0.5);
  row.iqr = quantile7(values, 0.75) - quantile7(values, 0.25);
  // Sorted summation keeps the mean independent of completion order.
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / m;
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.mc_se = values.size() > 1 ? std::sqrt(ss / (m - 1.0)) / std::sqrt(m) : 0.0;
  return row;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, Index n, ErrorDist dist,
                             double beta_scale, int rep) {
  return combine_ids({base_seed, static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(dist), std::bit_cast<std::uint64_t>(beta_scale),
                      static_cast<std::uint64_t>(rep)});
}

ExperimentReport run_estimation_experiment(const EstimationGrid& grid, int reps,
                                           std::uint64_t base_seed, unsigned threads) {
  if (reps < 1) throw Error(ErrorKind::invalid_argument, "reps must be at least 1");
  if (grid.methods.empty()) throw Error(ErrorKind::invalid_argument, "no estimation methods");
  const std::vector<Cell> cells = cells_of(grid.ns, grid.dists, grid.beta_scales);
  const std::size_t per_cell = static_cast<std::size_t>(reps);
  const std::size_t nm = grid.methods.size();
  // slots[(cell * reps + rep) * nm + method] = (l2, acc)
  std::vector<std::pair<double, double>> slots(cells.size() * per_cell * nm,
                                               {std::nan(""), std::nan("")});

  parallel_for(cells.size() * per_cell, threads, [&](std::size_t unit) {
    const Cell& cell = cells[unit / per_cell];
    const int rep = static_cast<int>(unit % per_cell);
    DgpConfig dgp = grid.dgp;
    dgp.n = cell.n;
    dgp.error_dist = cell.dist;
    dgp.beta_scale = cell.beta_scale;
    dgp.seed = replicate_seed(base_seed, cell.n, cell.dist, cell.beta_scale, rep);
    const GeneratedData gen = gen_dataset(dgp);
    for (std::size_t m = 0; m < nm; ++m) {
      try {
        FitConfig cfg = grid.fit;
        cfg.seed = dgp.seed;
        cfg.tau_policy = policy_for(grid.methods[m], gen.data.y);
        const SmoothedFitResult fit = fit_alternating(gen.data, cfg);
        slots[unit * nm + m] = {l2_error(fit.params, gen.truth),
                                accuracy(fit.subgroup_labels, gen.labels_true)};
      } catch (const Error&) {
        // left as NaN and counted as a failure
      }
    }
  });

  ExperimentReport report;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> l2(per_cell);
      std::vector<double> acc(per_cell);
      for (std::size_t rep = 0; rep < per_cell; ++rep) {
        const auto& s = slots[(c * per_cell + rep) * nm + m];
        l2[rep] = s.first;
        acc[rep] = s.second;
      }
      const std::string name = to_string(grid.methods[m]);
      report.rows.push_back(make_row(name, cells[c], "l2_error", l2));
      report.rows.push_back(make_row(name, cells[c], "accuracy", acc));
    }
  }
  return report;
}

ExperimentReport run_test_experiment(const TestGrid& grid, int reps, int B,
                                     std::uint64_t base_seed, unsigned threads) {
  if (reps < 1) throw Error(ErrorKind::invalid_argument, "reps must be at least 1");
  if (B < 100) throw Error(ErrorKind::invalid_argument, "bootstrap needs B >= 100");
  if (grid.methods.empty()) throw Error(ErrorKind::invalid_argument, "no test methods");
  if (!(grid.level > 0.0 && grid.level < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "level must lie in (0, 1)");
  }
  const std::vector<Cell> cells = cells_of(grid.ns, grid.dists, grid.beta_scales);
  const std::size_t per_cell = static_cast<std::size_t>(reps);
  const std::size_t nm = grid.methods.size();
  std::vector<double> pvalues(cells.size() * per_cell * nm, std::nan(""));

  parallel_for(cells.size() * per_cell, threads, [&](std::size_t unit) {
    const Cell& cell = cells[unit / per_cell];
    const int rep = static_cast<int>(unit % per_cell);
    DgpConfig dgp = grid.dgp;
    dgp.n = cell.n;
    dgp.error_dist = cell.dist;
    dgp.beta_scale = cell.beta_scale;
    dgp.seed = replicate_seed(base_seed, cell.n, cell.dist, cell.beta_scale, rep);
    const GeneratedData gen = gen_dataset(dgp);
    for (std::size_t m = 0; m < nm; ++m) {
      try {
        TestOptions options;
        options.method = grid.methods[m];
        options.B = B;
        options.sst_grid = grid.sst_grid;
        const RngStream stream =
            derive_stream(dgp.seed, static_cast<std::uint64_t>(grid.methods[m]));
        pvalues[unit * nm + m] = bootstrap_pvalue(gen.data, options, stream).p_value;
      } catch (const Error&) {
      }
    }
  });

  ExperimentReport report;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> p(per_cell);
      std::vector<double> reject(per_cell);
      for (std::size_t rep = 0; rep < per_cell; ++rep) {
        p[rep] = pvalues[(c * per_cell + rep) * nm + m];
        reject[rep] = std::isnan(p[rep]) ? p[rep] : (p[rep] <= grid.level ? 1.0 : 0.0);
      }
      const std::string name = to_string(grid.methods[m]);
      report.rows.push_back(make_row(name, cells[c], "rejection_rate", reject));
      report.rows.push_back(make_row(name, cells[c], "p_value", p));
    }
  }
  return report;
}

}  // namespace changeplane
