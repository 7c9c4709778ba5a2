#pragma once

#include <string>
#include <vector>

#include "changeplane/fit.hpp"
#include "changeplane/simlab.hpp"
#include "changeplane/subgroup_test.hpp"

namespace changeplane {

enum class EstimationMethod {
  ahu,  // adaptive tau
  hub,  // tau = 1.345 MAD(y) / Phi^{-1}(0.75)
  ols,  // tau = inf
};

const char* to_string(EstimationMethod method);
EstimationMethod estimation_method_from_string(const std::string& name);

/// 1.345 * median|y - median(y)| / Phi^{-1}(0.75).
double hub_tau(const Vector& y);

struct ReportRow {
  std::string method;
  Index n = 0;
  std::string error_dist;
  double beta_scale = 0.0;
  std::string metric;
  double median = 0.0;
  double iqr = 0.0;
  double mean = 0.0;
  double mc_se = 0.0;  // sample sd / sqrt(replications)
  int replications = 0;
  int failures = 0;
  // Per-replicate values in replicate order (failures omitted).
  std::vector<double> values;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;

  // First row matching all keys; throws when absent.
  const ReportRow& find(const std::string& method, Index n, const std::string& error_dist,
                        double beta_scale, const std::string& metric) const;
};

/// Summary statistics of a sample; quantiles are type 7.
ReportRow summarize(std::vector<double> values);

struct EstimationGrid {
  std::vector<Index> ns{200, 400, 600};
  std::vector<ErrorDist> dists{ErrorDist::pareto21};
  std::vector<EstimationMethod> methods{EstimationMethod::ahu, EstimationMethod::hub,
                                        EstimationMethod::ols};
  std::vector<double> beta_scales{1.0};
  // n, error_dist, beta_scale and seed are overwritten per cell and replicate.
  DgpConfig dgp{};
  // tau_policy and seed are overwritten per method and replicate.
  FitConfig fit{};
};

struct TestGrid {
  std::vector<Index> ns{200, 400, 600};
  std::vector<ErrorDist> dists{ErrorDist::pareto21};
  std::vector<TestMethod> methods{TestMethod::rwast, TestMethod::wast, TestMethod::sst};
  std::vector<double> beta_scales{0.0};
  DgpConfig dgp{};
  int sst_grid = 1000;
  double level = 0.05;
};

/// Seed of the dataset in cell (n, dist, beta_scale), replicate `rep`. It does
/// not depend on the method, so all methods of a replicate see the same data.
std::uint64_t replicate_seed(std::uint64_t base_seed, Index n, ErrorDist dist,
                             double beta_scale, int rep);

/// Rows: metrics "l2_error" and "accuracy" per (method, n, dist, beta_scale).
ExperimentReport run_estimation_experiment(const EstimationGrid& grid, int reps,
                                           std::uint64_t base_seed, unsigned threads = 1);

/// Rows: metrics "rejection_rate" (p <= level) and "p_value" per
/// (method, n, dist, beta_scale).
ExperimentReport run_test_experiment(const TestGrid& grid, int reps, int B,
                                     std::uint64_t base_seed, unsigned threads = 1);

}  // namespace changeplane
