#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "changeplane/experiment.hpp"
#include "csv.hpp"

namespace changeplane::cli {

enum ExitCode { kSuccess = 0, kUserError = 1, kInternalError = 2 };

/// Entry point shared by the executable and the tests. Results go to `out`
/// unless --out/--out-dir redirects them; failures print
///   {"error": {"kind": ..., "message": ...}}
/// on `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// --threads value after the CHANGEPLANE_THREADS override; 0 means all cores.
unsigned resolve_threads(unsigned flag_value);

enum class Suite { estimation, test };

/// Parsed simulate --config. "methods" is read as estimation or test methods
/// depending on the suite. Unknown or ill-typed keys raise Error{parse}
/// naming the JSON pointer of the offending key.
struct SimulationConfig {
  EstimationGrid estimation;
  TestGrid test;
  int reps = 100;
  int B = 300;
};

SimulationConfig parse_simulation_config(const nlohmann::json& j, Suite suite);

/// One row per report row; the column set is fixed.
std::string report_csv(const ExperimentReport& report);

/// Estimation: L2 / ACC medians against n per method. Test: rejection rate
/// against beta_scale per method.
std::string estimation_plot_csv(const ExperimentReport& report);
std::string test_plot_csv(const ExperimentReport& report);

}  // namespace changeplane::cli
