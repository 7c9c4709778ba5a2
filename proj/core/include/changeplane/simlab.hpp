#pragma once

#include <string>
#include <vector>

#include "changeplane/rng.hpp"
#include "changeplane/types.hpp"

namespace changeplane {

enum class ErrorDist {
  gaussian,             // N(0, sqrt 2), variance sqrt 2
  t2,                   // Student t, 2 degrees of freedom
  pareto21,             // Par(2, 1) minus its mean 2
  weibull,              // Weib(shape 0.75, scale 0.75) minus its mean
  gauss_mix,            // 1/2 N(0, 1) + 1/2 N(0, 9)
  t2_weibull_mix,       // 1/2 t2 + 1/2 centred Weibull
  pareto_gauss_mix,     // 1/2 centred Pareto + 1/2 N(0, sqrt 2)
  lognormal_gauss_mix,  // 1/2 (exp(N(0,1)) - e^{1/2}) + 1/2 N(0, sqrt 2)
};

const char* to_string(ErrorDist dist);
ErrorDist error_dist_from_string(const std::string& name);
std::vector<ErrorDist> all_error_dists();

/// Mean of the raw (uncentred) family; gen_errors subtracts it.
double raw_error_mean(ErrorDist dist);

/// n i.i.d. mean-zero errors.
Vector gen_errors(ErrorDist dist, Index n, RngStream& stream);

/// Same draws without the centring shift.
Vector gen_errors_raw(ErrorDist dist, Index n, RngStream& stream);

struct DgpConfig {
  Index n = 200;
  Index p = 3;
  Index q = 3;
  Index r = 3;
  // Empty vectors select (5, 0.5, ..., 0.5), (0.5, ..., 0.5) and (1, 2, ..., 2).
  Vector alpha_star;
  Vector beta_star;
  Vector gamma_minus1;
  ErrorDist error_dist = ErrorDist::gaussian;
  // Variance of each non-constant design coordinate.
  double design_scale = 1.4142135623730951;
  // Z = X (requires q = p); otherwise Z has its own intercept and draws.
  bool z_equals_x = true;
  double beta_scale = 1.0;
  std::uint64_t seed = 0;
  // Scales the error draws; 0 gives noiseless responses.
  double noise_multiplier = 1.0;

  void validate() const;
  Vector alpha() const;
  Vector beta() const;  // beta_star * beta_scale
  Vector gamma_tail() const;
};

struct GeneratedData {
  Dataset data;
  ChangePlaneParams truth;
  Labels labels_true;
  double gamma1 = 0.0;
};

/// gamma_1 = -Phi^{-1}(0.35) sqrt(design_scale) |gamma_{-1}|, so that 35% of
/// the population has U'gamma < 0.
double analytic_gamma1(const DgpConfig& cfg);

/// Minus the empirical 35% quantile of U_2'gamma_{-1} over `pilot` design draws.
double empirical_gamma1(const DgpConfig& cfg, Index pilot, RngStream& stream);

/// X_1 = U_1 = 1, remaining design columns N(0, design_scale),
/// y = X'alpha + Z'beta 1(U'gamma >= 0) + eps.
GeneratedData gen_dataset(const DgpConfig& cfg);

}  // namespace changeplane
