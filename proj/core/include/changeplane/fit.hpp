#pragma once

#include <vector>

#include "changeplane/kernel.hpp"
#include "changeplane/optimize.hpp"
#include "changeplane/rng.hpp"
#include "changeplane/types.hpp"

namespace changeplane {

struct SmoothedFitResult {
  ChangePlaneParams params;
  double tau = 0.0;  // +inf for the quadratic-loss policy
  double h = 0.0;
  KernelKind kernel = KernelKind::sigmoid;
  // Smoothed objective after each outer iteration, at that iteration's tau.
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
  Labels subgroup_labels;
};

struct BootstrapCI {
  Vector lower;
  Vector upper;
  double level = 0.95;
  int B = 0;
  int dropped = 0;  // non-convergent replicates excluded from the percentiles
};

/// sum_i w_i L_tau(y_i - X_i'alpha - Z_i'beta K((U_1i + U_2i'eta) / h)).
/// Empty weights mean unit weights.
double smoothed_loss(const Dataset& d, const ChangePlaneParams& zeta, double tau,
                     const KernelSpec& spec, const Vector& weights = Vector());

/// Gradient of smoothed_loss with respect to (alpha', beta', eta')'.
Vector smoothed_loss_grad(const Dataset& d, const ChangePlaneParams& zeta, double tau,
                          const KernelSpec& spec, const Vector& weights = Vector());

/// Same loss with the exact indicator 1(U_1 + U_2'eta >= 0) in place of K.
double indicator_loss(const Dataset& d, const ChangePlaneParams& zeta, double tau);

/// n x (p + q) design (X, Z * K_h(U_1 + U_2'eta)).
Matrix smoothed_design(const Dataset& d, const Vector& eta, const KernelSpec& spec);

struct ThetaStep {
  Vector alpha;
  Vector beta;
  double tau = 0.0;
  bool converged = false;
};

/// Minimises the smoothed loss over (alpha, beta) at fixed eta: a Huber
/// regression on smoothed_design under the given tau policy. The adaptive
/// policy does not accept observation weights.
ThetaStep fit_theta_step(const Dataset& d, const Vector& eta, const TauPolicy& policy,
                         const KernelSpec& spec, const Vector& weights = Vector(),
                         const Vector& init = Vector());

struct EtaSearchOptions {
  // Random restarts besides init_eta.
  int starts = 20;
  // Feasible set ||eta|| <= max_norm; starts outside it are pulled back radially.
  double max_norm = 10.0;
  BfgsOptions bfgs{};
};

/// Minimises the smoothed loss over eta at fixed (alpha, beta, tau) by BFGS
/// from init_eta and from `starts` random planes (gamma uniform on the unit
/// sphere, gamma_1 folded to be positive and at least 0.2). Returns the best
/// candidate, never worse than init_eta pulled into the feasible ball. Throws
/// Error{identifiability} when beta = 0.
Vector fit_eta_step(const Dataset& d, const Vector& alpha, const Vector& beta, double tau,
                    const KernelSpec& spec, const Vector& init_eta, RngStream& stream,
                    const EtaSearchOptions& options = {}, const Vector& weights = Vector());

/// Profile least-squares search for a starting plane: the best of eta = 0 and
/// `candidates` random planes by residual sum of squares of the unsmoothed
/// fit, refined by compass search. Planes leaving fewer than max(q + 1, 5% of
/// n) rows on either side are infeasible.
Vector pilot_eta(const Dataset& d, int candidates, RngStream& stream);

/// Smoothness parameter implied by cfg.h_policy at the pilot plane eta.
double resolve_h(const Dataset& d, const FitConfig& cfg, const Vector& eta_pilot);

/// Full estimator: least-squares pilot plane from pilot_eta, smoothness
/// parameter from cfg.h_policy at that plane, the alternating smoothed fit
/// with tau = inf, then the alternating fit under cfg.tau_policy started from
/// it. tau is recalibrated in the theta-step only; the eta-step sees it fixed.
SmoothedFitResult fit_alternating(const Dataset& d, const FitConfig& cfg);

/// Alternating fit from a given start at fixed h without the pilot search.
/// `stream_tag` separates the random restarts of different callers.
SmoothedFitResult refit_from(const Dataset& d, const FitConfig& cfg,
                             const ChangePlaneParams& start, double h,
                             const Vector& weights = Vector(),
                             std::uint64_t stream_tag = 0);

enum class MultiplierLaw {
  exponential,  // i.i.d. Exp(1): nonnegative, mean 1, variance 1
  unit,         // all ones; no resampling variation
};

struct BootstrapOptions {
  MultiplierLaw multiplier = MultiplierLaw::exponential;
  unsigned threads = 1;
  double max_drop_fraction = 0.1;
};

/// Multiplier-bootstrap percentile intervals for (alpha, beta, eta). Each
/// replicate reweights the smoothed loss with its own multipliers, holds tau
/// and h at the point estimate and refits locally from the point estimate.
BootstrapCI bootstrap_ci(const Dataset& d, const FitConfig& cfg, int B, double level,
                         const BootstrapOptions& options = {});
BootstrapCI bootstrap_ci(const Dataset& d, const FitConfig& cfg,
                         const SmoothedFitResult& point, int B, double level,
                         const BootstrapOptions& options = {});

/// ||(alpha_hat, beta_hat) - (alpha*, beta*)||_2; eta is not included.
double l2_error(const ChangePlaneParams& est, const ChangePlaneParams& truth);

/// Fraction of matching labels.
double accuracy(const Labels& labels_hat, const Labels& labels_true);

}  // namespace changeplane
