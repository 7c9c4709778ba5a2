#pragma once

#include <vector>

#include "changeplane/types.hpp"

namespace changeplane {

/// Smooth surrogate K(t / h) for the indicator 1(t >= 0).
struct KernelSpec {
  KernelKind kind = KernelKind::sigmoid;
  double h = 1.0;
};

struct KernelValues {
  double K = 0.0;
  double K1 = 0.0;  // K'(t/h); no 1/h chain factor
  double K2 = 0.0;  // K''(t/h)
};

/// K, K', K'' of the standard (h = 1) kernel at u.
///   sigmoid:     K = 1 / (1 + e^-u)
///   normal_cdf:  K = Phi(u)
///   normal_mix:  K = Phi(u) + u phi(u)   (leaves [0, 1] near |u| = sqrt(2))
KernelValues kernel_standard(KernelKind kind, double u);

/// kernel_standard(spec.kind, t / spec.h). Throws when h <= 0.
KernelValues kernel_eval(const KernelSpec& spec, double t);

/// |K(t/h) - 1(t >= 0)|, computed without cancellation in the tails.
double indicator_gap(const KernelSpec& spec, double t);

/// c_h * sigma_u * log(n) / sqrt(n).
double rule_of_thumb_h(double c_h, double sigma_u_hat, Index n);

/// sqrt( sum_i (U_1i + U_2i'eta)^2 / (n - r) ).
double estimate_sigma_u(const Matrix& U, const Vector& eta);

struct FitConfig;
struct Dataset;

/// K-fold cross-validation over `candidates`: each fold is fitted with
/// fit_alternating at fixed h and scored by the held-out Huber loss (at the
/// fold's fitted tau) of the fitted change-plane model. Folds come from a
/// permutation drawn with derive_stream(cfg.seed, ...). Ties go to the
/// smaller h.
double select_h_cv(const Dataset& d, const FitConfig& cfg,
                   const std::vector<double>& candidates, int folds);

/// Candidate with the smallest loss; equal losses resolve to the smaller
/// candidate.
double cv_argmin(const std::vector<double>& candidates, const std::vector<double>& losses);

}  // namespace changeplane
