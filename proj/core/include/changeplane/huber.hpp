#pragma once

#include <optional>

#include "changeplane/types.hpp"

namespace changeplane {

/// L_tau(u) = u^2/2 for |u| <= tau, tau|u| - tau^2/2 otherwise.
/// tau may be +infinity (quadratic loss).
double huber_loss(double u, double tau);

/// psi_tau(u) = sign(u) min(|u|, tau), the derivative of huber_loss.
double huber_psi(double u, double tau);

struct HuberFit {
  Vector theta;
  double tau = 0.0;
  int iterations = 0;
  bool converged = false;
  Vector residuals;
};

/// Weighted least squares; an empty `weights` means unit weights.
/// Throws Error{rank_deficient} when W lacks full column rank.
HuberFit least_squares_fit(const Matrix& W, const Vector& y,
                           const Vector& weights = Vector());

/// Minimises sum_i w_i L_tau(y_i - W_i'theta) by iteratively reweighted least
/// squares with weights w_i min(1, tau/|r_i|), starting from `init` (or least
/// squares when init is empty). Stops once
///   ||sum_i w_i psi_tau(r_i) W_i||_inf <= tol * n.
/// Non-convergence is reported through the flag. tau = +inf is delegated to
/// least_squares_fit.
HuberFit huber_fit_fixed_tau(const Matrix& W, const Vector& y, double tau,
                             const Vector& init = Vector(), double tol = 1e-8,
                             int max_iter = 1000, const Vector& weights = Vector());

/// Solves sum_i min(r_i^2, tau^2) / tau^2 = d + z for tau > 0.
/// The left side is nonincreasing in tau and piecewise of the form
/// S_k / tau^2 + m_k between consecutive sorted |r_i|, so the root is found
/// exactly on the segment where the sign changes. When the number of
/// nonzero residuals equals d + z the solution set is an interval and its
/// right end point min{|r_i| : r_i != 0} is returned.
/// Throws Error{unsolvable} when all residuals vanish or fewer than d + z
/// residuals are nonzero.
double calibrate_tau(const Vector& residuals, double d, double z);

/// Effective dimension used by the adaptive fit: columns - 1 when W carries a
/// constant column, otherwise the number of columns.
double effective_dimension(const Matrix& W);

/// Jointly solves the score equation and the censored tau equation with
/// z = log n, starting from least squares and tau0 = sigma_hat sqrt(n/(d+z)).
/// Alternates huber_fit_fixed_tau and calibrate_tau for at most
/// `max_outer` rounds. When the least-squares fit is exact the residuals carry
/// no scale information and tau is reported as +infinity.
HuberFit huber_fit_adaptive(const Matrix& W, const Vector& y, double tol = 1e-8,
                            int max_iter = 1000,
                            std::optional<double> effective_dim = std::nullopt,
                            int max_outer = 50);

}  // namespace changeplane
