#include "changeplane/huber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace changeplane {

namespace {

void require_positive_tau(double tau) {
  if (!(tau > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "tau must be positive");
  }
}

bool has_weights(const Vector& weights) { return weights.size() > 0; }

void check_fit_inputs(const Matrix& W, const Vector& y, const Vector& weights) {
  if (W.rows() != y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "design and response lengths differ");
  }
  if (has_weights(weights) && weights.size() != y.size()) {
    throw Error(ErrorKind::dimension_mismatch, "weights and response lengths differ");
  }
  if (W.rows() <= W.cols()) {
    throw Error(ErrorKind::invalid_argument, "need more observations than design columns");
  }
}

Vector solve_weighted(const Matrix& W, const Vector& y, const Vector& w) {
  const Vector root = w.cwiseSqrt();
  const Matrix Ws = root.asDiagonal() * W;
  Eigen::ColPivHouseholderQR<Matrix> qr(Ws);
  qr.setThreshold(1e-10);
  if (qr.rank() < W.cols()) {
    std::ostringstream msg;
    msg << "design has rank " << qr.rank() << " < " << W.cols() << " columns";
    throw Error(ErrorKind::rank_deficient, msg.str());
  }
  return qr.solve(root.cwiseProduct(y));
}

double objective(const Vector& r, double tau, const Vector& weights) {
  double total = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    const double w = has_weights(weights) ? weights(i) : 1.0;
    total += w * huber_loss(r(i), tau);
  }
  return total;
}

Vector score(const Matrix& W, const Vector& r, double tau, const Vector& weights) {
  Vector psi(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    psi(i) = huber_psi(r(i), tau) * (has_weights(weights) ? weights(i) : 1.0);
  }
  return W.transpose() * psi;
}

}  // namespace

double huber_loss(double u, double tau) {
  require_positive_tau(tau);
  const double a = std::abs(u);
  if (a <= tau) return 0.5 * u * u;
  return tau * a - 0.5 * tau * tau;
}

double huber_psi(double u, double tau) {
  require_positive_tau(tau);
  if (u > tau) return tau;
  if (u < -tau) return -tau;
  return u;
}

HuberFit least_squares_fit(const Matrix& W, const Vector& y, const Vector& weights) {
  check_fit_inputs(W, y, weights);
  const Vector w = has_weights(weights) ? weights : Vector::Ones(y.size());
  HuberFit fit;
  fit.theta = solve_weighted(W, y, w);
  fit.residuals = y - W * fit.theta;
  fit.tau = std::numeric_limits<double>::infinity();
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

HuberFit huber_fit_fixed_tau(const Matrix& W, const Vector& y, double tau,
                             const Vector& init, double tol, int max_iter,
                             const Vector& weights) {
  require_positive_tau(tau);
  if (std::isinf(tau)) return least_squares_fit(W, y, weights);
  check_fit_inputs(W, y, weights);
  if (init.size() != 0 && init.size() != W.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "init has the wrong length");
  }

  const Index n = y.size();
  const Vector base = has_weights(weights) ? weights : Vector::Ones(n);

  HuberFit fit;
  fit.tau = tau;
  fit.theta = init.size() != 0 ? init : least_squares_fit(W, y, weights).theta;
  Vector r = y - W * fit.theta;
  double f = objective(r, tau, weights);

  for (int it = 0; it < max_iter; ++it) {
    const Vector g = score(W, r, tau, weights);
    if (g.lpNorm<Eigen::Infinity>() <= tol * static_cast<double>(n)) {
      fit.converged = true;
      break;
    }
    ++fit.iterations;

    // Newton step on the currently unclipped observations, accepted only if
    // it decreases the objective; otherwise one IRLS step, which always does.
    bool stepped = false;
    Matrix hessian = Matrix::Zero(W.cols(), W.cols());
    for (Index i = 0; i < n; ++i) {
      if (std::abs(r(i)) <= tau) {
        hessian.selfadjointView<Eigen::Lower>().rankUpdate(W.row(i).transpose(), base(i));
      }
    }
    Eigen::LDLT<Matrix> ldlt(hessian.selfadjointView<Eigen::Lower>());
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      const Vector direction = ldlt.solve(g);
      const double slope = g.dot(direction);
      double step = 1.0;
      for (int k = 0; k < 30 && slope > 0.0; ++k, step *= 0.5) {
        const Vector candidate = fit.theta + step * direction;
        const Vector rc = y - W * candidate;
        const double fc = objective(rc, tau, weights);
        const bool decrease = fc <= f - 1e-4 * step * slope;
        const bool flat = fc <= f + 64 * std::numeric_limits<double>::epsilon() * std::abs(f) &&
                          score(W, rc, tau, weights).lpNorm<Eigen::Infinity>() <
                              g.lpNorm<Eigen::Infinity>();
        if (decrease || flat) {
          fit.theta = candidate;
          r = rc;
          f = fc;
          stepped = true;
          break;
        }
      }
    }
    if (!stepped) {
      Vector w(n);
      for (Index i = 0; i < n; ++i) {
        const double a = std::abs(r(i));
        w(i) = base(i) * (a <= tau ? 1.0 : tau / a);
      }
      const Vector candidate = solve_weighted(W, y, w);
      const Vector rc = y - W * candidate;
      const double fc = objective(rc, tau, weights);
      if (fc > f) break;  // no further progress possible in floating point
      fit.theta = candidate;
      r = rc;
      f = fc;
    }
  }
  if (!fit.converged) {
    fit.converged = score(W, r, tau, weights).lpNorm<Eigen::Infinity>() <=
                    tol * static_cast<double>(n);
  }
  fit.residuals = r;
  return fit;
}

double calibrate_tau(const Vector& residuals, double d, double z) {
  const double target = d + z;
  if (!(target > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "d + z must be positive");
  }
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(residuals.size()));
  for (Index i = 0; i < residuals.size(); ++i) {
    if (!std::isfinite(residuals(i))) {
      throw Error(ErrorKind::non_finite, "non-finite residual");
    }
    if (residuals(i) != 0.0) a.push_back(std::abs(residuals(i)));
  }
  if (a.empty()) {
    throw Error(ErrorKind::unsolvable, "all residuals are zero; tau is undetermined");
  }
  const auto m = static_cast<double>(a.size());
  std::sort(a.begin(), a.end());
  if (m < target * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "censored equation unsolvable: " << a.size()
        << " nonzero residuals but d + z = " << target;
    throw Error(ErrorKind::unsolvable, msg.str());
  }
  if (m <= target * (1.0 + 1e-12)) return a.front();

  // Segment k (1-based) is tau in (a_k, a_{k+1}] with a_{m+1} = +inf; there
  // the equation reads S_k / tau^2 + (m - k) = target, S_k = sum_{i<=k} a_i^2.
  std::vector<double> prefix(a.size() + 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) prefix[i + 1] = prefix[i] + a[i] * a[i];
  for (std::size_t k = a.size(); k >= 1; --k) {
    const double denom = target - (m - static_cast<double>(k));
    if (denom <= 0.0) break;  // left side exceeds target on this and lower segments
    const double tau = std::sqrt(prefix[k] / denom);
    const double lo = a[k - 1];
    const double hi = k < a.size() ? a[k] : std::numeric_limits<double>::infinity();
    if (tau >= lo * (1.0 - 1e-12) && tau <= hi * (1.0 + 1e-12)) return tau;
  }

  // Unreachable in exact arithmetic; bisection on the monotone function.
  auto f = [&](double tau) {
    double s = 0.0;
    for (double v : a) s += std::min(v * v, tau * tau);
    return s / (tau * tau) - target;
  };
  double lo = a.front();
  double hi = std::sqrt(prefix.back() / target);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double effective_dimension(const Matrix& W) {
  for (Index j = 0; j < W.cols(); ++j) {
    const double first = W(0, j);
    if (first != 0.0 && (W.col(j).array() == first).all()) {
      return static_cast<double>(W.cols() - 1);
    }
  }
  return static_cast<double>(W.cols());
}

HuberFit huber_fit_adaptive(const Matrix& W, const Vector& y, double tol, int max_iter,
                            std::optional<double> effective_dim, int max_outer) {
  check_fit_inputs(W, y, Vector());
  const Index n = y.size();
  const double d = effective_dim.value_or(effective_dimension(W));
  const double z = std::log(static_cast<double>(n));

  HuberFit ls = least_squares_fit(W, y);
  const double scale = 1.0 + y.lpNorm<Eigen::Infinity>();
  if (ls.residuals.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
    return ls;  // exact fit; tau stays infinite
  }

  const double sigma = std::sqrt(ls.residuals.squaredNorm() /
                                 static_cast<double>(n - W.cols()));
  double tau = sigma * std::sqrt(static_cast<double>(n) / (d + z));
  Vector theta = ls.theta;
  HuberFit fit;
  int total_iterations = 0;
  bool tau_settled = false;
  for (int outer = 0; outer < max_outer; ++outer) {
    fit = huber_fit_fixed_tau(W, y, tau, theta, tol, max_iter);
    total_iterations += fit.iterations;
    theta = fit.theta;
    const double next = calibrate_tau(fit.residuals, d, z);
    const bool small_change = std::abs(next - tau) <= std::max(tol, 1e-12) * tau;
    tau = next;
    if (small_change) {
      tau_settled = true;
      break;
    }
  }
  // Final solve so that the score equation holds at the reported tau.
  fit = huber_fit_fixed_tau(W, y, tau, theta, tol, max_iter);
  fit.iterations += total_iterations;
  fit.converged = fit.converged && tau_settled;
  return fit;
}

}  // namespace changeplane
