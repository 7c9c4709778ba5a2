#include "changeplane/optimize.hpp"

#include <cmath>

namespace changeplane {

BfgsResult minimize_bfgs(const Objective& f, const Vector& x0, const BfgsOptions& options) {
  const Index dim = x0.size();
  BfgsResult result;
  result.x = x0;
  result.grad.resize(dim);
  result.value = f(result.x, result.grad);
  if (dim == 0) {
    result.converged = true;
    return result;
  }

  Matrix inv_hessian = Matrix::Identity(dim, dim);
  bool scaled = false;
  Vector grad_next(dim);

  for (int it = 0; it < options.max_iter; ++it) {
    if (result.grad.lpNorm<Eigen::Infinity>() <=
        options.grad_tol * (1.0 + std::abs(result.value))) {
      result.converged = true;
      break;
    }
    Vector direction = -inv_hessian * result.grad;
    double slope = result.grad.dot(direction);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      direction = -result.grad;
      slope = -result.grad.squaredNorm();
    }
    // First step: unit-length move along the steepest descent direction.
    double step = scaled ? 1.0 : 1.0 / std::max(1.0, direction.norm());

    bool accepted = false;
    Vector x_next;
    double f_next = 0.0;
    for (int k = 0; k < options.max_backtracks; ++k, step *= 0.5) {
      x_next = result.x + step * direction;
      f_next = f(x_next, grad_next);
      if (std::isfinite(f_next) && f_next <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    ++result.iterations;
    if (!accepted) break;

    const Vector s = x_next - result.x;
    const Vector yv = grad_next - result.grad;
    const double improvement = result.value - f_next;
    result.x = x_next;
    result.value = f_next;
    result.grad = grad_next;

    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        inv_hessian *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector hy = inv_hessian * yv;
      inv_hessian += (rho * rho * yv.dot(hy) + rho) * s * s.transpose() -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }
    if (improvement <= options.rel_tol * (1.0 + std::abs(result.value))) {
      result.converged =
          result.grad.lpNorm<Eigen::Infinity>() <= options.grad_tol * (1.0 + std::abs(result.value));
      break;
    }
  }
  return result;
}

}  // namespace changeplane
