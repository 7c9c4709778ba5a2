#pragma once

#include <functional>

#include "changeplane/types.hpp"

namespace changeplane {

/// Objective returning f(x) and writing the gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct BfgsOptions {
  int max_iter = 200;
  // Stop once ||grad||_inf <= grad_tol * (1 + |f|).
  double grad_tol = 1e-8;
  // Stop once a full iteration improves f by less than rel_tol * (1 + |f|).
  double rel_tol = 1e-14;
  int max_backtracks = 40;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  Vector grad;
  int iterations = 0;
  bool converged = false;
};

/// BFGS on the inverse Hessian with Armijo backtracking. The returned value
/// never exceeds f(x0).
BfgsResult minimize_bfgs(const Objective& f, const Vector& x0,
                         const BfgsOptions& options = {});

}  // namespace changeplane
