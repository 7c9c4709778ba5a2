#include "changeplane/kernel.hpp"

#include <cmath>
#include <numbers>

namespace changeplane {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double normal_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }
double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

}  // namespace

KernelValues kernel_standard(KernelKind kind, double u) {
  switch (kind) {
    case KernelKind::sigmoid: {
      // Evaluate through e^{-|u|} to avoid overflow.
      const double e = std::exp(-std::abs(u));
      const double k = u >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      const double k1 = e / ((1.0 + e) * (1.0 + e));
      return {k, k1, k1 * (1.0 - 2.0 * k)};
    }
    case KernelKind::normal_cdf: {
      const double phi = normal_pdf(u);
      return {normal_cdf(u), phi, -u * phi};
    }
    case KernelKind::normal_mix: {
      const double phi = normal_pdf(u);
      return {normal_cdf(u) + u * phi, phi * (2.0 - u * u), u * phi * (u * u - 4.0)};
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown kernel kind");
}

KernelValues kernel_eval(const KernelSpec& spec, double t) {
  if (!(spec.h > 0.0)) throw Error(ErrorKind::invalid_argument, "h must be positive");
  return kernel_standard(spec.kind, t / spec.h);
}

double indicator_gap(const KernelSpec& spec, double t) {
  if (!(spec.h > 0.0)) throw Error(ErrorKind::invalid_argument, "h must be positive");
  // K(-u) = 1 - K(u) for every family, so 1 - K(u) = K(-u) on the right.
  if (t >= 0.0) {
    if (t == 0.0) return std::abs(kernel_standard(spec.kind, 0.0).K - 1.0);
    return std::abs(kernel_standard(spec.kind, -t / spec.h).K);
  }
  return std::abs(kernel_standard(spec.kind, t / spec.h).K);
}

double rule_of_thumb_h(double c_h, double sigma_u_hat, Index n) {
  if (!(c_h > 0.0) || !(sigma_u_hat > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "c_h and sigma_u must be positive");
  }
  if (n < 2) throw Error(ErrorKind::invalid_argument, "rule of thumb needs n >= 2");
  const auto nn = static_cast<double>(n);
  return c_h * sigma_u_hat * std::log(nn) / std::sqrt(nn);
}

double estimate_sigma_u(const Matrix& U, const Vector& eta) {
  const Index n = U.rows();
  const Index r = U.cols();
  if (n <= r) throw Error(ErrorKind::invalid_argument, "sigma_u needs n > r");
  if (eta.size() != r - 1) {
    throw Error(ErrorKind::dimension_mismatch, "eta must have length r - 1");
  }
  const Vector boundary = U.col(0) + U.rightCols(r - 1) * eta;
  return std::sqrt(boundary.squaredNorm() / static_cast<double>(n - r));
}

}  // namespace changeplane
