#include "changeplane/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace changeplane {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::rank_deficient: return "rank_deficient";
    case ErrorKind::identifiability: return "identifiability";
    case ErrorKind::unsolvable: return "unsolvable";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::missing_column: return "missing_column";
  }
  return "unknown";
}

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::sigmoid: return "sigmoid";
    case KernelKind::normal_cdf: return "normcdf";
    case KernelKind::normal_mix: return "normmix";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "sigmoid") return KernelKind::sigmoid;
  if (name == "normcdf" || name == "normal_cdf") return KernelKind::normal_cdf;
  if (name == "normmix" || name == "normal_mix") return KernelKind::normal_mix;
  throw Error(ErrorKind::invalid_argument, "unknown kernel '" + name + "'");
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  const auto m = static_cast<Index>(rows.size());
  out.y.resize(m);
  out.X.resize(m, p());
  out.Z.resize(m, q());
  out.U.resize(m, r());
  for (Index k = 0; k < m; ++k) {
    const Index i = rows[static_cast<std::size_t>(k)];
    out.y(k) = y(i);
    out.X.row(k) = X.row(i);
    out.Z.row(k) = Z.row(i);
    out.U.row(k) = U.row(i);
  }
  return out;
}

namespace {

void check_rows(const char* block, Index rows, Index n) {
  if (rows != n) {
    std::ostringstream msg;
    msg << "block " << block << " has " << rows << " rows but y has " << n;
    throw Error(ErrorKind::dimension_mismatch, msg.str());
  }
}

void check_finite(const char* block, const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream msg;
        msg << "non-finite value in " << block << " at (" << i << ", " << j << ")";
        throw Error(ErrorKind::non_finite, msg.str());
      }
    }
  }
}

}  // namespace

void validate_dataset(const Dataset& d) {
  const Index n = d.n();
  check_rows("X", d.X.rows(), n);
  check_rows("Z", d.Z.rows(), n);
  check_rows("U", d.U.rows(), n);
  if (d.p() < 1 || d.r() < 1) {
    throw Error(ErrorKind::dimension_mismatch, "X and U need at least one column");
  }
  if (n < std::max(d.p() + d.q(), d.r()) + 1) {
    std::ostringstream msg;
    msg << "n = " << n << " is too small for p + q = " << d.p() + d.q()
        << " and r = " << d.r();
    throw Error(ErrorKind::invalid_argument, msg.str());
  }
  check_finite("y", d.y);
  check_finite("X", d.X);
  check_finite("Z", d.Z);
  check_finite("U", d.U);
}

Vector ChangePlaneParams::stacked() const {
  Vector out(size());
  out << alpha, beta, eta;
  return out;
}

ChangePlaneParams ChangePlaneParams::from_stacked(const Vector& zeta, Index p,
                                                  Index q, Index r) {
  if (zeta.size() != p + q + r - 1) {
    throw Error(ErrorKind::dimension_mismatch,
                "stacked parameter length does not equal p + q + r - 1");
  }
  return {zeta.head(p), zeta.segment(p, q), zeta.tail(r - 1)};
}

GammaVector::GammaVector(Vector gamma) : gamma_(std::move(gamma)) {
  if (gamma_.size() == 0 || gamma_.isZero(0.0)) {
    throw Error(ErrorKind::invalid_argument, "gamma must be a nonzero vector");
  }
}

EtaForm gamma_to_eta(const GammaVector& g) {
  const double lead = g.gamma()(0);
  if (lead == 0.0) {
    throw Error(ErrorKind::invalid_argument,
                "leading coefficient of gamma is zero; eta is undefined");
  }
  return {g.gamma().tail(g.size() - 1) / lead, lead < 0.0};
}

Labels classify(const Vector& eta, const Matrix& U) {
  if (eta.size() != U.cols() - 1) {
    throw Error(ErrorKind::dimension_mismatch, "eta must have length r - 1");
  }
  Labels labels(static_cast<std::size_t>(U.rows()));
  for (Index i = 0; i < U.rows(); ++i) {
    const double t = U(i, 0) + U.row(i).tail(eta.size()).dot(eta);
    labels[static_cast<std::size_t>(i)] = t >= 0.0 ? 1 : 0;
  }
  return labels;
}

Labels classify_gamma(const Vector& gamma, const Matrix& U) {
  if (gamma.size() != U.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "gamma must have length r");
  }
  Labels labels(static_cast<std::size_t>(U.rows()));
  for (Index i = 0; i < U.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = U.row(i).dot(gamma) >= 0.0 ? 1 : 0;
  }
  return labels;
}

void FitConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tol must be positive");
  if (max_outer_iter < 1) {
    throw Error(ErrorKind::invalid_argument, "max_outer_iter must be at least 1");
  }
  if (eta_starts < 0) {
    throw Error(ErrorKind::invalid_argument, "eta_starts must be nonnegative");
  }
  if (!(eta_bound > 0.0)) throw Error(ErrorKind::invalid_argument, "eta_bound must be positive");
  if (const auto* rot = std::get_if<RuleOfThumbH>(&h_policy); rot && !(rot->c_h > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "c_h must be positive");
  }
  if (const auto* fixed = std::get_if<FixedH>(&h_policy); fixed && !(fixed->h > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "fixed h must be positive");
  }
  if (const auto* cv = std::get_if<CrossValidatedH>(&h_policy)) {
    if (cv->folds < 2) throw Error(ErrorKind::invalid_argument, "cv needs at least 2 folds");
    if (cv->multipliers.empty()) {
      throw Error(ErrorKind::invalid_argument, "cv needs at least one candidate");
    }
  }
  if (const auto* fixed = std::get_if<FixedTau>(&tau_policy); fixed && !(fixed->tau > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "fixed tau must be positive");
  }
}

}  // namespace changeplane
