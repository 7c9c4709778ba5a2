#include "changeplane/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace changeplane {

namespace {

constexpr std::uint64_t kTagDesign = 0x64657369ULL;
constexpr std::uint64_t kTagNoise = 0x6e6f6973ULL;

const double kGaussSd = std::pow(2.0, 0.25);

double pareto_raw(RngStream& s) { return 1.0 / std::sqrt(s.uniform()); }
double weibull_raw(RngStream& s) { return 0.75 * std::pow(s.exponential(), 1.0 / 0.75); }
double t2_draw(RngStream& s) { return s.normal() / std::sqrt(s.exponential()); }
double lognormal_raw(RngStream& s) { return std::exp(s.normal()); }

const double kParetoMean = 2.0;
const double kWeibullMean = 0.75 * boost::math::tgamma(1.0 + 1.0 / 0.75);
const double kLognormalMean = std::exp(0.5);

// One draw; `centre` subtracts each component's mean.
double draw(ErrorDist dist, RngStream& s, bool centre) {
  const double c = centre ? 1.0 : 0.0;
  switch (dist) {
    case ErrorDist::gaussian: return kGaussSd * s.normal();
    case ErrorDist::t2: return t2_draw(s);
    case ErrorDist::pareto21: return pareto_raw(s) - c * kParetoMean;
    case ErrorDist::weibull: return weibull_raw(s) - c * kWeibullMean;
    case ErrorDist::gauss_mix:
      return s.uniform() < 0.5 ? s.normal() : 3.0 * s.normal();
    case ErrorDist::t2_weibull_mix:
      return s.uniform() < 0.5 ? t2_draw(s) : weibull_raw(s) - c * kWeibullMean;
    case ErrorDist::pareto_gauss_mix:
      return s.uniform() < 0.5 ? pareto_raw(s) - c * kParetoMean : kGaussSd * s.normal();
    case ErrorDist::lognormal_gauss_mix:
      return s.uniform() < 0.5 ? lognormal_raw(s) - c * kLognormalMean : kGaussSd * s.normal();
  }
  throw Error(ErrorKind::invalid_argument, "unknown error distribution");
}

Vector draws(ErrorDist dist, Index n, RngStream& stream, bool centre) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "error sample size must be positive");
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = draw(dist, stream, centre);
  return out;
}

}  // namespace

const char* to_string(ErrorDist dist) {
  switch (dist) {
    case ErrorDist::gaussian: return "gaussian";
    case ErrorDist::t2: return "t2";
    case ErrorDist::pareto21: return "pareto21";
    case ErrorDist::weibull: return "weibull";
    case ErrorDist::gauss_mix: return "gauss_mix";
    case ErrorDist::t2_weibull_mix: return "t2_weibull_mix";
    case ErrorDist::pareto_gauss_mix: return "pareto_gauss_mix";
    case ErrorDist::lognormal_gauss_mix: return "lognormal_gauss_mix";
  }
  return "unknown";
}

std::vector<ErrorDist> all_error_dists() {
  return {ErrorDist::gaussian,       ErrorDist::t2,
          ErrorDist::pareto21,       ErrorDist::weibull,
          ErrorDist::gauss_mix,      ErrorDist::t2_weibull_mix,
          ErrorDist::pareto_gauss_mix, ErrorDist::lognormal_gauss_mix};
}

ErrorDist error_dist_from_string(const std::string& name) {
  for (ErrorDist dist : all_error_dists()) {
    if (name == to_string(dist)) return dist;
  }
  throw Error(ErrorKind::invalid_argument, "unknown error distribution '" + name + "'");
}

double raw_error_mean(ErrorDist dist) {
  switch (dist) {
    case ErrorDist::gaussian:
    case ErrorDist::t2:
    case ErrorDist::gauss_mix: return 0.0;
    case ErrorDist::pareto21: return kParetoMean;
    case ErrorDist::weibull: return kWeibullMean;
    case ErrorDist::t2_weibull_mix: return 0.5 * kWeibullMean;
    case ErrorDist::pareto_gauss_mix: return 0.5 * kParetoMean;
    case ErrorDist::lognormal_gauss_mix: return 0.5 * kLognormalMean;
  }
  throw Error(ErrorKind::invalid_argument, "unknown error distribution");
}

Vector gen_errors(ErrorDist dist, Index n, RngStream& stream) {
  return draws(dist, n, stream, true);
}

Vector gen_errors_raw(ErrorDist dist, Index n, RngStream& stream) {
  return draws(dist, n, stream, false);
}

void DgpConfig::validate() const {
  if (p < 1 || q < 1 || r < 2) {
    throw Error(ErrorKind::invalid_argument, "need p >= 1, q >= 1 and r >= 2");
  }
  if (n < std::max(p + q, r) + 1) {
    throw Error(ErrorKind::invalid_argument, "n is too small for the design dimensions");
  }
  if (z_equals_x && q != p) throw Error(ErrorKind::invalid_argument, "Z = X requires q = p");
  if (!(design_scale > 0.0)) throw Error(ErrorKind::invalid_argument, "design_scale must be positive");
  if (!(beta_scale >= 0.0)) throw Error(ErrorKind::invalid_argument, "beta_scale must be nonnegative");
  if (!(noise_multiplier >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "noise_multiplier must be nonnegative");
  }
  if (alpha_star.size() != 0 && alpha_star.size() != p) {
    throw Error(ErrorKind::dimension_mismatch, "alpha_star must have length p");
  }
  if (beta_star.size() != 0 && beta_star.size() != q) {
    throw Error(ErrorKind::dimension_mismatch, "beta_star must have length q");
  }
  if (gamma_minus1.size() != 0 && gamma_minus1.size() != r - 1) {
    throw Error(ErrorKind::dimension_mismatch, "gamma_minus1 must have length r - 1");
  }
  if (gamma_tail().isZero(0.0)) throw Error(ErrorKind::invalid_argument, "gamma_minus1 is zero");
}

Vector DgpConfig::alpha() const {
  if (alpha_star.size() != 0) return alpha_star;
  Vector a = Vector::Constant(p, 0.5);
  a(0) = 5.0;
  return a;
}

Vector DgpConfig::beta() const {
  return beta_scale * (beta_star.size() != 0 ? beta_star : Vector::Constant(q, 0.5));
}

Vector DgpConfig::gamma_tail() const {
  if (gamma_minus1.size() != 0) return gamma_minus1;
  Vector g = Vector::Constant(r - 1, 2.0);
  g(0) = 1.0;
  return g;
}

double analytic_gamma1(const DgpConfig& cfg) {
  cfg.validate();
  const boost::math::normal_distribution<double> standard;
  return -boost::math::quantile(standard, 0.35) * std::sqrt(cfg.design_scale) *
         cfg.gamma_tail().norm();
}

double empirical_gamma1(const DgpConfig& cfg, Index pilot, RngStream& stream) {
  cfg.validate();
  if (pilot < 1) throw Error(ErrorKind::invalid_argument, "pilot size must be positive");
  const Vector g = cfg.gamma_tail();
  const double sd = std::sqrt(cfg.design_scale);
  std::vector<double> values(static_cast<std::size_t>(pilot));
  for (auto& v : values) {
    double t = 0.0;
    for (Index k = 0; k < g.size(); ++k) t += g(k) * sd * stream.normal();
    v = t;
  }
  // Type-7 quantile.
  std::sort(values.begin(), values.end());
  const double pos = 0.35 * static_cast<double>(pilot - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return -(values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]));
}

GeneratedData gen_dataset(const DgpConfig& cfg) {
  cfg.validate();
  const Index n = cfg.n;
  const double sd = std::sqrt(cfg.design_scale);
  RngStream design = derive_stream(cfg.seed, kTagDesign);
  RngStream noise = derive_stream(cfg.seed, kTagNoise);

  GeneratedData out;
  Dataset& d = out.data;
  d.X.resize(n, cfg.p);
  d.U.resize(n, cfg.r);
  d.Z.resize(n, cfg.q);
  for (Index i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    for (Index j = 1; j < cfg.p; ++j) d.X(i, j) = sd * design.normal();
    d.U(i, 0) = 1.0;
    for (Index j = 1; j < cfg.r; ++j) d.U(i, j) = sd * design.normal();
    if (!cfg.z_equals_x) {
      d.Z(i, 0) = 1.0;
      for (Index j = 1; j < cfg.q; ++j) d.Z(i, j) = sd * design.normal();
    }
  }
  if (cfg.z_equals_x) d.Z = d.X;

  out.gamma1 = analytic_gamma1(cfg);
  out.truth.alpha = cfg.alpha();
  out.truth.beta = cfg.beta();
  out.truth.eta = cfg.gamma_tail() / out.gamma1;
  out.labels_true = classify(out.truth.eta, d.U);

  const Vector eps = gen_errors(cfg.error_dist, n, noise);
  d.y.resize(n);
  const Vector base = d.X * out.truth.alpha;
  const Vector shift = d.Z * out.truth.beta;
  for (Index i = 0; i < n; ++i) {
    const double in_group = out.labels_true[static_cast<std::size_t>(i)];
    d.y(i) = base(i) + shift(i) * in_group + cfg.noise_multiplier * eps(i);
  }
  return out;
}

}  // namespace changeplane
