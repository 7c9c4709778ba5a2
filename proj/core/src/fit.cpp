#include "changeplane/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "changeplane/huber.hpp"
#include "changeplane/parallel.hpp"

namespace changeplane {

namespace {

// Stream tags; combined with iteration counters through combine_ids.
constexpr std::uint64_t kTagPilotSearch = 0x70696c6f74ULL;
constexpr std::uint64_t kTagPilotFit = 0x70696c66ULL;
constexpr std::uint64_t kTagMainFit = 0x6d61696eULL;
constexpr std::uint64_t kTagBootstrap = 0x626f6f74ULL;

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(const Dataset& d, const ChangePlaneParams& zeta) {
  if (zeta.alpha.size() != d.p() || zeta.beta.size() != d.q() ||
      zeta.eta.size() != d.r() - 1) {
    throw Error(ErrorKind::dimension_mismatch,
                "parameter dimensions do not match the dataset");
  }
}

void check_weights(const Dataset& d, const Vector& weights) {
  if (weights.size() != 0 && weights.size() != d.n()) {
    throw Error(ErrorKind::dimension_mismatch, "weights must have length n");
  }
}

double weight_at(const Vector& weights, Index i) {
  return weights.size() == 0 ? 1.0 : weights(i);
}

Vector boundary(const Dataset& d, const Vector& eta) {
  return d.U.col(0) + d.U.rightCols(d.r() - 1) * eta;
}

// Quantities shared by the loss and its gradient.
struct SmoothedTerms {
  Vector residual;
  Vector zbeta;
  Vector k1;  // K'(omega / h)
};

SmoothedTerms smoothed_terms(const Dataset& d, const ChangePlaneParams& zeta,
                             const KernelSpec& spec) {
  const Vector omega = boundary(d, zeta.eta);
  SmoothedTerms t;
  t.zbeta = d.Z * zeta.beta;
  t.residual = d.y - d.X * zeta.alpha;
  t.k1.resize(d.n());
  for (Index i = 0; i < d.n(); ++i) {
    const KernelValues kv = kernel_eval(spec, omega(i));
    t.residual(i) -= t.zbeta(i) * kv.K;
    t.k1(i) = kv.K1;
  }
  return t;
}

bool tau_close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) <= tol * std::max(a, b);
}

}  // namespace

double smoothed_loss(const Dataset& d, const ChangePlaneParams& zeta, double tau,
                     const KernelSpec& spec, const Vector& weights) {
  check_params(d, zeta);
  check_weights(d, weights);
  const SmoothedTerms t = smoothed_terms(d, zeta, spec);
  double total = 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    total += weight_at(weights, i) * huber_loss(t.residual(i), tau);
  }
  return total;
}

Vector smoothed_loss_grad(const Dataset& d, const ChangePlaneParams& zeta, double tau,
                          const KernelSpec& spec, const Vector& weights) {
  check_params(d, zeta);
  check_weights(d, weights);
  const SmoothedTerms t = smoothed_terms(d, zeta, spec);
  const Vector omega = boundary(d, zeta.eta);
  const Index p = d.p();
  const Index q = d.q();
  const Index r1 = d.r() - 1;

  Vector grad = Vector::Zero(p + q + r1);
  for (Index i = 0; i < d.n(); ++i) {
    const double psi = weight_at(weights, i) * huber_psi(t.residual(i), tau);
    if (psi == 0.0) continue;
    const double k = kernel_eval(spec, omega(i)).K;
    grad.head(p) -= psi * d.X.row(i).transpose();
    grad.segment(p, q) -= psi * k * d.Z.row(i).transpose();
    if (r1 > 0) {
      grad.tail(r1) -= psi * t.zbeta(i) * t.k1(i) / spec.h * d.U.row(i).tail(r1).transpose();
    }
  }
  return grad;
}

double indicator_loss(const Dataset& d, const ChangePlaneParams& zeta, double tau) {
  check_params(d, zeta);
  const Vector omega = boundary(d, zeta.eta);
  const Vector fitted = d.X * zeta.alpha;
  const Vector zbeta = d.Z * zeta.beta;
  double total = 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    const double r = d.y(i) - fitted(i) - (omega(i) >= 0.0 ? zbeta(i) : 0.0);
    total += huber_loss(r, tau);
  }
  return total;
}

Matrix smoothed_design(const Dataset& d, const Vector& eta, const KernelSpec& spec) {
  if (eta.size() != d.r() - 1) {
    throw Error(ErrorKind::dimension_mismatch, "eta must have length r - 1");
  }
  const Vector omega = boundary(d, eta);
  Matrix W(d.n(), d.p() + d.q());
  W.leftCols(d.p()) = d.X;
  for (Index i = 0; i < d.n(); ++i) {
    W.row(i).tail(d.q()) = kernel_eval(spec, omega(i)).K * d.Z.row(i);
  }
  return W;
}

ThetaStep fit_theta_step(const Dataset& d, const Vector& eta, const TauPolicy& policy,
                         const KernelSpec& spec, const Vector& weights, const Vector& init) {
  check_weights(d, weights);
  const Matrix W = smoothed_design(d, eta, spec);
  HuberFit fit;
  if (std::holds_alternative<InfiniteTau>(policy)) {
    fit = least_squares_fit(W, d.y, weights);
  } else if (const auto* fixed = std::get_if<FixedTau>(&policy)) {
    fit = huber_fit_fixed_tau(W, d.y, fixed->tau, init, 1e-8, 1000, weights);
  } else {
    if (weights.size() != 0) {
      throw Error(ErrorKind::invalid_argument,
                  "adaptive tau calibration does not take observation weights");
    }
    fit = huber_fit_adaptive(W, d.y);
  }
  return {fit.theta.head(d.p()), fit.theta.tail(d.q()), fit.tau, fit.converged};
}

Vector fit_eta_step(const Dataset& d, const Vector& alpha, const Vector& beta, double tau,
                    const KernelSpec& spec, const Vector& init_eta, RngStream& stream,
                    const EtaSearchOptions& options, const Vector& weights) {
  check_params(d, {alpha, beta, init_eta});
  check_weights(d, weights);
  if (beta.isZero(0.0)) {
    throw Error(ErrorKind::identifiability, "eta is not identified when beta = 0");
  }
  const Index r1 = d.r() - 1;
  if (r1 == 0) return init_eta;

  const Vector base = d.y - d.X * alpha;
  const Vector zbeta = d.Z * beta;
  const Vector u1 = d.U.col(0);
  const Matrix u2 = d.U.rightCols(r1);

  const auto feasible = [&](Vector eta) {
    const double norm = eta.norm();
    if (norm > options.max_norm) eta *= options.max_norm / norm;
    return eta;
  };
  const Objective objective = [&](const Vector& eta, Vector& grad) {
    if (eta.norm() > options.max_norm) return kInf;
    const Vector omega = u1 + u2 * eta;
    Vector coef(d.n());
    double total = 0.0;
    for (Index i = 0; i < d.n(); ++i) {
      const KernelValues kv = kernel_eval(spec, omega(i));
      const double res = base(i) - zbeta(i) * kv.K;
      const double w = weight_at(weights, i);
      total += w * huber_loss(res, tau);
      coef(i) = -w * huber_psi(res, tau) * zbeta(i) * kv.K1 / spec.h;
    }
    grad = u2.transpose() * coef;
    return total;
  };

  BfgsResult best = minimize_bfgs(objective, feasible(init_eta), options.bfgs);
  for (int s = 0; s < options.starts; ++s) {
    Vector gamma = random_unit_vector(d.r(), stream);
    gamma(0) = std::max(std::abs(gamma(0)), 0.2);
    const Vector start = feasible(gamma.tail(r1) / gamma(0));
    BfgsResult candidate = minimize_bfgs(objective, start, options.bfgs);
    if (candidate.value < best.value) best = std::move(candidate);
  }
  return best.x;
}

Vector pilot_eta(const Dataset& d, int candidates, RngStream& stream) {
  const Index r1 = d.r() - 1;
  if (r1 == 0) return Vector(0);
  const Index n = d.n();
  const Index min_side =
      std::max<Index>(d.q() + 1, static_cast<Index>(std::ceil(0.05 * static_cast<double>(n))));

  Matrix W(n, d.p() + d.q());
  W.leftCols(d.p()) = d.X;
  const auto rss = [&](const Vector& eta) {
    const Labels labels = classify(eta, d.U);
    Index ones = 0;
    for (Index i = 0; i < n; ++i) {
      const bool in = labels[static_cast<std::size_t>(i)] == 1;
      ones += in ? 1 : 0;
      W.row(i).tail(d.q()) = in ? Vector(d.Z.row(i).transpose()) : Vector::Zero(d.q());
    }
    if (ones < min_side || n - ones < min_side) return kInf;
    try {
      return least_squares_fit(W, d.y).residuals.squaredNorm();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::rank_deficient) throw;
      return kInf;
    }
  };

  Vector best = Vector::Zero(r1);
  double best_rss = rss(best);
  for (int c = 0; c < candidates; ++c) {
    Vector gamma = random_unit_vector(d.r(), stream);
    gamma(0) = std::max(std::abs(gamma(0)), 0.2);
    const Vector eta = gamma.tail(r1) / gamma(0);
    const double value = rss(eta);
    if (value < best_rss) {
      best_rss = value;
      best = eta;
    }
  }
  if (!std::isfinite(best_rss)) return best;

  // Compass search on the piecewise-constant profile.
  double step = 0.25 * std::max(1.0, best.norm());
  const double min_step = 1e-3 * std::max(1.0, best.norm());
  for (int moves = 0; moves < 400 && step >= min_step; ++moves) {
    bool improved = false;
    for (Index k = 0; k < r1 && !improved; ++k) {
      for (double sign : {1.0, -1.0}) {
        Vector trial = best;
        trial(k) += sign * step;
        const double value = rss(trial);
        if (value < best_rss) {
          best_rss = value;
          best = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

double resolve_h(const Dataset& d, const FitConfig& cfg, const Vector& eta_pilot) {
  if (const auto* fixed = std::get_if<FixedH>(&cfg.h_policy)) return fixed->h;
  const double sigma_u = estimate_sigma_u(d.U, eta_pilot);
  if (const auto* rot = std::get_if<RuleOfThumbH>(&cfg.h_policy)) {
    return rule_of_thumb_h(rot->c_h, sigma_u, d.n());
  }
  const auto& cv = std::get<CrossValidatedH>(cfg.h_policy);
  const double base = rule_of_thumb_h(1.0, sigma_u, d.n());
  std::vector<double> candidates;
  candidates.reserve(cv.multipliers.size());
  for (double m : cv.multipliers) candidates.push_back(m * base);
  return select_h_cv(d, cfg, candidates, cv.folds);
}

namespace {

struct AlternationSetup {
  TauPolicy policy;
  KernelSpec spec;
  int starts = 0;
  std::uint64_t tag = 0;
};

SmoothedFitResult alternate(const Dataset& d, const FitConfig& cfg,
                            const AlternationSetup& setup, const ChangePlaneParams& start,
                            const Vector& weights) {
  SmoothedFitResult out;
  out.h = setup.spec.h;
  out.kernel = setup.spec.kind;
  out.params = start;

  EtaSearchOptions eta_options;
  eta_options.starts = setup.starts;
  eta_options.max_norm = cfg.eta_bound;

  Vector theta_init;
  double prev_obj = kInf;
  double prev_tau = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < cfg.max_outer_iter; ++k) {
    ThetaStep th;
    try {
      th = fit_theta_step(d, out.params.eta, setup.policy, setup.spec, weights, theta_init);
    } catch (const Error& e) {
      // The plane can drift to where the smoothed design loses rank; keep the
      // last good iterate in that case.
      if (e.kind() != ErrorKind::rank_deficient || k == 0) throw;
      break;
    }
    out.params.alpha = th.alpha;
    out.params.beta = th.beta;
    out.tau = th.tau;
    theta_init.resize(d.p() + d.q());
    theta_init << th.alpha, th.beta;

    if (!th.beta.isZero(0.0)) {
      RngStream stream = derive_stream(cfg.seed, combine_ids({setup.tag, static_cast<std::uint64_t>(k)}));
      out.params.eta = fit_eta_step(d, th.alpha, th.beta, th.tau, setup.spec,
                                    out.params.eta, stream, eta_options, weights);
    }
    const double obj = smoothed_loss(d, out.params, out.tau, setup.spec, weights);
    out.loss_trace.push_back(obj);
    out.iterations = k + 1;

    if (k > 0 && std::abs(obj - prev_obj) <= cfg.tol * std::max(1.0, std::abs(prev_obj)) &&
        tau_close(out.tau, prev_tau, cfg.tol) && th.converged) {
      out.converged = true;
      break;
    }
    prev_obj = obj;
    prev_tau = out.tau;
  }
  out.subgroup_labels = classify(out.params.eta, d.U);
  return out;
}

}  // namespace

SmoothedFitResult fit_alternating(const Dataset& d, const FitConfig& cfg) {
  validate_dataset(d);
  cfg.validate();

  RngStream search = derive_stream(cfg.seed, kTagPilotSearch);
  const Vector eta0 = pilot_eta(d, std::max(50, 5 * cfg.eta_starts), search);
  const double h = resolve_h(d, cfg, eta0);
  const ChangePlaneParams start{Vector::Zero(d.p()), Vector::Zero(d.q()), eta0};
  const SmoothedFitResult pilot =
      alternate(d, cfg, {InfiniteTau{}, {cfg.kernel, h}, cfg.eta_starts, kTagPilotFit}, start,
                Vector());
  if (std::holds_alternative<InfiniteTau>(cfg.tau_policy)) return pilot;
  return alternate(d, cfg, {cfg.tau_policy, {cfg.kernel, h}, cfg.eta_starts, kTagMainFit},
                   pilot.params, Vector());
}

SmoothedFitResult refit_from(const Dataset& d, const FitConfig& cfg,
                             const ChangePlaneParams& start, double h, const Vector& weights,
                             std::uint64_t stream_tag) {
  validate_dataset(d);
  cfg.validate();
  check_params(d, start);
  return alternate(d, cfg, {cfg.tau_policy, {cfg.kernel, h}, cfg.eta_starts, stream_tag},
                   start, weights);
}

BootstrapCI bootstrap_ci(const Dataset& d, const FitConfig& cfg, int B, double level,
                         const BootstrapOptions& options) {
  const SmoothedFitResult point = fit_alternating(d, cfg);
  return bootstrap_ci(d, cfg, point, B, level, options);
}

namespace {

// Linear interpolation between order statistics (R's type 7).
double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapCI bootstrap_ci(const Dataset& d, const FitConfig& cfg,
                         const SmoothedFitResult& point, int B, double level,
                         const BootstrapOptions& options) {
  if (B < 100) throw Error(ErrorKind::invalid_argument, "bootstrap needs B >= 100");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "level must lie in (0, 1)");
  }

  FitConfig local = cfg;
  local.eta_starts = 0;
  if (std::isinf(point.tau)) {
    local.tau_policy = InfiniteTau{};
  } else {
    local.tau_policy = FixedTau{point.tau};
  }

  const Index dim = point.params.size();
  std::vector<Vector> draws(static_cast<std::size_t>(B));
  std::vector<char> ok(static_cast<std::size_t>(B), 0);
  parallel_for(static_cast<std::size_t>(B), options.threads, [&](std::size_t b) {
    Vector w = Vector::Ones(d.n());
    if (options.multiplier == MultiplierLaw::exponential) {
      RngStream stream = derive_stream(cfg.seed, combine_ids({kTagBootstrap, b}));
      for (Index i = 0; i < d.n(); ++i) w(i) = stream.exponential();
    }
    try {
      const SmoothedFitResult rep =
          refit_from(d, local, point.params, point.h, w, combine_ids({kTagBootstrap, b, 1}));
      if (rep.converged) {
        draws[b] = rep.params.stacked();
        ok[b] = 1;
      }
    } catch (const Error&) {
      // counted as dropped below
    }
  });

  BootstrapCI ci;
  ci.level = level;
  ci.B = B;
  std::vector<Vector> kept;
  for (std::size_t b = 0; b < draws.size(); ++b) {
    if (ok[b]) kept.push_back(draws[b]);
  }
  ci.dropped = B - static_cast<int>(kept.size());
  if (static_cast<double>(ci.dropped) > options.max_drop_fraction * B) {
    std::ostringstream msg;
    msg << ci.dropped << " of " << B << " bootstrap replicates failed to converge";
    throw Error(ErrorKind::unsolvable, msg.str());
  }

  ci.lower.resize(dim);
  ci.upper.resize(dim);
  std::vector<double> column(kept.size());
  const double tail = 0.5 * (1.0 - level);
  for (Index j = 0; j < dim; ++j) {
    for (std::size_t b = 0; b < kept.size(); ++b) column[b] = kept[b](j);
    std::sort(column.begin(), column.end());
    ci.lower(j) = quantile_sorted(column, tail);
    ci.upper(j) = quantile_sorted(column, 1.0 - tail);
  }
  return ci;
}

double l2_error(const ChangePlaneParams& est, const ChangePlaneParams& truth) {
  if (est.alpha.size() != truth.alpha.size() || est.beta.size() != truth.beta.size()) {
    throw Error(ErrorKind::dimension_mismatch, "estimate and truth dimensions differ");
  }
  return std::sqrt((est.alpha - truth.alpha).squaredNorm() +
                   (est.beta - truth.beta).squaredNorm());
}

double accuracy(const Labels& labels_hat, const Labels& labels_true) {
  if (labels_hat.size() != labels_true.size()) {
    throw Error(ErrorKind::dimension_mismatch, "label arrays differ in length");
  }
  if (labels_hat.empty()) return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels_hat.size(); ++i) {
    agree += labels_hat[i] == labels_true[i] ? 1 : 0;
  }
  return static_cast<double>(agree) / static_cast<double>(labels_hat.size());
}

}  // namespace changeplane
