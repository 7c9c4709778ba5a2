#include <cmath>
#include <limits>

#include "changeplane/fit.hpp"
#include "changeplane/huber.hpp"
#include "changeplane/kernel.hpp"

namespace changeplane {

namespace {

constexpr std::uint64_t kTagFolds = 0x666f6c6473ULL;

double held_out_loss(const Dataset& test, const SmoothedFitResult& fit) {
  return indicator_loss(test, fit.params, fit.tau);
}

}  // namespace

double cv_argmin(const std::vector<double>& candidates, const std::vector<double>& losses) {
  if (candidates.empty() || candidates.size() != losses.size()) {
    throw Error(ErrorKind::invalid_argument, "candidates and losses must be nonempty and aligned");
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const bool lower = losses[k] < losses[best];
    const bool tie_smaller = losses[k] == losses[best] && candidates[k] < candidates[best];
    if (lower || tie_smaller) best = k;
  }
  return candidates[best];
}

double select_h_cv(const Dataset& d, const FitConfig& cfg,
                   const std::vector<double>& candidates, int folds) {
  if (candidates.empty()) throw Error(ErrorKind::invalid_argument, "no candidate h values");
  for (double h : candidates) {
    if (!(h > 0.0)) throw Error(ErrorKind::invalid_argument, "candidate h values must be positive");
  }
  if (folds < 2) throw Error(ErrorKind::invalid_argument, "cross-validation needs at least 2 folds");
  if (d.n() < folds) throw Error(ErrorKind::invalid_argument, "fewer rows than folds");
  if (candidates.size() == 1) return candidates.front();

  RngStream stream = derive_stream(cfg.seed, kTagFolds);
  const std::vector<Index> perm = random_permutation(d.n(), stream);
  std::vector<std::vector<Index>> train(static_cast<std::size_t>(folds));
  std::vector<std::vector<Index>> test(static_cast<std::size_t>(folds));
  for (Index k = 0; k < d.n(); ++k) {
    const auto fold = static_cast<std::size_t>(k % folds);
    for (std::size_t f = 0; f < train.size(); ++f) {
      (f == fold ? test[f] : train[f]).push_back(perm[static_cast<std::size_t>(k)]);
    }
  }

  std::vector<double> losses;
  losses.reserve(candidates.size());
  for (double h : candidates) {
    FitConfig local = cfg;
    local.h_policy = FixedH{h};
    double total = 0.0;
    for (std::size_t f = 0; f < train.size() && std::isfinite(total); ++f) {
      try {
        const SmoothedFitResult fit = fit_alternating(d.subset(train[f]), local);
        total += held_out_loss(d.subset(test[f]), fit);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::rank_deficient && e.kind() != ErrorKind::invalid_argument &&
            e.kind() != ErrorKind::unsolvable) {
          throw;
        }
        total = std::numeric_limits<double>::infinity();
      }
    }
    losses.push_back(total);
  }
  return cv_argmin(candidates, losses);
}

}  // namespace changeplane
