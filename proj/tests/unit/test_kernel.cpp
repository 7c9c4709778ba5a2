#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "changeplane/fit.hpp"
#include "changeplane/kernel.hpp"
#include "changeplane/simlab.hpp"

namespace cp = changeplane;
using cp::KernelKind;
using cp::Matrix;
using cp::Vector;

namespace {

const KernelKind kAllKinds[] = {KernelKind::sigmoid, KernelKind::normal_cdf, KernelKind::normal_mix};

}  // namespace

TEST(Kernel, ValuesAtZero) {
  EXPECT_DOUBLE_EQ(cp::kernel_eval({KernelKind::sigmoid, 1.0}, 0.0).K, 0.5);
  const auto nc = cp::kernel_eval({KernelKind::normal_cdf, 1.0}, 0.0);
  EXPECT_DOUBLE_EQ(nc.K, 0.5);
  EXPECT_NEAR(nc.K1, 0.3989422804, 1e-10);
  EXPECT_DOUBLE_EQ(cp::kernel_eval({KernelKind::normal_mix, 1.0}, 0.0).K, 0.5);
}

TEST(Kernel, ScalesArgumentByH) {
  for (KernelKind kind : kAllKinds) {
    const auto a = cp::kernel_eval({kind, 0.5}, 0.3);
    const auto b = cp::kernel_standard(kind, 0.6);
    EXPECT_DOUBLE_EQ(a.K, b.K);
    EXPECT_DOUBLE_EQ(a.K1, b.K1);
    EXPECT_DOUBLE_EQ(a.K2, b.K2);
  }
}

TEST(Kernel, RejectsNonpositiveH) {
  EXPECT_THROW(cp::kernel_eval({KernelKind::sigmoid, 0.0}, 1.0), cp::Error);
  EXPECT_THROW(cp::indicator_gap({KernelKind::sigmoid, -1.0}, 1.0), cp::Error);
}

TEST(Kernel, SymmetryProperties) {
  cp::RngStream s = cp::derive_stream(1, 0);
  for (KernelKind kind : kAllKinds) {
    for (int k = 0; k < 1000; ++k) {
      const double u = 20.0 * (s.uniform() - 0.5);
      const auto pos = cp::kernel_standard(kind, u);
      const auto neg = cp::kernel_standard(kind, -u);
      EXPECT_NEAR(pos.K + neg.K, 1.0, 1e-12);
      EXPECT_NEAR(pos.K1, neg.K1, 1e-12);
      if (kind != KernelKind::normal_mix) {
        EXPECT_GE(pos.K1, 0.0);
        EXPECT_GE(pos.K, 0.0);
        EXPECT_LE(pos.K, 1.0);
      }
    }
  }
}

TEST(Kernel, DerivativesMatchFiniteDifferences) {
  cp::RngStream s = cp::derive_stream(2, 0);
  const double step = 1e-5;
  for (KernelKind kind : kAllKinds) {
    for (int k = 0; k < 500; ++k) {
      const double u = 20.0 * (s.uniform() - 0.5);
      const auto v = cp::kernel_standard(kind, u);
      const auto up = cp::kernel_standard(kind, u + step);
      const auto dn = cp::kernel_standard(kind, u - step);
      const double fd1 = (up.K - dn.K) / (2 * step);
      const double fd2 = (up.K1 - dn.K1) / (2 * step);
      EXPECT_NEAR(fd1, v.K1, 1e-6 * std::max(1.0, std::abs(v.K1))) << cp::to_string(kind) << u;
      EXPECT_NEAR(fd2, v.K2, 1e-6 * std::max(1.0, std::abs(v.K2))) << cp::to_string(kind) << u;
    }
  }
}

TEST(Kernel, NormalMixLeavesUnitInterval) {
  const double u = std::numbers::sqrt2;
  EXPECT_GT(cp::kernel_standard(KernelKind::normal_mix, u).K, 1.0);
}

TEST(IndicatorGap, Examples) {
  EXPECT_LT(cp::indicator_gap({KernelKind::sigmoid, 0.01}, 1.0), 1e-4);
  for (KernelKind kind : kAllKinds) EXPECT_DOUBLE_EQ(cp::indicator_gap({kind, 0.7}, 0.0), 0.5);
  EXPECT_LT(cp::indicator_gap({KernelKind::normal_cdf, 0.1}, -1.0), 1e-20);
  EXPECT_GT(cp::indicator_gap({KernelKind::normal_cdf, 0.1}, -1.0), 0.0);
}

TEST(IndicatorGap, NonincreasingInTails) {
  for (KernelKind kind : kAllKinds) {
    double prev = 1.0;
    for (double t = 3.0; t < 30.0; t += 0.5) {
      const double gap = std::max(cp::indicator_gap({kind, 1.0}, t), cp::indicator_gap({kind, 1.0}, -t));
      EXPECT_LE(gap, prev) << cp::to_string(kind) << " " << t;
      prev = gap;
    }
  }
}

TEST(RuleOfThumb, Examples) {
  EXPECT_NEAR(cp::rule_of_thumb_h(1.0, 1.0, 100), std::log(100.0) / 10.0, 1e-15);
  EXPECT_NEAR(cp::rule_of_thumb_h(1.0, 1.0, 100), 0.4605, 1e-4);
  for (cp::Index n : {10, 57, 1000}) {
    EXPECT_DOUBLE_EQ(cp::rule_of_thumb_h(2.0, 1.3, n), 2.0 * cp::rule_of_thumb_h(1.0, 1.3, n));
    EXPECT_NEAR(cp::rule_of_thumb_h(1.0, 1.0, n) * std::sqrt(double(n)) / std::log(double(n)), 1.0,
                1e-14);
  }
}

TEST(RuleOfThumb, NonintegerSampleSizeFormula) {
  // The e^2 example evaluated through the closed form.
  const double n = std::exp(2.0);
  EXPECT_NEAR(1.0 * std::log(n) / std::sqrt(n), 2.0 / std::exp(1.0), 1e-15);
  EXPECT_NEAR(2.0 / std::exp(1.0), 0.7358, 1e-4);
}

TEST(RuleOfThumb, Errors) {
  EXPECT_THROW(cp::rule_of_thumb_h(0.0, 1.0, 10), cp::Error);
  EXPECT_THROW(cp::rule_of_thumb_h(1.0, -1.0, 10), cp::Error);
  EXPECT_THROW(cp::rule_of_thumb_h(1.0, 1.0, 1), cp::Error);
}

TEST(SigmaU, Examples) {
  EXPECT_NEAR(cp::estimate_sigma_u(Matrix::Ones(5, 1), Vector(0)), std::sqrt(5.0 / 4.0), 1e-15);
  Matrix U(4, 2);
  U << 1, -1, 2, -2, -3, 3, 0, 0;
  EXPECT_EQ(cp::estimate_sigma_u(U, Vector{{1.0}}), 0.0);

  cp::RngStream s = cp::derive_stream(3, 0);
  Matrix G(40, 3);
  for (cp::Index i = 0; i < 40; ++i) {
    for (cp::Index j = 0; j < 3; ++j) G(i, j) = s.normal();
  }
  double ss = 0.0;
  for (cp::Index i = 0; i < 40; ++i) ss += G(i, 0) * G(i, 0);
  EXPECT_NEAR(cp::estimate_sigma_u(G, Vector::Zero(2)), std::sqrt(ss / 37.0), 1e-12);
}

TEST(SigmaU, Errors) {
  EXPECT_THROW(cp::estimate_sigma_u(Matrix::Ones(3, 3), Vector::Zero(2)), cp::Error);
  EXPECT_THROW(cp::estimate_sigma_u(Matrix::Ones(10, 3), Vector::Zero(1)), cp::Error);
}

TEST(CvArgmin, TiesGoToSmallerCandidate) {
  EXPECT_DOUBLE_EQ(cp::cv_argmin({0.4, 0.2, 0.8}, {1.0, 1.0, 1.0}), 0.2);
  EXPECT_DOUBLE_EQ(cp::cv_argmin({0.4, 0.2, 0.8}, {1.0, 2.0, 0.5}), 0.8);
  EXPECT_DOUBLE_EQ(cp::cv_argmin({0.3}, {7.0}), 0.3);
}

TEST(SelectHCv, SingleCandidate) {
  cp::DgpConfig dgp;
  dgp.n = 120;
  dgp.seed = 4;
  const auto gen = cp::gen_dataset(dgp);
  cp::FitConfig cfg;
  cfg.eta_starts = 2;
  EXPECT_DOUBLE_EQ(cp::select_h_cv(gen.data, cfg, {0.37}, 3), 0.37);
}

TEST(SelectHCv, Deterministic) {
  cp::DgpConfig dgp;
  dgp.n = 150;
  dgp.seed = 5;
  const auto gen = cp::gen_dataset(dgp);
  cp::FitConfig cfg;
  cfg.eta_starts = 2;
  cfg.seed = 8;
  const std::vector<double> candidates{0.1, 0.5, 2.0};
  EXPECT_EQ(cp::select_h_cv(gen.data, cfg, candidates, 3), cp::select_h_cv(gen.data, cfg, candidates, 3));
}

TEST(SelectHCv, Errors) {
  cp::DgpConfig dgp;
  dgp.n = 40;
  const auto gen = cp::gen_dataset(dgp);
  cp::FitConfig cfg;
  EXPECT_THROW(cp::select_h_cv(gen.data, cfg, {0.5}, 41), cp::Error);
  EXPECT_THROW(cp::select_h_cv(gen.data, cfg, {0.5}, 1), cp::Error);
  EXPECT_THROW(cp::select_h_cv(gen.data, cfg, {}, 5), cp::Error);
  EXPECT_THROW(cp::select_h_cv(gen.data, cfg, {-0.5}, 5), cp::Error);
}
