#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace changeplane {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Binary subgroup labels; entry i is 1 when observation i lies on the
// nonnegative side of the change plane.
using Labels = std::vector<int>;

enum class ErrorKind {
  dimension_mismatch,
  non_finite,
  invalid_argument,
  rank_deficient,
  identifiability,
  unsolvable,
  io,
  parse,
  missing_column,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Observed sample of the change-plane model
///   y = X'alpha + Z'beta 1(U'gamma >= 0) + eps.
/// Column 0 of U is the coordinate whose coefficient is normalised to one.
struct Dataset {
  Vector y;
  Matrix X;  // n x p baseline design
  Matrix Z;  // n x q grouping-difference design
  Matrix U;  // n x r grouping design

  Index n() const { return y.size(); }
  Index p() const { return X.cols(); }
  Index q() const { return Z.cols(); }
  Index r() const { return U.cols(); }

  // Rows selected by `rows`, in that order.
  Dataset subset(const std::vector<Index>& rows) const;
};

/// Throws Error{dimension_mismatch} naming the offending block, or
/// Error{non_finite} citing (row, column), or Error{invalid_argument} when
/// n < max(p + q, r) + 1.
void validate_dataset(const Dataset& d);

/// (alpha, beta, eta) with the boundary U_1 + U_2'eta >= 0.
struct ChangePlaneParams {
  Vector alpha;
  Vector beta;
  Vector eta;

  Index size() const { return alpha.size() + beta.size() + eta.size(); }

  // Concatenation (alpha', beta', eta')'.
  Vector stacked() const;
  static ChangePlaneParams from_stacked(const Vector& zeta, Index p, Index q,
                                        Index r);
};

/// Unnormalised grouping parameter; must not be the zero vector.
class GammaVector {
 public:
  explicit GammaVector(Vector gamma);

  const Vector& gamma() const { return gamma_; }
  Index size() const { return gamma_.size(); }

 private:
  Vector gamma_;
};

struct EtaForm {
  Vector eta;
  // True when gamma_1 < 0: the classifier 1(U'gamma >= 0) then equals
  // 1(U_1 + U_2'eta <= 0) rather than 1(U_1 + U_2'eta >= 0).
  bool flip = false;
};

EtaForm gamma_to_eta(const GammaVector& g);

/// Entry i is 1 iff U(i,0) + U(i,1:)·eta >= 0. Ties at zero go to group 1.
Labels classify(const Vector& eta, const Matrix& U);

/// 1(U'gamma >= 0) row by row, no reparametrisation.
Labels classify_gamma(const Vector& gamma, const Matrix& U);

enum class KernelKind { sigmoid, normal_cdf, normal_mix };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

// Smoothness parameter policies.
struct RuleOfThumbH {
  double c_h = 1.0;
};
struct FixedH {
  double h = 0.0;
};
struct CrossValidatedH {
  int folds = 5;
  // Candidate grid, expressed as multiples of the rule-of-thumb value.
  std::vector<double> multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
};
using HPolicy = std::variant<RuleOfThumbH, FixedH, CrossValidatedH>;

// Robustification parameter policies.
struct AdaptiveTau {};
struct FixedTau {
  double tau = 0.0;
};
struct InfiniteTau {};
using TauPolicy = std::variant<AdaptiveTau, FixedTau, InfiniteTau>;

struct FitConfig {
  KernelKind kernel = KernelKind::sigmoid;
  HPolicy h_policy = RuleOfThumbH{};
  TauPolicy tau_policy = AdaptiveTau{};
  int max_outer_iter = 50;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  // Random restarts of the eta search on top of the warm start.
  int eta_starts = 20;
  // The eta search is confined to ||eta|| <= eta_bound, i.e. |gamma_1| bounded
  // away from zero on the sphere.
  double eta_bound = 10.0;

  void validate() const;
};

}  // namespace changeplane
