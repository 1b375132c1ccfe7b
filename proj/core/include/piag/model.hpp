#pragma once

// Composite objective Phi(x) = sum_n f_n(x) + h(x) with smooth convex f_n and a
// prox-capable convex regularizer h.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "piag/errors.hpp"

namespace piag {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Convex component f_n with an L_n-Lipschitz gradient.
class SmoothComponent {
 public:
  virtual ~SmoothComponent() = default;

  virtual Index dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  /// Gradient Lipschitz constant L_n. Zero is allowed for affine components.
  virtual double lipschitz() const = 0;
};

/// Proper closed convex h. value() returns +inf outside dom h.
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  virtual double value(const Vector& x) const = 0;
  /// argmin_x h(x) + |x - y|^2 / (2 alpha). Callers guarantee alpha > 0.
  virtual Vector prox(double alpha, const Vector& y) const = 0;
};

using ComponentPtr = std::shared_ptr<const SmoothComponent>;
using RegularizerPtr = std::shared_ptr<const Regularizer>;

// ---------------------------------------------------------------------------
// Library-provided components and regularizers
// ---------------------------------------------------------------------------

/// f(x) = 0.5 * |A x - b|^2, L = largest eigenvalue of A^T A.
class LeastSquaresComponent final : public SmoothComponent {
 public:
  LeastSquaresComponent(Matrix A, Vector b);

  Index dimension() const override { return A_.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double lipschitz() const override { return lipschitz_; }

  const Matrix& matrix() const { return A_; }
  const Vector& rhs() const { return b_; }

 private:
  Matrix A_;
  Vector b_;
  double lipschitz_;
};

/// f(x) = 0.5 * x^T Q x + q^T x with Q symmetric positive semidefinite.
class QuadraticComponent final : public SmoothComponent {
 public:
  QuadraticComponent(Matrix Q, Vector q);

  Index dimension() const override { return Q_.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double lipschitz() const override { return lipschitz_; }

  const Matrix& hessian() const { return Q_; }
  const Vector& linear() const { return q_; }

 private:
  Matrix Q_;
  Vector q_;
  double lipschitz_;
};

/// User-supplied component. Run validate_component() before trusting it.
class FunctionComponent final : public SmoothComponent {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionComponent(Index dimension, ValueFn value, GradientFn gradient, double lipschitz);

  Index dimension() const override { return dimension_; }
  double value(const Vector& x) const override { return value_(x); }
  Vector gradient(const Vector& x) const override { return gradient_(x); }
  double lipschitz() const override { return lipschitz_; }

 private:
  Index dimension_;
  ValueFn value_;
  GradientFn gradient_;
  double lipschitz_;
};

class ZeroRegularizer final : public Regularizer {
 public:
  double value(const Vector&) const override { return 0.0; }
  Vector prox(double, const Vector& y) const override { return y; }
};

/// h(x) = lambda * |x|_1; prox is soft-thresholding at alpha * lambda.
class L1Regularizer final : public Regularizer {
 public:
  explicit L1Regularizer(double lambda);

  double value(const Vector& x) const override;
  Vector prox(double alpha, const Vector& y) const override;
  double weight() const { return lambda_; }

 private:
  double lambda_;
};

/// Indicator of the box [lo, hi]. Bounds may be infinite.
class BoxIndicator final : public Regularizer {
 public:
  BoxIndicator(Vector lo, Vector hi);

  double value(const Vector& x) const override;
  Vector prox(double alpha, const Vector& y) const override;
  Vector project(const Vector& y) const;

  const Vector& lower() const { return lo_; }
  const Vector& upper() const { return hi_; }

 private:
  Vector lo_;
  Vector hi_;
};

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// Solution set X = (point + span(null_basis)) intersected with an optional box.
///
/// null_basis has orthonormal columns; zero columns means X is the single
/// point. Projection onto the affine part is exact; with a box present the
/// projection onto the intersection is computed by Dykstra's alternating
/// projections.
struct SolutionSet {
  Vector point;
  Matrix null_basis;
  std::optional<Vector> box_lower;
  std::optional<Vector> box_upper;

  Index dimension() const { return point.size(); }
  bool has_box() const { return box_lower.has_value(); }
  Vector project(const Vector& x) const;
  double distance_sq(const Vector& x) const { return (x - project(x)).squaredNorm(); }
};

struct GroundTruth {
  double optimal_value = 0.0;
  /// Quadratic growth constant beta.
  double qg_constant = 0.0;
  SolutionSet solutions;
  /// True when beta comes from sampling rather than a closed form.
  bool beta_estimated = false;
  /// Raw sample minimum of 2 (Phi - Phi*) / d^2 for estimated instances.
  std::optional<double> qg_sample_minimum;
};

// ---------------------------------------------------------------------------
// Problem instance
// ---------------------------------------------------------------------------

class ProblemInstance {
 public:
  ProblemInstance(std::vector<ComponentPtr> components, RegularizerPtr regularizer,
                  std::optional<GroundTruth> ground_truth = std::nullopt);

  Index dimension() const { return dimension_; }
  std::size_t size() const { return components_.size(); }

  const std::vector<ComponentPtr>& components() const { return components_; }
  const SmoothComponent& component(std::size_t n) const { return *components_[n]; }
  const Regularizer& regularizer() const { return *regularizer_; }
  const RegularizerPtr& regularizer_ptr() const { return regularizer_; }

  /// L = sum_n L_n, accumulated in index order.
  double total_lipschitz() const { return total_lipschitz_; }

  const std::optional<GroundTruth>& ground_truth() const { return ground_truth_; }
  bool has_ground_truth() const { return ground_truth_.has_value(); }
  /// Throws CapabilityError when no ground truth is attached.
  const GroundTruth& require_ground_truth() const;

  ProblemInstance with_ground_truth(GroundTruth truth) const;

  /// True when h = 0 and every component is a LeastSquaresComponent; enables
  /// the cancellation-free optimality gap 0.5 |A (x - x_hat)|^2.
  bool is_pure_least_squares() const { return pure_least_squares_; }

 private:
  std::vector<ComponentPtr> components_;
  RegularizerPtr regularizer_;
  std::optional<GroundTruth> ground_truth_;
  Index dimension_ = 0;
  double total_lipschitz_ = 0.0;
  bool pure_least_squares_ = false;
};

/// Phi(x) = sum_n f_n(x) + h(x); +inf outside dom h.
double objective(const ProblemInstance& problem, const Vector& x);

/// sum_n grad f_n(x), accumulated in ascending component order.
Vector full_gradient(const ProblemInstance& problem, const Vector& x);

/// argmin_z h(z) + |z - y|^2 / (2 alpha).
Vector prox_step(const ProblemInstance& problem, double alpha, const Vector& y);

/// Phi(x) - Phi*. Requires ground truth.
double optimality_gap(const ProblemInstance& problem, const Vector& x);

/// Projection of x onto the solution set. Requires ground truth.
Vector project_to_solutions(const ProblemInstance& problem, const Vector& x);

/// d^2(x, X). Requires ground truth.
double distance_sq_to_solutions(const ProblemInstance& problem, const Vector& x);

/// Largest eigenvalue of a symmetric positive semidefinite matrix (clamped at 0).
double largest_eigenvalue(const Matrix& symmetric);

void require_dimension(const ProblemInstance& problem, const Vector& x, const char* what);

}  // namespace piag
