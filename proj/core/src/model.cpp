#include "piag/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace piag {

double largest_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InputError("eigenvalue computation failed");
  return std::max(0.0, solver.eigenvalues().maxCoeff());
}

// --- LeastSquaresComponent -------------------------------------------------

LeastSquaresComponent::LeastSquaresComponent(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size()) throw InputError("least-squares component: rows(A) != size(b)");
  if (A_.rows() == 0 || A_.cols() == 0) throw InputError("least-squares component: empty matrix");
  // A A^T and A^T A share their nonzero spectrum; factor the smaller one.
  lipschitz_ = A_.rows() < A_.cols() ? largest_eigenvalue(A_ * A_.transpose())
                                     : largest_eigenvalue(A_.transpose() * A_);
}

double LeastSquaresComponent::value(const Vector& x) const { return 0.5 * (A_ * x - b_).squaredNorm(); }

Vector LeastSquaresComponent::gradient(const Vector& x) const { return A_.transpose() * (A_ * x - b_); }

// --- QuadraticComponent ----------------------------------------------------

QuadraticComponent::QuadraticComponent(Matrix Q, Vector q) : Q_(std::move(Q)), q_(std::move(q)) {
  if (Q_.rows() != Q_.cols()) throw InputError("quadratic component: Q must be square");
  if (Q_.rows() != q_.size()) throw InputError("quadratic component: size(q) != order(Q)");
  if (Q_.rows() == 0) throw InputError("quadratic component: empty matrix");
  const double scale = std::max(1.0, Q_.cwiseAbs().maxCoeff());
  if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("quadratic component: Q is not symmetric");
  lipschitz_ = largest_eigenvalue(Q_);
}

double QuadraticComponent::value(const Vector& x) const { return 0.5 * x.dot(Q_ * x) + q_.dot(x); }

Vector QuadraticComponent::gradient(const Vector& x) const { return Q_ * x + q_; }

// --- FunctionComponent -----------------------------------------------------

FunctionComponent::FunctionComponent(Index dimension, ValueFn value, GradientFn gradient, double lipschitz)
    : dimension_(dimension), value_(std::move(value)), gradient_(std::move(gradient)), lipschitz_(lipschitz) {
  if (dimension_ <= 0) throw InputError("function component: dimension must be positive");
  if (!value_ || !gradient_) throw InputError("function component: value and gradient are required");
  if (!(lipschitz_ >= 0.0) || !std::isfinite(lipschitz_))
    throw ParameterError("function component: Lipschitz constant must be finite and nonnegative");
}

// --- Regularizers ----------------------------------------------------------

L1Regularizer::L1Regularizer(double lambda) : lambda_(lambda) {
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw ParameterError("l1 weight must be finite and >= 0");
}

double L1Regularizer::value(const Vector& x) const { return lambda_ * x.lpNorm<1>(); }

Vector L1Regularizer::prox(double alpha, const Vector& y) const {
  const double t = alpha * lambda_;
  Vector out(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double magnitude = std::max(std::abs(y[i]) - t, 0.0);
    out[i] = std::copysign(magnitude, y[i]);
  }
  return out;
}

BoxIndicator::BoxIndicator(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw InputError("box: bound sizes differ");
  for (Index i = 0; i < lo_.size(); ++i) {
    if (std::isnan(lo_[i]) || std::isnan(hi_[i])) throw InputError("box: NaN bound");
    if (lo_[i] > hi_[i]) throw InputError("box: empty (lo > hi at coordinate " + std::to_string(i) + ")");
  }
}

double BoxIndicator::value(const Vector& x) const {
  if (x.size() != lo_.size()) throw InputError("box: dimension mismatch");
  for (Index i = 0; i < x.size(); ++i)
    if (!(x[i] >= lo_[i] && x[i] <= hi_[i])) return kInfinity;
  return 0.0;
}

Vector BoxIndicator::project(const Vector& y) const {
  if (y.size() != lo_.size()) throw InputError("box: dimension mismatch");
  return y.cwiseMax(lo_).cwiseMin(hi_);
}

Vector BoxIndicator::prox(double, const Vector& y) const { return project(y); }

// --- SolutionSet -----------------------------------------------------------

namespace {

Vector project_affine(const SolutionSet& set, const Vector& x) {
  if (set.null_basis.cols() == 0) return set.point;
  return set.point + set.null_basis * (set.null_basis.transpose() * (x - set.point));
}

}  // namespace

Vector SolutionSet::project(const Vector& x) const {
  if (x.size() != point.size()) throw InputError("solution set: dimension mismatch");
  if (null_basis.cols() == 0) return point;
  if (!has_box()) return project_affine(*this, x);

  // Dykstra: alternate affine and box projections with correction terms.
  const Vector& lo = *box_lower;
  const Vector& hi = *box_upper;
  Vector current = x;
  Vector p = Vector::Zero(x.size());
  Vector q = Vector::Zero(x.size());
  constexpr int kMaxSweeps = 100000;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const Vector y = project_affine(*this, current + p);
    p = current + p - y;
    const Vector next = (y + q).cwiseMax(lo).cwiseMin(hi);
    q = y + q - next;
    const double change = (next - current).norm();
    current = next;
    if (change <= 1e-15 * std::max(1.0, current.norm()) && (current - y).norm() <= 1e-13 * std::max(1.0, current.norm()))
      break;
  }
  return current;
}

// --- ProblemInstance -------------------------------------------------------

ProblemInstance::ProblemInstance(std::vector<ComponentPtr> components, RegularizerPtr regularizer,
                                 std::optional<GroundTruth> ground_truth)
    : components_(std::move(components)), regularizer_(std::move(regularizer)), ground_truth_(std::move(ground_truth)) {
  if (components_.empty()) throw InputError("problem needs at least one smooth component");
  if (!regularizer_) throw InputError("problem needs a regularizer (use ZeroRegularizer for h = 0)");
  dimension_ = components_.front()->dimension();
  pure_least_squares_ = dynamic_cast<const ZeroRegularizer*>(regularizer_.get()) != nullptr;
  for (std::size_t n = 0; n < components_.size(); ++n) {
    if (!components_[n]) throw InputError("null component at index " + std::to_string(n));
    if (components_[n]->dimension() != dimension_)
      throw InputError("component " + std::to_string(n) + " has dimension " +
                       std::to_string(components_[n]->dimension()) + ", expected " + std::to_string(dimension_));
    total_lipschitz_ += components_[n]->lipschitz();
    if (dynamic_cast<const LeastSquaresComponent*>(components_[n].get()) == nullptr) pure_least_squares_ = false;
  }
  if (ground_truth_) {
    if (ground_truth_->solutions.dimension() != dimension_)
      throw InputError("ground truth solution set has the wrong dimension");
    if (!(ground_truth_->qg_constant > 0.0)) throw ParameterError("quadratic growth constant must be positive");
  }
}

const GroundTruth& ProblemInstance::require_ground_truth() const {
  if (!ground_truth_) throw CapabilityError("operation requires ground truth (Phi*, projection onto X, beta)");
  return *ground_truth_;
}

ProblemInstance ProblemInstance::with_ground_truth(GroundTruth truth) const {
  return ProblemInstance(components_, regularizer_, std::move(truth));
}

void require_dimension(const ProblemInstance& problem, const Vector& x, const char* what) {
  if (x.size() != problem.dimension())
    throw InputError(std::string(what) + ": point has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(problem.dimension()));
}

double objective(const ProblemInstance& problem, const Vector& x) {
  require_dimension(problem, x, "objective");
  const double h = problem.regularizer().value(x);
  if (h == kInfinity) return kInfinity;
  double smooth = 0.0;
  for (const auto& f : problem.components()) smooth += f->value(x);
  return smooth + h;
}

Vector full_gradient(const ProblemInstance& problem, const Vector& x) {
  require_dimension(problem, x, "full_gradient");
  Vector sum = Vector::Zero(problem.dimension());
  for (const auto& f : problem.components()) sum += f->gradient(x);
  return sum;
}

Vector prox_step(const ProblemInstance& problem, double alpha, const Vector& y) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("prox step size must be positive and finite");
  require_dimension(problem, y, "prox_step");
  return problem.regularizer().prox(alpha, y);
}

double optimality_gap(const ProblemInstance& problem, const Vector& x) {
  const GroundTruth& truth = problem.require_ground_truth();
  require_dimension(problem, x, "optimality_gap");
  if (problem.is_pure_least_squares()) {
    // Phi(x) - Phi* = 0.5 |A (x - x_hat)|^2 at a least-squares solution x_hat.
    const Vector offset = x - truth.solutions.point;
    double gap = 0.0;
    for (const auto& f : problem.components()) {
      const auto& ls = static_cast<const LeastSquaresComponent&>(*f);
      gap += 0.5 * (ls.matrix() * offset).squaredNorm();
    }
    return gap;
  }
  const double phi = objective(problem, x);
  if (phi == kInfinity) return kInfinity;
  return phi - truth.optimal_value;
}

Vector project_to_solutions(const ProblemInstance& problem, const Vector& x) {
  const GroundTruth& truth = problem.require_ground_truth();
  require_dimension(problem, x, "project_to_solutions");
  return truth.solutions.project(x);
}

double distance_sq_to_solutions(const ProblemInstance& problem, const Vector& x) {
  return (x - project_to_solutions(problem, x)).squaredNorm();
}

}  // namespace piag
