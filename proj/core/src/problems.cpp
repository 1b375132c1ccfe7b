#include "piag/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "piag/delays.hpp"
#include "piag/validation.hpp"

namespace piag {

namespace {

constexpr std::size_t kGrowthSamples = 1000;
constexpr std::size_t kBetaSamples = 10000;
constexpr double kEstimatedGrowthSlack = 0.05;
constexpr double kInnerTolerance = 1e-12;
constexpr std::size_t kInnerMaxIterations = 5000000;

Matrix gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // Fill row-major so the draw order does not depend on Eigen's storage order.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

Vector gaussian_vector(std::mt19937_64& rng, Index size) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(size);
  for (Index i = 0; i < size; ++i) out[i] = normal(rng);
  return out;
}

std::vector<ComponentPtr> least_squares_blocks(const Matrix& A, const Vector& b, std::size_t N) {
  if (A.rows() != b.size()) throw InputError("least squares: rows(A) != size(b)");
  if (A.cols() == 0) throw InputError("least squares: A has no columns");
  if (N == 0 || static_cast<Index>(N) > A.rows())
    throw InputError("least squares: need 1 <= N <= rows(A) so every block is nonempty");
  std::vector<ComponentPtr> components;
  components.reserve(N);
  for (const auto& [begin, end] : row_blocks(A.rows(), N))
    components.push_back(std::make_shared<LeastSquaresComponent>(A.middleRows(begin, end - begin),
                                                                 b.segment(begin, end - begin)));
  return components;
}

/// Orthonormal basis of null(M) from a full SVD; rank cut at max(rows, cols) eps sigma_max.
Matrix null_space(const Matrix& M) {
  const Index d = M.cols();
  if (M.size() == 0 || M.cwiseAbs().maxCoeff() == 0.0) return Matrix::Identity(d, d);
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(M.rows(), M.cols())) * std::numeric_limits<double>::epsilon() * sv[0];
  Index rank = 0;
  while (rank < sv.size() && sv[rank] > tol) ++rank;
  return svd.matrixV().rightCols(d - rank);
}

void validate_or_throw(const ProblemInstance& problem, std::uint64_t seed, double radius, double qg_slack,
                       const char* what) {
  SamplingOptions components;
  components.samples = 16;
  components.seed = seed;
  components.radius = radius;
  SamplingOptions growth;
  growth.samples = kGrowthSamples;
  growth.seed = splitmix64(seed);
  growth.radius = radius;
  const auto report = validate_problem(problem, components, growth, qg_slack);
  if (!report) throw GenerationError(std::string(what) + " failed validation: " + report.summary());
}

/// Sample minimum of 2 (Phi(x) - Phi*) / d^2(x, X) around the solution set.
double sample_growth_minimum(const ProblemInstance& problem, std::uint64_t seed, const std::optional<Vector>& lo,
                             const std::optional<Vector>& hi) {
  const GroundTruth& truth = problem.require_ground_truth();
  const Vector& center = truth.solutions.point;
  const Index d = problem.dimension();
  // The validators draw center + max(1, |center|) r u with unnormalized
  // Gaussian u; reaching sqrt(d) + 4 times further covers those points, so the
  // estimate is never larger than what validation will see.
  const double radius = std::max(1.0, center.norm()) * (std::sqrt(static_cast<double>(d)) + 4.0);
  const double tiny = 1e-20 * std::max(1.0, center.squaredNorm());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  double best = kInfinity;
  for (std::size_t s = 0; s < kBetaSamples; ++s) {
    Vector x(d);
    if (s % 2 == 0) {
      // Uniform over the feasible box clipped to center +- radius.
      for (Index i = 0; i < d; ++i) {
        const double a = lo ? std::max((*lo)[i], center[i] - radius) : center[i] - radius;
        const double b = hi ? std::min((*hi)[i], center[i] + radius) : center[i] + radius;
        x[i] = a + (b - a) * unit(rng);
      }
    } else {
      Vector u(d);
      for (Index i = 0; i < d; ++i) u[i] = normal(rng);
      const double r = radius * std::pow(10.0, -4.0 * unit(rng));
      x = center + (r / std::max(u.norm(), 1e-300)) * u;
      if (lo) x = x.cwiseMax(*lo).cwiseMin(*hi);
    }
    const double dist = distance_sq_to_solutions(problem, x);
    if (!(dist > tiny)) continue;
    const double gap = optimality_gap(problem, x);
    if (!std::isfinite(gap)) continue;
    best = std::min(best, 2.0 * gap / dist);
  }
  return best;
}

/// beta = sample minimum, capped at L when L > 0 (growth with a smaller
/// constant is implied by growth with a larger one).
GroundTruth with_estimated_beta(const ProblemInstance& problem, GroundTruth truth, std::uint64_t seed,
                                const std::optional<Vector>& lo, const std::optional<Vector>& hi) {
  truth.qg_constant = 1.0;  // placeholder so the instance can be constructed for sampling
  const ProblemInstance probe = problem.with_ground_truth(truth);
  const double minimum = sample_growth_minimum(probe, seed, lo, hi);
  if (!std::isfinite(minimum))
    throw GenerationError("quadratic growth estimate failed: no sample off the solution set");
  if (!(minimum > 0.0)) throw GenerationError("quadratic growth estimate is not positive");
  const double L = problem.total_lipschitz();
  truth.qg_sample_minimum = minimum;
  truth.qg_constant = L > 0.0 ? std::min(minimum, L) : minimum;
  truth.beta_estimated = true;
  return truth;
}

std::vector<double> dirichlet_weights(std::size_t N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exponential(1.0);
  std::vector<double> w(N);
  double total = 0.0;
  for (auto& value : w) {
    value = exponential(rng) + 1e-3;
    total += value;
  }
  for (auto& value : w) value /= total;
  return w;
}

}  // namespace

std::vector<std::pair<Index, Index>> row_blocks(Index rows, std::size_t blocks) {
  if (blocks == 0 || static_cast<Index>(blocks) > rows) throw InputError("row_blocks: need 1 <= blocks <= rows");
  const Index n = static_cast<Index>(blocks);
  const Index base = rows / n;
  const Index extra = rows % n;
  std::vector<std::pair<Index, Index>> out;
  out.reserve(blocks);
  Index begin = 0;
  for (Index i = 0; i < n; ++i) {
    const Index size = base + (i < extra ? 1 : 0);
    out.emplace_back(begin, begin + size);
    begin += size;
  }
  return out;
}

ProblemInstance make_least_squares(const Matrix& A, const Vector& b, std::size_t N, std::uint64_t seed) {
  auto components = least_squares_blocks(A, b, N);
  if (A.cwiseAbs().maxCoeff() == 0.0)
    throw GenerationError("least squares: A = 0 makes every point optimal; beta is undefined");

  const Index m = A.rows();
  const Index d = A.cols();
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(m, d)) * std::numeric_limits<double>::epsilon() * sv[0];
  Index rank = 0;
  while (rank < sv.size() && sv[rank] > tol) ++rank;

  const Matrix U1 = svd.matrixU().leftCols(rank);
  const Matrix V = svd.matrixV();
  const Vector coefficients = (U1.transpose() * b).cwiseQuotient(sv.head(rank));

  GroundTruth truth;
  truth.solutions.point = V.leftCols(rank) * coefficients;
  truth.solutions.null_basis = V.rightCols(d - rank);
  truth.optimal_value = 0.5 * (A * truth.solutions.point - b).squaredNorm();
  truth.qg_constant = sv[rank - 1] * sv[rank - 1];

  ProblemInstance problem(std::move(components), std::make_shared<ZeroRegularizer>(), std::move(truth));
  const double beta = problem.require_ground_truth().qg_constant;
  if (beta > problem.total_lipschitz() * (1.0 + 1e-12))
    throw GenerationError("least squares: beta exceeds L (eta < 1)");
  validate_or_throw(problem, seed, std::max(1.0, problem.require_ground_truth().solutions.point.norm()), 1e-9,
                    "least-squares instance");
  return problem;
}

ProblemInstance make_box_constrained_quadratic(const Matrix& Q, const Vector& q, const Vector& lo, const Vector& hi,
                                               std::size_t N, std::uint64_t seed) {
  const Index d = Q.cols();
  if (Q.rows() != d || q.size() != d || lo.size() != d || hi.size() != d)
    throw InputError("box quadratic: inconsistent shapes");
  if (N == 0) throw InputError("box quadratic: N must be positive");
  for (Index i = 0; i < d; ++i)
    if (!(lo[i] <= hi[i])) throw GenerationError("box quadratic: infeasible box at coordinate " + std::to_string(i));
  {
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InputError("box quadratic: Q not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) throw InputError("box quadratic: Q not positive semidefinite");
  }

  std::vector<ComponentPtr> components;
  for (double w : dirichlet_weights(N, seed))
    components.push_back(std::make_shared<QuadraticComponent>(w * Q, w * q));
  auto box = std::make_shared<BoxIndicator>(lo, hi);

  // Projected gradient on the full quadratic until the unit-step natural
  // residual |x - P(x - grad)| drops below 1e-12 (scaled).
  const double lmax = largest_eigenvalue(Q);
  const double step = lmax > 0.0 ? 1.0 / lmax : 1.0;
  Vector x = box->project(Vector::Zero(d));
  bool converged = false;
  for (std::size_t it = 0; it < kInnerMaxIterations; ++it) {
    const Vector g = Q * x + q;
    const double residual = (x - box->project(x - g)).norm();
    if (residual <= kInnerTolerance * std::max(1.0, (Q * x).norm() + q.norm())) {
      converged = true;
      break;
    }
    x = box->project(x - step * g);
  }
  if (!converged) throw GenerationError("box quadratic: inner projected-gradient solver did not converge");

  Matrix M(d + 1, d);
  M.topRows(d) = Q;
  M.row(d) = q.transpose();

  GroundTruth truth;
  truth.solutions.point = x;
  truth.solutions.null_basis = null_space(M);
  truth.solutions.box_lower = lo;
  truth.solutions.box_upper = hi;

  ProblemInstance plain(components, box);
  truth.optimal_value = objective(plain, x);
  if (truth.solutions.null_basis.cols() == d)
    throw GenerationError("box quadratic: Q = 0 and q = 0 make every feasible point optimal");
  truth = with_estimated_beta(plain, std::move(truth), splitmix64(seed ^ 0xb0c5ULL), lo, hi);

  ProblemInstance problem = plain.with_ground_truth(std::move(truth));
  validate_or_throw(problem, seed, std::max(1.0, x.norm()), kEstimatedGrowthSlack, "box quadratic instance");
  return problem;
}

ProblemInstance make_lasso(const Matrix& A, const Vector& b, double lambda, std::size_t N, std::uint64_t seed) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lasso: lambda must be positive");
  auto components = least_squares_blocks(A, b, N);
  auto l1 = std::make_shared<L1Regularizer>(lambda);
  const Index d = A.cols();

  const double lmax = largest_eigenvalue(A.transpose() * A);
  const double step = lmax > 0.0 ? 1.0 / lmax : 1.0;
  Vector x = Vector::Zero(d);
  bool converged = false;
  for (std::size_t it = 0; it < kInnerMaxIterations; ++it) {
    const Vector next = l1->prox(step, x - step * (A.transpose() * (A * x - b)));
    const double change = (next - x).norm();
    x = next;
    if (change <= kInnerTolerance * std::max(1.0, x.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw GenerationError("lasso: inner forward-backward solver did not converge");

  ProblemInstance plain(std::move(components), l1);
  GroundTruth truth;
  truth.solutions.point = x;
  truth.solutions.null_basis = Matrix(d, 0);
  truth.optimal_value = objective(plain, x);
  truth = with_estimated_beta(plain, std::move(truth), splitmix64(seed ^ 0x1a55ULL), std::nullopt, std::nullopt);

  ProblemInstance problem = plain.with_ground_truth(std::move(truth));
  validate_or_throw(problem, seed, std::max(1.0, x.norm()), kEstimatedGrowthSlack, "lasso instance");
  return problem;
}

ProblemInstance random_least_squares(const RandomLeastSquaresOptions& options) {
  if (options.d <= 0 || options.m <= 0) throw InputError("random least squares: d and m must be positive");
  if (options.rank <= 0 || options.rank > std::min(options.d, options.m))
    throw InputError("random least squares: need 1 <= rank <= min(m, d)");
  std::mt19937_64 rng(splitmix64(options.seed));
  const Matrix left = gaussian_matrix(rng, options.m, options.rank);
  const Matrix right = gaussian_matrix(rng, options.rank, options.d);
  const Matrix A = left * right / std::sqrt(static_cast<double>(options.rank));
  const Vector b = gaussian_vector(rng, options.m);
  return make_least_squares(A, b, options.N, options.seed);
}

ProblemInstance random_lasso(Index d, Index m, double lambda, std::size_t N, std::uint64_t seed) {
  if (d <= 0 || m <= 0) throw InputError("random lasso: d and m must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  const Matrix A = gaussian_matrix(rng, m, d) / std::sqrt(static_cast<double>(m));
  const Vector b = gaussian_vector(rng, m);
  return make_lasso(A, b, lambda, N, seed);
}

ProblemInstance random_box_quadratic(Index d, Index m, double lo, double hi, std::size_t N, std::uint64_t seed) {
  if (d <= 0 || m <= 0) throw InputError("random box quadratic: d and m must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  const Matrix G = gaussian_matrix(rng, m, d);
  Matrix Q = G.transpose() * G / static_cast<double>(m);
  Q = 0.5 * (Q + Q.transpose()).eval();
  const Vector q = gaussian_vector(rng, d);
  return make_box_constrained_quadratic(Q, q, Vector::Constant(d, lo), Vector::Constant(d, hi), N, seed);
}

Vector random_point(Index d, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  return gaussian_vector(rng, d);
}

Vector null_direction(const ProblemInstance& problem) {
  const GroundTruth& truth = problem.require_ground_truth();
  if (truth.solutions.null_basis.cols() == 0)
    throw CapabilityError("solution set is a single point; no flat direction exists");
  return truth.solutions.null_basis.col(0);
}

}  // namespace piag
