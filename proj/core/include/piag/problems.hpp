#pragma once

// Synthetic problem instances with ground truth. Least-squares instances carry
// exact Phi*, solution set and quadratic growth constant (including
// rank-deficient, hence not strongly convex, ones). Box-constrained quadratics
// and lasso instances use high-accuracy inner solvers and a sampled beta, and
// are flagged beta_estimated.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "piag/model.hpp"

namespace piag {

/// Splits m rows into N contiguous nonempty blocks [begin, end); the first
/// m % N blocks get one extra row.
std::vector<std::pair<Index, Index>> row_blocks(Index rows, std::size_t blocks);

/// f_n(x) = 0.5 |A_n x - b_n|^2 over contiguous row blocks, h = 0.
///
/// X = x_hat + null(A) with x_hat the minimum-norm least-squares solution,
/// beta = smallest nonzero eigenvalue of A^T A. Throws GenerationError for a
/// zero matrix and when the sampled validators fail.
ProblemInstance make_least_squares(const Matrix& A, const Vector& b, std::size_t N, std::uint64_t seed);

/// Q = sum_n w_n Q with random positive weights, h = box indicator.
ProblemInstance make_box_constrained_quadratic(const Matrix& Q, const Vector& q, const Vector& lo, const Vector& hi,
                                               std::size_t N, std::uint64_t seed);

/// Least-squares components with h = lambda |x|_1. The minimizer found by the
/// inner solver is treated as the unique solution.
ProblemInstance make_lasso(const Matrix& A, const Vector& b, double lambda, std::size_t N, std::uint64_t seed);

struct RandomLeastSquaresOptions {
  Index d = 20;
  Index m = 40;
  /// Rank of A; rank < d gives a problem that is not strongly convex.
  Index rank = 10;
  std::size_t N = 4;
  std::uint64_t seed = 0;
};

/// A = G1 G2 / sqrt(rank) with Gaussian G1 (m x rank), G2 (rank x d); Gaussian b.
ProblemInstance random_least_squares(const RandomLeastSquaresOptions& options);

/// Gaussian A (m x d), b; lambda-weighted l1.
ProblemInstance random_lasso(Index d, Index m, double lambda, std::size_t N, std::uint64_t seed);

/// Q = G^T G / m with Gaussian G (m x d), Gaussian q, box [lo, hi]^d.
ProblemInstance random_box_quadratic(Index d, Index m, double lo, double hi, std::size_t N, std::uint64_t seed);

/// Standard normal starting point of length d.
Vector random_point(Index d, std::uint64_t seed);

/// A unit direction v in the null space of a least-squares instance, so that
/// Phi(x + t v) = Phi(x) for every t. Throws CapabilityError when X is a point.
Vector null_direction(const ProblemInstance& problem);

}  // namespace piag
