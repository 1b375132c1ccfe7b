#pragma once

// Sampled checks of the structural assumptions: convex L_n-smooth components,
// exact nonexpansive proxes, and quadratic growth of Phi around the solution set.

#include <cstdint>
#include <string>
#include <vector>

#include "piag/model.hpp"

namespace piag {

struct ValidationReport {
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
  explicit operator bool() const { return passed(); }
  void fail(std::string message) { failures.push_back(std::move(message)); }
  void merge(const ValidationReport& other);
  std::string summary() const;
};

struct SamplingOptions {
  std::size_t samples = 64;
  std::uint64_t seed = 0;
  /// Sample points are center + radius * r * u with u ~ N(0, I) and r
  /// log-uniform in [1e-3, 1]. An empty center means the origin.
  Vector center;
  double radius = 1.0;
};

/// Central-difference step (machine epsilon)^(1/3) * max(1, |x|).
double finite_difference_step(const Vector& x);

/// Lipschitz gradient, convexity, and gradient/finite-difference agreement
/// (relative tolerance 1e-5).
ValidationReport validate_component(const SmoothComponent& component, const SamplingOptions& options);

/// Prox optimality against perturbed competitors, nonexpansiveness, and that
/// prox lands in dom h.
ValidationReport validate_regularizer(const Regularizer& regularizer, Index dimension, const SamplingOptions& options);

/// Phi(P x) = Phi*, Phi(x) >= Phi*, P(P x) = P x, and
/// Phi(x) - Phi* >= (beta / 2) d^2(x, X) within relative slack qg_slack.
ValidationReport validate_ground_truth(const ProblemInstance& problem, const SamplingOptions& options,
                                       double qg_slack = 1e-9);

/// Every component, the regularizer, and (when present) the ground truth.
ValidationReport validate_problem(const ProblemInstance& problem, const SamplingOptions& component_sampling,
                                  const SamplingOptions& growth_sampling, double qg_slack = 1e-9);

}  // namespace piag
