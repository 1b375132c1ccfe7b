#include "piag/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace piag {

namespace {

class PointSampler {
 public:
  PointSampler(const SamplingOptions& options, Index dimension)
      : rng_(options.seed),
        center_(options.center.size() == 0 ? Vector::Zero(dimension) : options.center),
        radius_(options.radius) {
    if (center_.size() != dimension) throw InputError("sampling center has the wrong dimension");
  }

  Vector next() {
    Vector u(center_.size());
    for (Index i = 0; i < u.size(); ++i) u[i] = normal_(rng_);
    const double r = std::pow(10.0, -3.0 * unit_(rng_));
    return center_ + radius_ * r * u;
  }

  Vector gaussian(Index dimension) {
    Vector u(dimension);
    for (Index i = 0; i < dimension; ++i) u[i] = normal_(rng_);
    return u;
  }

  double unit() { return unit_(rng_); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  Vector center_;
  double radius_;
};

std::string describe(const char* what, std::size_t sample, double lhs, double rhs) {
  std::ostringstream out;
  out.precision(17);
  out << what << " violated at sample " << sample << ": " << lhs << " vs " << rhs;
  return out.str();
}

}  // namespace

void ValidationReport::merge(const ValidationReport& other) {
  failures.insert(failures.end(), other.failures.begin(), other.failures.end());
}

std::string ValidationReport::summary() const {
  if (passed()) return "ok";
  std::ostringstream out;
  out << failures.size() << " failure(s): " << failures.front();
  return out.str();
}

double finite_difference_step(const Vector& x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, x.norm());
}

ValidationReport validate_component(const SmoothComponent& component, const SamplingOptions& options) {
  ValidationReport report;
  const Index d = component.dimension();
  const double L = component.lipschitz();
  if (!(L >= 0.0) || !std::isfinite(L)) {
    report.fail("Lipschitz constant is not finite and nonnegative");
    return report;
  }
  PointSampler sampler(options, d);
  for (std::size_t s = 0; s < options.samples; ++s) {
    const Vector x = sampler.next();
    const Vector y = sampler.next();
    const Vector gx = component.gradient(x);
    const Vector gy = component.gradient(y);
    const double fx = component.value(x);
    const double fy = component.value(y);

    const double grad_gap = (gx - gy).norm();
    const double bound = L * (x - y).norm();
    if (grad_gap > bound * (1.0 + 1e-9) + 1e-12 * (1.0 + gx.norm() + gy.norm()))
      report.fail(describe("gradient Lipschitz bound", s, grad_gap, bound));

    const double linearization = fx + gx.dot(y - x);
    const double scale = 1.0 + std::abs(fx) + std::abs(fy) + std::abs(gx.dot(y - x));
    if (fy < linearization - 1e-10 * scale) report.fail(describe("convexity", s, fy, linearization));

    // Finite differences only on a subset of samples: d value evaluations each.
    if (s < 8) {
      const double h = finite_difference_step(x);
      Vector fd(d);
      Vector probe = x;
      for (Index i = 0; i < d; ++i) {
        probe[i] = x[i] + h;
        const double up = component.value(probe);
        probe[i] = x[i] - h;
        const double down = component.value(probe);
        probe[i] = x[i];
        fd[i] = (up - down) / (2.0 * h);
      }
      const double error = (fd - gx).lpNorm<Eigen::Infinity>();
      const double allowed = 1e-5 * std::max(1.0, gx.lpNorm<Eigen::Infinity>());
      if (error > allowed) report.fail(describe("finite-difference gradient agreement", s, error, allowed));
    }
  }
  return report;
}

ValidationReport validate_regularizer(const Regularizer& regularizer, Index dimension, const SamplingOptions& options) {
  ValidationReport report;
  PointSampler sampler(options, dimension);
  for (std::size_t s = 0; s < options.samples; ++s) {
    const double alpha = std::pow(10.0, -2.0 + 3.0 * sampler.unit());
    const Vector y1 = sampler.next();
    const Vector y2 = sampler.next();
    const Vector p1 = regularizer.prox(alpha, y1);
    const Vector p2 = regularizer.prox(alpha, y2);

    const double h1 = regularizer.value(p1);
    if (!std::isfinite(h1)) {
      report.fail(describe("prox maps into dom h", s, h1, 0.0));
      continue;
    }
    const double moved = (p1 - p2).norm();
    const double original = (y1 - y2).norm();
    if (moved > original * (1.0 + 1e-12) + 1e-14) report.fail(describe("prox nonexpansive", s, moved, original));

    const double best = h1 + (p1 - y1).squaredNorm() / (2.0 * alpha);
    for (int trial = 0; trial < 4; ++trial) {
      const double step = std::pow(10.0, -6.0 + 5.0 * sampler.unit()) * std::max(1.0, p1.norm());
      const Vector z = p1 + step * sampler.gaussian(dimension);
      const double competitor = regularizer.value(z) + (z - y1).squaredNorm() / (2.0 * alpha);
      if (competitor < best - 1e-12 * (1.0 + std::abs(best)))
        report.fail(describe("prox minimality", s, competitor, best));
    }
  }
  return report;
}

ValidationReport validate_ground_truth(const ProblemInstance& problem, const SamplingOptions& options, double qg_slack) {
  ValidationReport report;
  const GroundTruth& truth = problem.require_ground_truth();
  const double phi_star = truth.optimal_value;
  const double beta = truth.qg_constant;
  const double value_tol = 1e-9 * std::max(1.0, std::abs(phi_star));

  SamplingOptions centered = options;
  if (centered.center.size() == 0) centered.center = truth.solutions.point;
  PointSampler sampler(centered, problem.dimension());

  for (std::size_t s = 0; s < options.samples; ++s) {
    const Vector x = sampler.next();
    const Vector px = truth.solutions.project(x);
    const double phi_px = objective(problem, px);
    if (!(std::abs(phi_px - phi_star) <= value_tol)) report.fail(describe("Phi(P x) = Phi*", s, phi_px, phi_star));

    const Vector ppx = truth.solutions.project(px);
    if ((ppx - px).norm() > 1e-8 * std::max(1.0, px.norm()))
      report.fail(describe("projection idempotent", s, (ppx - px).norm(), 0.0));

    const double phi = objective(problem, x);
    if (phi < phi_star - value_tol) report.fail(describe("Phi(x) >= Phi*", s, phi, phi_star));
    if (!std::isfinite(phi)) continue;

    const double gap = optimality_gap(problem, x);
    const double direct = phi - phi_star;
    if (std::abs(gap - direct) > 1e-9 * std::max(1.0, std::abs(phi)))
      report.fail(describe("optimality gap consistent with Phi - Phi*", s, gap, direct));

    const double growth = 0.5 * beta * (x - px).squaredNorm();
    if (gap < growth * (1.0 - qg_slack) - 1e-12 * std::max(1.0, std::abs(phi)))
      report.fail(describe("quadratic growth", s, gap, growth));
  }
  return report;
}

ValidationReport validate_problem(const ProblemInstance& problem, const SamplingOptions& component_sampling,
                                  const SamplingOptions& growth_sampling, double qg_slack) {
  ValidationReport report;
  for (std::size_t n = 0; n < problem.size(); ++n) {
    SamplingOptions per_component = component_sampling;
    per_component.seed = component_sampling.seed + n;
    report.merge(validate_component(problem.component(n), per_component));
  }
  report.merge(validate_regularizer(problem.regularizer(), problem.dimension(), component_sampling));
  if (problem.has_ground_truth()) report.merge(validate_ground_truth(problem, growth_sampling, qg_slack));
  return report;
}

}  // namespace piag
