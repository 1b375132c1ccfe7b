#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "piag/problems.hpp"
#include "piag/rates.hpp"
#include "piag/solver.hpp"

using namespace piag;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

/// f(x) = 0.5 q (x - s)^2 in one dimension.
ComponentPtr parabola(double q = 1.0, double s = 0.0) {
  return std::make_shared<QuadraticComponent>(Matrix::Constant(1, 1, q), Vector::Constant(1, -q * s));
}

ProblemInstance unit_parabola(RegularizerPtr h = std::make_shared<ZeroRegularizer>()) {
  return ProblemInstance({parabola()}, std::move(h));
}

/// Random PSD quadratic components plus l1, no ground truth.
ProblemInstance quadratic_l1(std::uint64_t seed, Index d, std::size_t N) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<ComponentPtr> components;
  for (std::size_t n = 0; n < N; ++n) {
    Matrix G(d, d);
    Vector q(d);
    for (Index i = 0; i < d; ++i) {
      q[i] = normal(rng);
      for (Index j = 0; j < d; ++j) G(i, j) = normal(rng);
    }
    Matrix Q = G.transpose() * G / static_cast<double>(d);
    Q = 0.5 * (Q + Q.transpose()).eval();
    components.push_back(std::make_shared<QuadraticComponent>(Q, q));
  }
  return ProblemInstance(std::move(components), std::make_shared<L1Regularizer>(0.3));
}

ProblemInstance rank_deficient(std::uint64_t seed) {
  RandomLeastSquaresOptions options;
  options.d = 20;
  options.m = 30;
  options.rank = 8;
  options.N = 6;
  options.seed = seed;
  return random_least_squares(options);
}

}  // namespace

TEST_CASE("aggregated gradient with zero delays is the full gradient") {
  const auto p = rank_deficient(1);
  const Vector x0 = random_point(p.dimension(), 2);
  const auto state = SolverState::start(p, x0, SolverMode::history, 3);
  const std::vector<std::size_t> zeros(p.size(), 0);
  CHECK((aggregated_gradient(state, p, zeros) - full_gradient(p, x0)).norm() == 0.0);
}

TEST_CASE("aggregated gradient reads the delayed iterate") {
  const auto p = unit_parabola();
  auto state = SolverState::start(p, scalar(1.0), SolverMode::history, 1);
  const std::vector<std::size_t> fresh{0};
  state = piag_iterate(std::move(state), p, fresh, 0.5);
  CHECK(state.iterate()[0] == 0.5);
  const std::vector<std::size_t> stale{1};
  CHECK(aggregated_gradient(state, p, stale)[0] == 1.0);
}

TEST_CASE("aggregated gradient of opposite parabolas at 0") {
  ProblemInstance p({parabola(1.0, 1.0), parabola(1.0, -1.0)}, std::make_shared<ZeroRegularizer>());
  const auto state = SolverState::start(p, scalar(0.0), SolverMode::history, 0);
  const std::vector<std::size_t> zeros{0, 0};
  CHECK(aggregated_gradient(state, p, zeros)[0] == 0.0);
}

TEST_CASE("delays beyond the history are schedule violations") {
  const auto p = unit_parabola();
  const auto state = SolverState::start(p, scalar(1.0), SolverMode::history, 2);
  const std::vector<std::size_t> too_old{1};
  CHECK_THROWS_AS(aggregated_gradient(state, p, too_old), ScheduleViolation);
  auto s2 = SolverState::start(p, scalar(1.0), SolverMode::history, 1);
  const std::vector<std::size_t> above_tau{2};
  CHECK_THROWS_AS(piag_iterate(std::move(s2), p, above_tau, 0.1), ScheduleViolation);
}

TEST_CASE("PIAG step examples in both modes") {
  for (auto mode : {SolverMode::cache, SolverMode::history}) {
    CAPTURE(to_string(mode));
    {
      const auto p = unit_parabola();
      auto s = SolverState::start(p, scalar(1.0), mode, 0);
      s = piag_iterate(std::move(s), p, DelaySchedule::zero(1), 1.0);
      CHECK(s.iterate()[0] == 0.0);
    }
    {
      const auto p = unit_parabola();
      const DelaySchedule adversarial(ScheduleKind::adversarial_max, 1, 1);
      auto s = SolverState::start(p, scalar(1.0), mode, 1);
      s = piag_iterate(std::move(s), p, adversarial, 0.5);
      CHECK(s.iterate()[0] == 0.5);
      s = piag_iterate(std::move(s), p, adversarial, 0.5);
      CHECK(s.iterate()[0] == 0.0);
      CHECK(s.last_delays() == std::vector<std::size_t>{1});
    }
    {
      const auto p = unit_parabola(std::make_shared<BoxIndicator>(scalar(0.5), scalar(kInfinity)));
      auto s = SolverState::start(p, scalar(1.0), mode, 0);
      s = piag_iterate(std::move(s), p, DelaySchedule::zero(1), 1.0);
      CHECK(s.iterate()[0] == 0.5);
    }
  }
}

TEST_CASE("FBS step examples") {
  {
    const auto p = unit_parabola();
    auto s = SolverState::start(p, scalar(1.0), SolverMode::cache, 0);
    s = fbs_iterate(std::move(s), p, 0.1);
    CHECK(s.iterate()[0] == doctest::Approx(0.9).epsilon(1e-15));
  }
  {
    ProblemInstance p({std::make_shared<QuadraticComponent>(Matrix::Identity(2, 2), Vector::Zero(2))},
                      std::make_shared<L1Regularizer>(1.0));
    Vector x0(2);
    x0 << 2.0, 0.5;
    auto s = SolverState::start(p, x0, SolverMode::history, 0);
    s = fbs_iterate(std::move(s), p, 1.0);
    CHECK(s.iterate().norm() == 0.0);
  }
}

TEST_CASE("PIAG with the zero schedule is bitwise FBS") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = quadratic_l1(seed, 6, 4);
    const double alpha = 1.0 / p.total_lipschitz();
    auto a = SolverState::start(p, random_point(6, seed), SolverMode::cache, 0);
    auto b = SolverState::start(p, random_point(6, seed), SolverMode::history, 0);
    const auto zero = DelaySchedule::zero(p.size());
    for (int k = 0; k < 1000; ++k) {
      a = piag_iterate(std::move(a), p, zero, alpha);
      b = fbs_iterate(std::move(b), p, alpha);
      REQUIRE(a.iterate() == b.iterate());
    }
  }
}

TEST_CASE("scalar FBS agrees with an independent loop") {
  // f = 0.5 * 3 x^2 - 2 x split into two components, h = 0.4 |x|.
  ProblemInstance p({std::make_shared<QuadraticComponent>(Matrix::Constant(1, 1, 1.0), scalar(-0.5)),
                     std::make_shared<QuadraticComponent>(Matrix::Constant(1, 1, 2.0), scalar(-1.5))},
                    std::make_shared<L1Regularizer>(0.4));
  const double alpha = 0.2;
  const auto expected = oracle::fbs_scalar(3.0, -2.0, 0.4, alpha, 4.0, 60);
  auto s = SolverState::start(p, scalar(4.0), SolverMode::cache, 0);
  for (std::size_t k = 1; k < expected.size(); ++k) {
    s = fbs_iterate(std::move(s), p, alpha);
    CHECK(s.iterate()[0] == doctest::Approx(expected[k]).epsilon(1e-14));
  }
}

TEST_CASE("cache and history modes agree under the cyclic schedule") {
  const auto p = rank_deficient(4);
  const DelaySchedule cyclic(ScheduleKind::cyclic, 3, p.size());
  const double alpha = max_step_size(p.require_ground_truth().qg_constant, p.total_lipschitz(), 3);
  const Vector x0 = random_point(p.dimension(), 5);
  auto cache = SolverState::start(p, x0, SolverMode::cache, 3);
  auto history = SolverState::start(p, x0, SolverMode::history, 3);
  for (int k = 0; k < 500; ++k) {
    cache = piag_iterate(std::move(cache), p, cyclic, alpha);
    history = piag_iterate(std::move(history), p, cache.last_delays(), alpha);
    REQUIRE((cache.iterate() - history.iterate()).norm() <= 1e-12 * std::max(1.0, history.iterate().norm()));
  }
}

TEST_CASE("state invariants hold every iteration") {
  const auto p = rank_deficient(6);
  const double alpha = max_step_size(p.require_ground_truth().qg_constant, p.total_lipschitz(), 4);
  for (auto kind : {ScheduleKind::fixed, ScheduleKind::cyclic, ScheduleKind::uniform_random,
                    ScheduleKind::adversarial_max}) {
    const DelaySchedule schedule(kind, 4, p.size(), 17);
    for (auto mode : {SolverMode::cache, SolverMode::history}) {
      auto s = SolverState::start(p, random_point(p.dimension(), 8), mode, 4);
      for (std::size_t k = 0; k < 300; ++k) {
        s = piag_iterate(std::move(s), p, schedule, alpha);
        const std::size_t iter = s.iteration();
        CHECK(s.history().size() == std::min<std::size_t>(iter, 4) + 1);
        for (auto d : s.last_delays()) CHECK(d <= 4);
        if (mode == SolverMode::cache) {
          Vector sum = Vector::Zero(p.dimension());
          for (const auto& g : s.cached_gradients()) sum += g;
          CHECK((sum - s.aggregate()).norm() <= 1e-12 * std::max(1.0, sum.norm()));
          // Cached gradients are evaluated at iterations <= k - 1 and are at most tau old.
          for (auto e : s.evaluation_index()) CHECK(iter - 1 - e <= 4);
        }
      }
    }
  }
}

TEST_CASE("run with zero iterations records only x0") {
  const auto p = rank_deficient(9);
  StoppingRule stop;
  stop.max_iterations = 0;
  const auto trace = run(p, DelaySchedule::zero(p.size()), 0.01, random_point(p.dimension(), 1), stop);
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].k == 0);
  CHECK_FALSE(trace[0].step_norm_sq.has_value());
}

TEST_CASE("strongly convex 1D quadratic converges under FBS") {
  GroundTruth truth;
  truth.optimal_value = 0.0;
  truth.qg_constant = 1.0;
  truth.solutions.point = scalar(0.0);
  truth.solutions.null_basis = Matrix(1, 0);
  const auto p = unit_parabola().with_ground_truth(truth);
  StoppingRule stop;
  stop.max_iterations = 100;
  for (double alpha : {1.0, 0.5}) {
    const auto trace = run(p, DelaySchedule::zero(1), alpha, scalar(3.0), stop);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(*trace[k].psi <= *trace[k - 1].psi);
    CHECK(*trace.rows.back().psi < 1e-10);
    const auto expected = oracle::fbs_scalar(1.0, 0.0, 0.0, alpha, 3.0, 100);
    for (std::size_t k = 0; k < trace.size(); ++k) CHECK(std::sqrt(*trace[k].dist_sq) == doctest::Approx(std::abs(expected[k])));
  }
}

TEST_CASE("rank-deficient least squares stays under the envelope") {
  const auto p = rank_deficient(10);
  const double beta = p.require_ground_truth().qg_constant;
  const double alpha = max_step_size(beta, p.total_lipschitz(), 5);
  StoppingRule stop;
  stop.max_iterations = 1000;
  const auto trace =
      run(p, DelaySchedule(ScheduleKind::cyclic, 5, p.size()), alpha, random_point(p.dimension(), 3), stop);
  const auto env = envelope_check(trace, convergence_rate(alpha, beta));
  CHECK(env.holds());
  CHECK(env.worst_ratio <= 1.0 + kEnvelopeSlack);
}

TEST_CASE("trace columns are internally consistent") {
  const auto p = rank_deficient(11);
  const double alpha = max_step_size(p.require_ground_truth().qg_constant, p.total_lipschitz(), 2);
  StoppingRule stop;
  stop.max_iterations = 300;
  RunOptions options;
  options.record_iterates = true;
  const auto trace = run(p, DelaySchedule(ScheduleKind::uniform_random, 2, p.size(), 3), alpha,
                         random_point(p.dimension(), 4), stop, options);
  REQUIRE(trace.size() == 301);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& row = trace[k];
    CHECK(*row.psi == *row.phi_err + *row.dist_sq / (2.0 * alpha));
    CHECK(*row.phi_err >= -1e-9);
    if (k + 1 < trace.size()) {
      CHECK(*row.step_norm_sq == (*trace[k + 1].iterate - *row.iterate).squaredNorm());
      CHECK(*row.lemma2_at_iterate >= -1e-9);
      CHECK(*row.lemma2_at_projection >= -1e-9);
      CHECK(row.max_delay() <= 2);
    } else {
      CHECK_FALSE(row.step_norm_sq.has_value());
      CHECK(row.delays.empty());
    }
  }
}

TEST_CASE("psi tolerance stops the run early") {
  const auto p = rank_deficient(12);
  const double alpha = max_step_size(p.require_ground_truth().qg_constant, p.total_lipschitz(), 0);
  StoppingRule stop;
  stop.max_iterations = 100000;
  stop.psi_tolerance = 1e-3;
  const auto trace = run(p, DelaySchedule::zero(p.size()), alpha, random_point(p.dimension(), 1), stop);
  CHECK(*trace.rows.back().psi <= 1e-3);
  CHECK(*trace[trace.size() - 2].psi > 1e-3);
}

TEST_CASE("a psi tolerance without ground truth is rejected") {
  const auto p = quadratic_l1(1, 3, 2);
  StoppingRule stop;
  stop.psi_tolerance = 1e-3;
  CHECK_THROWS_AS(run(p, DelaySchedule::zero(2), 0.1, Vector::Zero(3), stop), CapabilityError);
}

TEST_CASE("divergence carries the partial trace and last finite state") {
  const auto p = rank_deficient(13);
  StoppingRule stop;
  stop.max_iterations = 100000;
  try {
    run(p, DelaySchedule(ScheduleKind::adversarial_max, 3, p.size()), 1e3 / p.total_lipschitz(),
        random_point(p.dimension(), 2), stop);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.partial_trace().size() >= 1);
    CHECK(e.last_state().iterate().allFinite());
    CHECK(e.partial_trace().rows.back().k == e.last_state().iteration());
  }
}

TEST_CASE("nonpositive steps are rejected") {
  const auto p = unit_parabola();
  auto s = SolverState::start(p, scalar(1.0), SolverMode::cache, 0);
  CHECK_THROWS_AS(piag_iterate(s, p, DelaySchedule::zero(1), 0.0), ParameterError);
  CHECK_THROWS_AS(fbs_iterate(s, p, -1.0), ParameterError);
}

TEST_CASE("FBS in cache mode invalidates the cache") {
  const auto p = rank_deficient(14);
  const DelaySchedule cyclic(ScheduleKind::cyclic, 3, p.size());
  const double alpha = 0.5 / p.total_lipschitz();
  auto s = SolverState::start(p, random_point(p.dimension(), 1), SolverMode::cache, 3);
  s = piag_iterate(std::move(s), p, cyclic, alpha);
  s = fbs_iterate(std::move(s), p, alpha);
  const Vector x = s.iterate();
  s = piag_iterate(std::move(s), p, cyclic, alpha);
  // Every cached gradient was refreshed at the FBS iterate.
  CHECK((s.aggregate() - full_gradient(p, x)).norm() <= 1e-12 * std::max(1.0, full_gradient(p, x).norm()));
}
