#include <benchmark/benchmark.h>

#include "piag/problems.hpp"
#include "piag/rates.hpp"
#include "piag/solver.hpp"

namespace {

piag::ProblemInstance instance(benchmark::State& state) {
  piag::RandomLeastSquaresOptions o;
  o.d = state.range(0);
  o.m = 2 * o.d;
  o.rank = o.d / 2;
  o.N = static_cast<std::size_t>(state.range(1));
  o.seed = 7;
  return piag::random_least_squares(o);
}

void iterate(benchmark::State& state, piag::SolverMode mode) {
  const auto problem = instance(state);
  const std::size_t tau = 8;
  const piag::DelaySchedule schedule(piag::ScheduleKind::cyclic, tau, problem.size(), 1);
  const double alpha = piag::max_step_size(problem.require_ground_truth().qg_constant, problem.total_lipschitz(), tau);
  auto solver = piag::SolverState::start(problem, piag::random_point(problem.dimension(), 1), mode, tau);
  for (auto _ : state) {
    solver = piag::piag_iterate(std::move(solver), problem, schedule, alpha);
    benchmark::DoNotOptimize(solver.iterate().data());
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_CacheIteration(benchmark::State& state) { iterate(state, piag::SolverMode::cache); }
void BM_HistoryIteration(benchmark::State& state) { iterate(state, piag::SolverMode::history); }

void BM_TracedRun(benchmark::State& state) {
  const auto problem = instance(state);
  const piag::DelaySchedule schedule(piag::ScheduleKind::uniform_random, 5, problem.size(), 3);
  const double alpha = piag::max_step_size(problem.require_ground_truth().qg_constant, problem.total_lipschitz(), 5);
  piag::StoppingRule stop;
  stop.max_iterations = 200;
  const piag::Vector x0 = piag::random_point(problem.dimension(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(piag::run(problem, schedule, alpha, x0, stop).rows.size());
}

}  // namespace

BENCHMARK(BM_CacheIteration)->Args({50, 4})->Args({50, 32})->Args({200, 4})->Args({200, 32});
BENCHMARK(BM_HistoryIteration)->Args({50, 4})->Args({50, 32})->Args({200, 4})->Args({200, 32});
BENCHMARK(BM_TracedRun)->Args({50, 8})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
