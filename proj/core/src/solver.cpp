#include "piag/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "piag/rates.hpp"

namespace piag {

// --- trace -----------------------------------------------------------------

std::size_t TraceRow::max_delay() const {
  return delays.empty() ? 0 : *std::max_element(delays.begin(), delays.end());
}

namespace {

std::vector<double> column(const ConvergenceTrace& trace, std::optional<double> TraceRow::*field, const char* name) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& row : trace.rows) {
    if (!(row.*field)) throw CapabilityError(std::string("trace has no ") + name + " column (no ground truth)");
    out.push_back(*(row.*field));
  }
  return out;
}

void require_step(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("step size alpha must be positive and finite");
}

bool all_finite(const Vector& x) { return x.allFinite(); }

}  // namespace

std::vector<double> ConvergenceTrace::psi_column() const { return column(*this, &TraceRow::psi, "psi"); }
std::vector<double> ConvergenceTrace::phi_err_column() const { return column(*this, &TraceRow::phi_err, "phi_err"); }
std::vector<double> ConvergenceTrace::dist_sq_column() const { return column(*this, &TraceRow::dist_sq, "dist_sq"); }

// --- modes -----------------------------------------------------------------

std::string_view to_string(SolverMode mode) { return mode == SolverMode::cache ? "cache" : "history"; }

std::optional<SolverMode> parse_solver_mode(std::string_view name) {
  if (name == "cache") return SolverMode::cache;
  if (name == "history") return SolverMode::history;
  return std::nullopt;
}

// --- state -----------------------------------------------------------------

SolverState SolverState::start(const ProblemInstance& problem, Vector x0, SolverMode mode, std::size_t tau) {
  require_dimension(problem, x0, "solver start");
  if (!all_finite(x0)) throw InputError("solver start: x0 has non-finite coordinates");
  SolverState state;
  state.mode_ = mode;
  state.tau_ = tau;
  if (mode == SolverMode::cache) {
    state.cache_.reserve(problem.size());
    state.aggregate_ = Vector::Zero(problem.dimension());
    for (const auto& f : problem.components()) {
      state.cache_.push_back(f->gradient(x0));
      state.aggregate_ += state.cache_.back();
    }
    state.evaluated_at_.assign(problem.size(), 0);
  }
  state.history_.push_back(std::move(x0));
  return state;
}

void SolverState::push_iterate(Vector next) {
  history_.push_back(std::move(next));
  while (history_.size() > tau_ + 1) history_.pop_front();
  ++k_;
}

DivergenceError::DivergenceError(const std::string& what, SolverState last_state, ConvergenceTrace partial)
    : Error(what),
      state_(std::make_shared<const SolverState>(std::move(last_state))),
      trace_(std::make_shared<const ConvergenceTrace>(std::move(partial))) {}

// --- iteration -------------------------------------------------------------

Vector aggregated_gradient(const SolverState& state, const ProblemInstance& problem,
                           std::span<const std::size_t> delays) {
  if (delays.size() != problem.size())
    throw InputError("aggregated_gradient: expected " + std::to_string(problem.size()) + " delays, got " +
                     std::to_string(delays.size()));
  const auto& history = state.history_;
  Vector sum = Vector::Zero(problem.dimension());
  for (std::size_t n = 0; n < delays.size(); ++n) {
    const std::size_t delay = delays[n];
    if (delay > state.k_)
      throw ScheduleViolation("delay " + std::to_string(delay) + " of component " + std::to_string(n) +
                              " reaches before iterate 0 at k = " + std::to_string(state.k_));
    if (delay >= history.size())
      throw ScheduleViolation("delay " + std::to_string(delay) + " of component " + std::to_string(n) +
                              " exceeds the stored history of " + std::to_string(history.size()) + " iterates");
    sum += problem.component(n).gradient(history[history.size() - 1 - delay]);
  }
  return sum;
}

SolverState piag_iterate(SolverState state, const ProblemInstance& problem, std::span<const std::size_t> delays,
                         double alpha) {
  require_step(alpha);
  if (state.mode_ != SolverMode::history) throw InputError("explicit delays require a history-mode state");
  for (std::size_t delay : delays)
    if (delay > state.tau_)
      throw ScheduleViolation("delay " + std::to_string(delay) + " exceeds tau = " + std::to_string(state.tau_));
  const Vector g = aggregated_gradient(state, problem, delays);
  const Vector& x = state.iterate();
  const Vector y = x - alpha * g;
  Vector next = prox_step(problem, alpha, y);
  if (!all_finite(next))
    throw DivergenceError("iterate became non-finite at k = " + std::to_string(state.k_ + 1), std::move(state));
  state.push_iterate(std::move(next));
  state.last_delays_.assign(delays.begin(), delays.end());
  return state;
}

SolverState piag_iterate(SolverState state, const ProblemInstance& problem, const DelaySchedule& schedule,
                         double alpha) {
  require_step(alpha);
  if (schedule.components() != problem.size())
    throw InputError("schedule covers " + std::to_string(schedule.components()) + " components, problem has " +
                     std::to_string(problem.size()));
  if (schedule.tau() > state.tau_)
    throw InputError("schedule tau " + std::to_string(schedule.tau()) + " exceeds the state's delay bound " +
                     std::to_string(state.tau_));
  if (state.mode_ == SolverMode::history) {
    const auto delays = schedule.delays_at(state.k_);
    return piag_iterate(std::move(state), problem, delays, alpha);
  }

  const std::size_t k = state.k_;
  const Vector& x = state.iterate();
  for (std::size_t n = 0; n < problem.size(); ++n) {
    if (!state.cache_valid_ || schedule.refreshes(k, n)) {
      state.cache_[n] = problem.component(n).gradient(x);
      state.evaluated_at_[n] = k;
    }
  }
  state.cache_valid_ = true;

  std::vector<std::size_t> delays(problem.size());
  for (std::size_t n = 0; n < problem.size(); ++n) {
    delays[n] = k - state.evaluated_at_[n];
    if (delays[n] > state.tau_)
      throw ScheduleViolation("cached gradient of component " + std::to_string(n) + " is " +
                              std::to_string(delays[n]) + " iterations old, tau = " + std::to_string(state.tau_));
  }
  // Full re-summation in index order every iteration; no running add/subtract.
  state.aggregate_.setZero();
  for (const auto& g : state.cache_) state.aggregate_ += g;

  const Vector y = x - alpha * state.aggregate_;
  Vector next = prox_step(problem, alpha, y);
  if (!all_finite(next))
    throw DivergenceError("iterate became non-finite at k = " + std::to_string(k + 1), std::move(state));
  state.push_iterate(std::move(next));
  state.last_delays_ = std::move(delays);
  return state;
}

SolverState fbs_iterate(SolverState state, const ProblemInstance& problem, double alpha) {
  require_step(alpha);
  const Vector& x = state.iterate();
  const Vector g = full_gradient(problem, x);
  const Vector y = x - alpha * g;
  Vector next = prox_step(problem, alpha, y);
  if (!all_finite(next))
    throw DivergenceError("iterate became non-finite at k = " + std::to_string(state.k_ + 1), std::move(state));
  state.push_iterate(std::move(next));
  state.last_delays_.assign(problem.size(), 0);
  if (state.mode_ == SolverMode::cache) state.cache_valid_ = false;
  return state;
}

// --- driver ----------------------------------------------------------------

namespace {

TraceRow record_row(const ProblemInstance& problem, const Vector& x, std::size_t k, double alpha, bool keep_iterate) {
  TraceRow row;
  row.k = k;
  row.objective = objective(problem, x);
  if (problem.has_ground_truth()) {
    row.phi_err = optimality_gap(problem, x);
    row.dist_sq = distance_sq_to_solutions(problem, x);
    row.psi = *row.phi_err + *row.dist_sq / (2.0 * alpha);
  }
  if (keep_iterate) row.iterate = x;
  return row;
}

}  // namespace

ConvergenceTrace run(const ProblemInstance& problem, const DelaySchedule& schedule, double alpha, const Vector& x0,
                     const StoppingRule& stop, const RunOptions& options) {
  require_step(alpha);
  require_dimension(problem, x0, "run");
  if (stop.psi_tolerance && !problem.has_ground_truth())
    throw CapabilityError("a Psi tolerance needs ground truth");

  const bool truth = problem.has_ground_truth();
  const double L = problem.total_lipschitz();
  const std::size_t tau = schedule.tau();

  ConvergenceTrace trace;
  trace.alpha = alpha;
  trace.tau = tau;
  trace.rows.reserve(stop.max_iterations + 1);
  trace.rows.push_back(record_row(problem, x0, 0, alpha, options.record_iterates));

  SolverState state = SolverState::start(problem, x0, options.mode, tau);
  for (std::size_t k = 0; k < stop.max_iterations; ++k) {
    if (stop.psi_tolerance && *trace.rows.back().psi <= *stop.psi_tolerance) break;

    const Vector x_k = state.iterate();
    try {
      state = piag_iterate(std::move(state), problem, schedule, alpha);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.what(), e.last_state(), std::move(trace));
    }
    const Vector& x_next = state.iterate();

    TraceRow& current = trace.rows[k];
    current.delays = state.last_delays();
    current.step_norm_sq = (x_next - x_k).squaredNorm();
    if (options.lemma2_diagnostics) {
      const double delta = delta_k(trace, k, L, tau);
      current.lemma2_at_iterate = lemma2_residual(problem, x_k, x_next, x_k, alpha, delta);
      if (truth) {
        const Vector projected = project_to_solutions(problem, x_k);
        current.lemma2_at_projection = lemma2_residual(problem, x_k, x_next, projected, alpha, delta);
      }
    }
    trace.rows.push_back(record_row(problem, x_next, k + 1, alpha, options.record_iterates));
  }
  return trace;
}

}  // namespace piag
