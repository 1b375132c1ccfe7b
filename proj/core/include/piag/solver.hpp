#pragma once

// Proximal incremental aggregated gradient iteration
//
//   g_k     = sum_n grad f_n(x_{k - tau_k^n})
//   x_{k+1} = prox_{alpha h}(x_k - alpha g_k)
//
// and forward-backward splitting as its zero-delay reduction.
//
// Two engines produce g_k. Cache mode stores one gradient per component,
// re-evaluates the schedule's refresh set at x_k each iteration and re-sums
// the cache in index order. History mode keeps the last tau + 1 iterates and
// evaluates every component at its delayed iterate; it is the literal
// definition and serves as the reference.

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "piag/delays.hpp"
#include "piag/model.hpp"
#include "piag/trace.hpp"

namespace piag {

enum class SolverMode { cache, history };

std::string_view to_string(SolverMode mode);
std::optional<SolverMode> parse_solver_mode(std::string_view name);

class SolverState {
 public:
  /// Iteration 0 at x0. In cache mode every gradient is evaluated at x0.
  static SolverState start(const ProblemInstance& problem, Vector x0, SolverMode mode, std::size_t tau);

  std::size_t iteration() const { return k_; }
  const Vector& iterate() const { return history_.back(); }
  SolverMode mode() const { return mode_; }
  std::size_t tau() const { return tau_; }

  /// Most recent iterates, oldest first; min(k, tau) + 1 entries.
  const std::deque<Vector>& history() const { return history_; }

  /// Cache mode only.
  const std::vector<Vector>& cached_gradients() const { return cache_; }
  const std::vector<std::size_t>& evaluation_index() const { return evaluated_at_; }
  const Vector& aggregate() const { return aggregate_; }

  /// Delays realized by the most recent step (empty at iteration 0).
  const std::vector<std::size_t>& last_delays() const { return last_delays_; }

 private:
  SolverState() = default;

  void push_iterate(Vector next);

  friend Vector aggregated_gradient(const SolverState&, const ProblemInstance&, std::span<const std::size_t>);
  friend SolverState piag_iterate(SolverState, const ProblemInstance&, const DelaySchedule&, double);
  friend SolverState piag_iterate(SolverState, const ProblemInstance&, std::span<const std::size_t>, double);
  friend SolverState fbs_iterate(SolverState, const ProblemInstance&, double);

  std::size_t k_ = 0;
  SolverMode mode_ = SolverMode::cache;
  std::size_t tau_ = 0;
  std::deque<Vector> history_;
  std::vector<Vector> cache_;
  std::vector<std::size_t> evaluated_at_;
  Vector aggregate_;
  bool cache_valid_ = true;
  std::vector<std::size_t> last_delays_;
};

/// Thrown when an iterate stops being finite. Carries the last finite state and,
/// from run(), the trace recorded so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, SolverState last_state, ConvergenceTrace partial = {});

  const SolverState& last_state() const { return *state_; }
  const ConvergenceTrace& partial_trace() const { return *trace_; }

 private:
  std::shared_ptr<const SolverState> state_;
  std::shared_ptr<const ConvergenceTrace> trace_;
};

/// sum_n grad f_n(x_{k - delays[n]}) in ascending component order (history mode).
/// Throws ScheduleViolation when a delay reaches past the stored history.
Vector aggregated_gradient(const SolverState& state, const ProblemInstance& problem,
                           std::span<const std::size_t> delays);

/// One step driven by a schedule: delays_at(k) in history mode,
/// refresh_set_at(k) in cache mode.
SolverState piag_iterate(SolverState state, const ProblemInstance& problem, const DelaySchedule& schedule,
                         double alpha);

/// One history-mode step with explicit delays.
SolverState piag_iterate(SolverState state, const ProblemInstance& problem, std::span<const std::size_t> delays,
                         double alpha);

/// One forward-backward step on the full gradient. Independent of the
/// aggregation machinery; in cache mode it invalidates the cache so the next
/// piag_iterate refreshes every component.
SolverState fbs_iterate(SolverState state, const ProblemInstance& problem, double alpha);

struct StoppingRule {
  std::size_t max_iterations = 1000;
  /// Stop once Psi(x_k) <= tolerance (needs ground truth).
  std::optional<double> psi_tolerance;
};

struct RunOptions {
  SolverMode mode = SolverMode::cache;
  bool record_iterates = false;
  /// descent-inequality residuals at x_k and at P(x_k) (the latter needs ground truth).
  bool lemma2_diagnostics = true;
};

/// Runs from x0 and records one row per iterate, x_0 included.
ConvergenceTrace run(const ProblemInstance& problem, const DelaySchedule& schedule, double alpha, const Vector& x0,
                     const StoppingRule& stop, const RunOptions& options = {});

}  // namespace piag
