#pragma once

// Delay schedules: admissible staleness tau_k^n in {0, ..., min(tau, k)}.
//
// A schedule is read two ways. delays_at(k) gives an explicit delay vector for
// the history-mode engine; refresh_set_at(k) gives the components whose cached
// gradients are re-evaluated at iteration k in cache mode. Every refresh
// pattern revisits each component at least once in any tau + 1 consecutive
// iterations, so cache-mode staleness never exceeds tau.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace piag {

enum class ScheduleKind {
  zero,             // tau_k^n = 0: forward-backward splitting
  fixed,            // per-component constant delay n mod (tau + 1)
  cyclic,           // round-robin refresh of ceil(N / (tau + 1)) components
  uniform_random,   // seeded random delays / jittered refreshes
  adversarial_max,  // maximal admissible staleness
};

std::string_view to_string(ScheduleKind kind);
std::optional<ScheduleKind> parse_schedule_kind(std::string_view name);

/// SplitMix64 finalizer; used to derive independent streams per (seed, k, n).
std::uint64_t splitmix64(std::uint64_t state);

class DelaySchedule {
 public:
  DelaySchedule(ScheduleKind kind, std::size_t tau, std::size_t components, std::uint64_t seed = 0);

  static DelaySchedule zero(std::size_t components) { return {ScheduleKind::zero, 0, components}; }

  ScheduleKind kind() const { return kind_; }
  std::size_t tau() const { return tau_; }
  std::size_t components() const { return components_; }
  std::uint64_t seed() const { return seed_; }

  /// History-mode delays tau_k, each in {0, ..., min(tau, k)}.
  std::vector<std::size_t> delays_at(std::size_t k) const;

  /// Cache-mode refresh set at iteration k: ascending 0-based indices; all
  /// components at k = 0.
  std::vector<std::size_t> refresh_set_at(std::size_t k) const;

  bool refreshes(std::size_t k, std::size_t n) const;

 private:
  std::uint64_t draw(std::uint64_t stream, std::uint64_t a, std::uint64_t b) const;
  std::size_t cyclic_batch() const;

  ScheduleKind kind_;
  std::size_t tau_;
  std::size_t components_;
  std::uint64_t seed_;
};

}  // namespace piag
