#include "piag/delays.hpp"

#include <algorithm>

#include "piag/errors.hpp"

namespace piag {

namespace {

constexpr std::uint64_t kDelayStream = 0x64656c6179ULL;
constexpr std::uint64_t kOffsetStream = 0x6f6666736574ULL;
constexpr std::uint64_t kExtraStream = 0x6578747261ULL;

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::zero: return "zero";
    case ScheduleKind::fixed: return "fixed";
    case ScheduleKind::cyclic: return "cyclic";
    case ScheduleKind::uniform_random: return "uniform-random";
    case ScheduleKind::adversarial_max: return "adversarial-max";
  }
  return "unknown";
}

std::optional<ScheduleKind> parse_schedule_kind(std::string_view name) {
  for (auto kind : {ScheduleKind::zero, ScheduleKind::fixed, ScheduleKind::cyclic, ScheduleKind::uniform_random,
                    ScheduleKind::adversarial_max})
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DelaySchedule::DelaySchedule(ScheduleKind kind, std::size_t tau, std::size_t components, std::uint64_t seed)
    : kind_(kind), tau_(kind == ScheduleKind::zero ? 0 : tau), components_(components), seed_(seed) {
  if (components_ == 0) throw InputError("delay schedule needs at least one component");
}

std::uint64_t DelaySchedule::draw(std::uint64_t stream, std::uint64_t a, std::uint64_t b) const {
  return splitmix64(splitmix64(splitmix64(seed_ ^ stream) ^ a) ^ b);
}

std::size_t DelaySchedule::cyclic_batch() const { return (components_ + tau_) / (tau_ + 1); }

bool DelaySchedule::refreshes(std::size_t k, std::size_t n) const {
  if (k == 0) return true;
  switch (kind_) {
    case ScheduleKind::zero:
      return true;
    case ScheduleKind::fixed:
      return k % (n % (tau_ + 1) + 1) == 0;
    case ScheduleKind::cyclic: {
      // Iteration k refreshes indices k*c, ..., k*c + c - 1 (mod N).
      const std::size_t c = cyclic_batch();
      if (c >= components_) return true;
      const std::size_t start = (k % components_) * (c % components_) % components_;
      return (n + components_ - start) % components_ < c;
    }
    case ScheduleKind::uniform_random: {
      // One refresh at a random offset inside every epoch of length
      // E = floor((tau + 2) / 2), so consecutive refreshes are at most
      // 2E - 1 <= tau + 1 iterations apart; plus independent extra refreshes
      // with probability 1 / (tau + 1).
      const std::size_t epoch_length = (tau_ + 2) / 2;
      const std::size_t epoch = (k - 1) / epoch_length;
      const std::size_t offset = (k - 1) % epoch_length;
      if (draw(kOffsetStream, epoch, n) % epoch_length == offset) return true;
      return draw(kExtraStream, k, n) % (tau_ + 1) == 0;
    }
    case ScheduleKind::adversarial_max:
      return k % (tau_ + 1) == 0;
  }
  return true;
}

std::vector<std::size_t> DelaySchedule::refresh_set_at(std::size_t k) const {
  std::vector<std::size_t> out;
  out.reserve(components_);
  for (std::size_t n = 0; n < components_; ++n)
    if (refreshes(k, n)) out.push_back(n);
  return out;
}

std::vector<std::size_t> DelaySchedule::delays_at(std::size_t k) const {
  const std::size_t cap = std::min(tau_, k);
  std::vector<std::size_t> out(components_, 0);
  switch (kind_) {
    case ScheduleKind::zero:
      break;
    case ScheduleKind::fixed:
      for (std::size_t n = 0; n < components_; ++n) out[n] = std::min(n % (tau_ + 1), k);
      break;
    case ScheduleKind::cyclic:
      // Age of each component under the round-robin refresh pattern.
      for (std::size_t n = 0; n < components_; ++n) {
        std::size_t age = 0;
        while (!refreshes(k - age, n)) ++age;
        out[n] = age;
      }
      break;
    case ScheduleKind::uniform_random:
      for (std::size_t n = 0; n < components_; ++n) out[n] = draw(kDelayStream, k, n) % (cap + 1);
      break;
    case ScheduleKind::adversarial_max:
      std::fill(out.begin(), out.end(), cap);
      break;
  }
  return out;
}

}  // namespace piag
