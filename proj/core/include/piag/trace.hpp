#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "piag/model.hpp"

namespace piag {

/// One iterate x_k of a run. Fields describing the transition k -> k+1
/// (step, descent-inequality residuals, delays) are empty on the final row.
struct TraceRow {
  std::size_t k = 0;
  double objective = 0.0;
  // Present when the problem carries ground truth.
  std::optional<double> phi_err;
  std::optional<double> dist_sq;
  std::optional<double> psi;
  // |x_{k+1} - x_k|^2
  std::optional<double> step_norm_sq;
  std::optional<double> lemma2_at_iterate;
  std::optional<double> lemma2_at_projection;
  /// Realized delays tau_k used to form g_k.
  std::vector<std::size_t> delays;
  std::optional<Vector> iterate;

  std::size_t max_delay() const;
};

struct ConvergenceTrace {
  double alpha = 0.0;
  std::size_t tau = 0;
  std::vector<TraceRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  const TraceRow& operator[](std::size_t k) const { return rows[k]; }

  /// Psi column; throws CapabilityError when any row lacks it.
  std::vector<double> psi_column() const;
  std::vector<double> phi_err_column() const;
  std::vector<double> dist_sq_column() const;
};

}  // namespace piag
