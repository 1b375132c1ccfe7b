#include "piag/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace piag {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ParameterError(std::string(name) + " must be positive and finite");
}

}  // namespace

double max_step_size(double beta, double L, std::size_t tau) {
  require_positive(beta, "beta");
  require_positive(L, "L");
  const double periods = static_cast<double>(tau) + 1.0;
  return std::expm1(std::log1p(beta / (L * periods)) / periods) / beta;
}

double convergence_rate(double alpha, double beta) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  const double ab = alpha * beta;
  return 1.0 - ab / (1.0 + ab);
}

ContractionRate ContractionRate::from_step(double alpha, double beta) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  const double ab = alpha * beta;
  return ContractionRate(1.0 / (1.0 + ab), ab / (1.0 + ab), -std::log1p(ab));
}

ContractionRate ContractionRate::from_value(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw ParameterError("contraction factor must lie in (0, 1]");
  return ContractionRate(a, 1.0 - a, std::log(a));
}

double ContractionRate::power(std::size_t k) const { return std::exp(log_power(k)); }

double rate_result4(double eta, std::size_t tau) {
  if (!(eta >= 1.0) || !std::isfinite(eta)) throw ParameterError("condition number eta must be >= 1");
  const double t = static_cast<double>(tau);
  return 1.0 - 1.0 / ((t + 1.0) * (t + 2.0) * eta);
}

double prior_rate(double eta, std::size_t tau) {
  if (!(eta >= 1.0) || !std::isfinite(eta)) throw ParameterError("condition number eta must be >= 1");
  return 1.0 - 1.0 / (49.0 * eta * (static_cast<double>(tau) + 1.0));
}

RateComparison rate_comparison_tau47(double eta, std::size_t tau) {
  if (tau > 47) throw OutOfRange("rate comparison applies to tau <= 47 only (got " + std::to_string(tau) + ")");
  RateComparison out;
  out.ours = rate_result4(eta, tau);
  out.prior = prior_rate(eta, tau);
  out.ours_not_worse = out.ours <= out.prior + kAdmissibilitySlack * std::abs(out.prior);
  return out;
}

TheoreticalBounds theoretical_bounds(double beta, double L, std::size_t tau, std::optional<double> alpha) {
  require_positive(beta, "beta");
  require_positive(L, "L");
  TheoreticalBounds out;
  out.eta = L / beta;
  if (out.eta < 1.0) throw ParameterError("beta exceeds L: condition number eta = L / beta is below 1");
  out.alpha_max = max_step_size(beta, L, tau);
  out.alpha = alpha.value_or(out.alpha_max);
  out.rate_a = convergence_rate(out.alpha, beta);
  const double reciprocal_form = 1.0 / (1.0 + out.alpha * beta);
  if (std::abs(out.rate_a - reciprocal_form) > 1e-14)
    throw ParameterError("rate forms 1 - ab/(1+ab) and 1/(1+ab) disagree beyond 1e-14");
  out.rate_result4 = rate_result4(out.eta, tau);
  return out;
}

bool Result4Chain::holds(double relative_slack) const {
  return exact <= intermediate * (1.0 + relative_slack) && intermediate <= bernoulli * (1.0 + relative_slack);
}

Result4Chain result4_chain(double eta, std::size_t tau) {
  if (!(eta >= 1.0) || !std::isfinite(eta)) throw ParameterError("condition number eta must be >= 1");
  const double t = static_cast<double>(tau);
  Result4Chain out;
  out.exact = std::exp(-std::log1p(1.0 / (eta * (t + 1.0))) / (t + 1.0));
  out.intermediate = std::exp(std::log1p(-1.0 / (eta * (t + 2.0))) / (t + 1.0));
  out.bernoulli = 1.0 - 1.0 / (eta * (t + 2.0) * (t + 1.0));
  return out;
}

double lyapunov(const ProblemInstance& problem, double alpha, const Vector& x) {
  require_positive(alpha, "alpha");
  return optimality_gap(problem, x) + distance_sq_to_solutions(problem, x) / (2.0 * alpha);
}

double delta_k(const ConvergenceTrace& trace, std::size_t k, double L, std::size_t tau) {
  if (k >= trace.size() || !trace.rows[k].step_norm_sq)
    throw InputError("delta_k: iteration " + std::to_string(k) + " has no recorded step");
  double sum = 0.0;
  const std::size_t first = k >= tau ? k - tau : 0;
  for (std::size_t j = first; j <= k; ++j) sum += *trace.rows[j].step_norm_sq;
  return 0.5 * L * (static_cast<double>(tau) + 1.0) * sum;
}

double lemma2_residual(const ProblemInstance& problem, const Vector& x_k, const Vector& x_next, const Vector& probe,
                       double alpha, double delta) {
  require_positive(alpha, "alpha");
  const bool exact = problem.has_ground_truth();
  const double phi_probe = exact ? optimality_gap(problem, probe) : objective(problem, probe);
  if (phi_probe == kInfinity) return kInfinity;
  const double phi_next = exact ? optimality_gap(problem, x_next) : objective(problem, x_next);
  const double inv = 1.0 / (2.0 * alpha);
  const double rhs_extra = inv * ((probe - x_k).squaredNorm() - (probe - x_next).squaredNorm() -
                                  (x_next - x_k).squaredNorm()) +
                           delta;
  return (phi_probe - phi_next) + rhs_extra;
}

double lemma2_residual(const ProblemInstance& problem, const ConvergenceTrace& trace, std::size_t k,
                       const Vector& probe, double alpha) {
  if (k + 1 >= trace.size()) throw InputError("lemma2_residual: iteration k + 1 is outside the trace");
  const auto& current = trace.rows[k].iterate;
  const auto& next = trace.rows[k + 1].iterate;
  if (!current || !next) throw CapabilityError("lemma2_residual: trace was recorded without iterates");
  const double delta = delta_k(trace, k, problem.total_lipschitz(), trace.tau);
  return lemma2_residual(problem, *current, *next, probe, alpha, delta);
}

Lemma1Verdict check_lemma1(std::span<const double> V, std::span<const double> w, double a, double b, double c,
                           std::size_t k0) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidCertificate("recurrence certificate needs 0 < a < 1");
  if (V.size() != w.size()) throw InputError("check_lemma1: V and w must have equal length");
  Lemma1Verdict verdict;
  verdict.admissible = RateCertificate::make(a, b, c, k0).admissible();
  if (V.empty()) return verdict;

  const auto rate = ContractionRate::from_value(a);
  // Rounding slack carried forward through the recurrence:
  // drift_{k+1} = a drift_k + 1e-12 * |terms of step k|.
  double drift = 0.0;
  for (std::size_t k = 0; k < V.size(); ++k) {
    const double bound = rate.power(k) * V[0];
    if (!(V[k] <= bound * (1.0 + kAdmissibilitySlack) + drift) && !verdict.first_conclusion_violation) {
      verdict.conclusion_holds = false;
      verdict.first_conclusion_violation = k;
    }
    if (k + 1 == V.size()) break;

    double window = 0.0;
    for (std::size_t j = (k >= k0 ? k - k0 : 0); j <= k; ++j) window += w[j];

    const double rhs = a * V[k] - b * w[k] + c * window;
    const double scale = a * V[k] + b * w[k] + c * window;
    if (!(V[k + 1] <= rhs + kAdmissibilitySlack * scale) && !verdict.first_recurrence_violation) {
      verdict.recurrence_holds = false;
      verdict.first_recurrence_violation = k;
    }
    drift = a * drift + kAdmissibilitySlack * scale;
  }
  return verdict;
}

RateCertificate::RateCertificate(ContractionRate rate, double b, double c, std::size_t k0)
    : rate_(rate), b_(b), c_(c), k0_(k0) {}

RateCertificate RateCertificate::make(double a, double b, double c, std::size_t k0) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidCertificate("rate certificate needs 0 < a < 1");
  if (!(b >= 0.0) || !(c >= 0.0)) throw InvalidCertificate("rate certificate needs b, c >= 0");
  return RateCertificate(ContractionRate::from_value(a), b, c, k0);
}

RateCertificate RateCertificate::from_parameters(double alpha, double beta, double L, std::size_t tau) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  if (!(L >= 0.0)) throw ParameterError("L must be nonnegative");
  return RateCertificate(ContractionRate::from_step(alpha, beta), 1.0 / (2.0 * alpha),
                         0.5 * L * (static_cast<double>(tau) + 1.0), tau);
}

double RateCertificate::admissibility_lhs() const {
  if (c_ == 0.0) return 0.0;
  const double k0 = static_cast<double>(k0_);
  const double one_minus_power = -std::expm1((k0 + 1.0) * rate_.log_value());
  return c_ / rate_.complement() * one_minus_power * std::exp(-k0 * rate_.log_value());
}

double RateCertificate::relative_slack() const {
  const double lhs = admissibility_lhs();
  if (b_ == 0.0) return lhs == 0.0 ? 0.0 : -kInfinity;
  return (b_ - lhs) / b_;
}

bool RateCertificate::admissible() const { return admissibility_lhs() <= b_ * (1.0 + kAdmissibilitySlack); }

RateCertificate certificate_for(const ProblemInstance& problem, double alpha, std::size_t tau) {
  const GroundTruth& truth = problem.require_ground_truth();
  return RateCertificate::from_parameters(alpha, truth.qg_constant, problem.total_lipschitz(), tau);
}

EnvelopeResult check_envelope(std::span<const double> values, const ContractionRate& rate, double initial_bound) {
  EnvelopeResult out;
  if (!(initial_bound >= 0.0)) throw ParameterError("envelope initial bound must be nonnegative");
  if (initial_bound == 0.0) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!(values[k] <= 1e-12)) {
        out.status = EnvelopeStatus::degenerate_start;
        out.first_violation = k;
        out.worst_ratio = kInfinity;
        return out;
      }
    }
    return out;
  }
  const double log_initial = std::log(initial_bound);
  const double log_slack = std::log1p(kEnvelopeSlack);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    double log_ratio;
    if (std::isnan(v)) {
      log_ratio = kInfinity;
    } else if (v <= 0.0) {
      continue;
    } else {
      log_ratio = std::log(v) - log_initial - rate.log_power(k);
    }
    out.worst_ratio = std::max(out.worst_ratio, std::exp(log_ratio));
    if (log_ratio > log_slack && !out.first_violation) {
      out.status = EnvelopeStatus::violated;
      out.first_violation = k;
    }
  }
  return out;
}

EnvelopeResult envelope_check(const ConvergenceTrace& trace, const ContractionRate& rate) {
  const auto psi = trace.psi_column();
  if (psi.empty()) return {};
  return check_envelope(psi, rate, psi.front());
}

EnvelopeResult envelope_check(const ConvergenceTrace& trace, double a) {
  return envelope_check(trace, ContractionRate::from_value(a));
}

std::string_view to_string(EnvelopeStatus status) {
  switch (status) {
    case EnvelopeStatus::holds: return "holds";
    case EnvelopeStatus::violated: return "violated";
    case EnvelopeStatus::degenerate_start: return "degenerate-start";
  }
  return "unknown";
}

}  // namespace piag
