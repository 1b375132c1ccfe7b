#pragma once

// Executable form of the linear-convergence analysis under quadratic growth:
// the step-size bound, the contraction factor a = 1/(1 + alpha beta), the
// Lyapunov function Psi(x) = Phi(x) - Phi* + d^2(x, X) / (2 alpha), the
// recurrence certificate behind V_k <= a^k V_0, and checks of those bounds
// against recorded traces.

#include <cstddef>
#include <optional>
#include <span>

#include "piag/model.hpp"
#include "piag/trace.hpp"

namespace piag {

/// Relative slack on every theoretical "<=" comparison; ties pass.
inline constexpr double kAdmissibilitySlack = 1e-12;
/// Multiplicative slack on geometric envelopes.
inline constexpr double kEnvelopeSlack = 1e-8;

/// ((1 + (beta / L) / (tau + 1))^(1 / (tau + 1)) - 1) / beta.
///
/// Evaluated as expm1(log1p(.) / (tau + 1)) / beta so that the result keeps
/// full relative precision when beta / L is small.
double max_step_size(double beta, double L, std::size_t tau);

/// a = 1 - alpha beta / (1 + alpha beta) = 1 / (1 + alpha beta).
double convergence_rate(double alpha, double beta);

/// Geometric factor a in (0, 1] stored with log(a) and 1 - a so that a^k and
/// 1 - a^k stay accurate for a close to 1 and for large k.
class ContractionRate {
 public:
  /// a = 1 / (1 + alpha beta).
  static ContractionRate from_step(double alpha, double beta);
  static ContractionRate from_value(double a);

  double value() const { return value_; }
  double complement() const { return complement_; }
  double log_value() const { return log_value_; }
  double log_power(std::size_t k) const { return static_cast<double>(k) * log_value_; }
  double power(std::size_t k) const;

 private:
  ContractionRate(double value, double complement, double log_value)
      : value_(value), complement_(complement), log_value_(log_value) {}

  double value_;
  double complement_;
  double log_value_;
};

/// 1 - 1 / ((tau + 1)(tau + 2) eta); eta >= 1.
double rate_result4(double eta, std::size_t tau);

/// 1 - 1 / (49 eta (tau + 1)), the earlier strongly convex rate.
double prior_rate(double eta, std::size_t tau);

struct RateComparison {
  double ours = 0.0;
  double prior = 0.0;
  bool ours_not_worse = false;  // ours <= prior (smaller factor contracts faster)
};

/// Both rates for tau in [0, 47]; throws OutOfRange beyond.
RateComparison rate_comparison_tau47(double eta, std::size_t tau);

struct TheoreticalBounds {
  double alpha_max = 0.0;
  double alpha = 0.0;
  double rate_a = 0.0;
  double rate_result4 = 0.0;
  double eta = 0.0;
};

/// Bounds for (beta, L, tau). alpha defaults to alpha_max. Throws
/// ParameterError when beta > L (eta < 1), and when the two algebraic forms of
/// rate_a disagree beyond 1e-14.
TheoreticalBounds theoretical_bounds(double beta, double L, std::size_t tau,
                                     std::optional<double> alpha = std::nullopt);

/// The three terms of the simplified-rate chain at alpha = alpha_max:
///   exact        = (1 + 1/(eta (tau+1)))^(-1/(tau+1))   (= a at alpha_max)
///   intermediate = (1 - 1/(eta (tau+2)))^(1/(tau+1))
///   bernoulli    = 1 - 1/(eta (tau+2)(tau+1))
struct Result4Chain {
  double exact = 0.0;
  double intermediate = 0.0;
  double bernoulli = 0.0;

  bool holds(double relative_slack = kAdmissibilitySlack) const;
};

Result4Chain result4_chain(double eta, std::size_t tau);

/// Psi(x) = Phi(x) - Phi* + d^2(x, X) / (2 alpha). Needs ground truth.
double lyapunov(const ProblemInstance& problem, double alpha, const Vector& x);

/// Delta_k = (L (tau + 1) / 2) * sum_{j = k - tau}^{k} |x_{j+1} - x_j|^2, with
/// j < 0 terms zero. Needs trace rows up to k with their step recorded.
double delta_k(const ConvergenceTrace& trace, std::size_t k, double L, std::size_t tau);

/// RHS - LHS of the one-step descent inequality
///   Phi(x_{k+1}) <= Phi(x) + |x - x_k|^2/(2a) - |x - x_{k+1}|^2/(2a)
///                   - |x_{k+1} - x_k|^2/(2a) + Delta_k
/// at x = probe. Phi differences use the optimality gap when ground truth is
/// available.
double lemma2_residual(const ProblemInstance& problem, const Vector& x_k, const Vector& x_next, const Vector& probe,
                       double alpha, double delta);

/// Same, reading x_k and x_{k+1} from a trace recorded with iterates.
double lemma2_residual(const ProblemInstance& problem, const ConvergenceTrace& trace, std::size_t k,
                       const Vector& probe, double alpha);

struct Lemma1Verdict {
  bool recurrence_holds = true;
  bool admissible = false;
  bool conclusion_holds = true;
  std::optional<std::size_t> first_recurrence_violation;
  std::optional<std::size_t> first_conclusion_violation;
};

/// Checks V_{k+1} <= a V_k - b w_k + c sum_{j=k-k0}^{k} w_j, the admissibility
/// inequality (c / (1 - a)) (1 - a^(k0+1)) / a^k0 <= b, and V_k <= a^k V_0.
/// Throws InvalidCertificate unless 0 < a < 1.
Lemma1Verdict check_lemma1(std::span<const double> V, std::span<const double> w, double a, double b, double c,
                           std::size_t k0);

/// The recurrence parameters (a, b, c, k0). Admissibility is always
/// recomputed from them.
class RateCertificate {
 public:
  static RateCertificate make(double a, double b, double c, std::size_t k0);
  /// a = 1/(1 + alpha beta), b = 1/(2 alpha), c = L (tau + 1) / 2, k0 = tau.
  static RateCertificate from_parameters(double alpha, double beta, double L, std::size_t tau);

  double a() const { return rate_.value(); }
  double b() const { return b_; }
  double c() const { return c_; }
  std::size_t k0() const { return k0_; }
  const ContractionRate& rate() const { return rate_; }

  /// (c / (1 - a)) (1 - a^(k0+1)) / a^k0.
  double admissibility_lhs() const;
  /// (b - lhs) / b; zero when tight, negative when violated.
  double relative_slack() const;
  bool admissible() const;

 private:
  RateCertificate(ContractionRate rate, double b, double c, std::size_t k0);

  ContractionRate rate_;
  double b_;
  double c_;
  std::size_t k0_;
};

/// Certificate for a problem with ground truth (beta) at step alpha.
RateCertificate certificate_for(const ProblemInstance& problem, double alpha, std::size_t tau);

enum class EnvelopeStatus { holds, violated, degenerate_start };

struct EnvelopeResult {
  EnvelopeStatus status = EnvelopeStatus::holds;
  /// max_k value_k / bound_k, with 0/0 read as 0.
  double worst_ratio = 0.0;
  std::optional<std::size_t> first_violation;

  bool holds() const { return status == EnvelopeStatus::holds; }
};

/// values[k] <= rate^k * initial_bound * (1 + kEnvelopeSlack) for every k.
/// The comparison is made on logarithms so underflowing envelopes stay
/// meaningful. initial_bound == 0 with any value above 1e-12 is reported as
/// degenerate_start.
EnvelopeResult check_envelope(std::span<const double> values, const ContractionRate& rate, double initial_bound);

/// Psi(x_k) <= a^k Psi(x_0) (1 + 1e-8) along a trace.
EnvelopeResult envelope_check(const ConvergenceTrace& trace, const ContractionRate& rate);
EnvelopeResult envelope_check(const ConvergenceTrace& trace, double a);

std::string_view to_string(EnvelopeStatus status);

}  // namespace piag
