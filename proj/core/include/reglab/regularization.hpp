#pragma once

#include <functional>
#include <string>

#include "reglab/evolution.hpp"
#include "reglab/spectral.hpp"

namespace reglab {

// Smoothness assumption u(t) in D(h_t(A)) with ||h_t(A) u(t)|| <= rho_t.
// h_t must be positive, monotonically increasing and unbounded; the general
// family is spot-checked on a geometric ladder.
class SourceCondition {
 public:
  enum class Family { power, exponential, general };

  static SourceCondition power(double exponent, double rho);        // h_t = lambda^p
  static SourceCondition exponential(double gamma, double rho);     // h_t = e^{gamma (tau-t) lambda}
  static SourceCondition general(std::string name, std::function<double(double)> h, double rho);

  Family family() const { return family_; }
  double rho() const { return rho_; }
  double gamma() const;     // exponential family only
  double exponent() const;  // power family only
  const std::string& name() const { return name_; }

  double h(double lambda, double t, double tau) const;
  double log_h(double lambda, double t, double tau) const;
  ScalarSymbol symbol(double t, double tau) const;

  // Verifies positivity, monotone growth and an eventually-increasing trend
  // on a geometric lambda ladder. Throws std::invalid_argument on failure.
  void spot_check(double t, double tau) const;

 private:
  SourceCondition() = default;

  Family family_ = Family::power;
  double exponent_ = 0.0;
  double gamma_ = 0.0;
  double rho_ = 0.0;
  std::function<double(double)> h_;
  std::string name_;
};

// Which regularization is in play and its parameter: the truncation level
// (same units as the eigenvalues) or the Lavrentiev shift.
struct RegChoice {
  enum class Method { truncation, lavrentiev };
  Method method = Method::truncation;
  double parameter = 0.0;
};

// Truncated spectral reconstruction: keeps e^{(tau-t) lambda_n} psi_n(t) for
// lambda_n <= beta (ties included) and zeroes the rest. Throws
// ParameterOverflow when e^{(tau-t) beta} is itself unrepresentable.
SpectralVector truncated_solution(const FinalValueProblem& problem, double t, double beta);

// Lavrentiev reconstruction: psi_n(t) / (e^{-(tau-t) lambda_n} + alpha).
SpectralVector lavrentiev_solution(const FinalValueProblem& problem, double t, double alpha);

// Noise amplification ceiling e^{(tau-t) beta} * delta.
double stability_bound(double beta, double t, double tau, double delta);

// Conservative truncation error bound rho_t / h_t(beta).
double truncation_error_bound(const SourceCondition& sc, double beta, double t, double tau);

// Sharp tail mass sqrt(sum over lambda_n > beta of
// h_t(lambda_n)^2 e^{2(tau-t) lambda_n} psi_n(t)^2). Non-increasing in beta,
// bounded by the source-condition norm, zero once beta clears the spectrum.
double tail_rho(const FinalValueProblem& problem, double t, double beta,
                const SourceCondition& sc);

// truncation_error_bound + stability_bound.
double total_bound(const SourceCondition& sc, double beta, double t, double tau, double delta);

// Solves h_t(beta) e^{(tau-t) beta} = rho_t / delta by doubling bracket plus
// bisection (relative tolerance 1e-12 on the product). Throws NoBracket when
// rho_t / delta does not exceed the product's value at 0.
double choose_beta_general(const SourceCondition& sc, double t, double tau, double delta);

// Closed form log(1/delta) / ((gamma+1)(tau-t)) for the exponential family.
double choose_beta_exponential(double gamma, double t, double tau, double delta);

// beta = p log(1/delta) / (tau-t) for p in (0,1). With this beta the
// propagated-noise factor satisfies e^{(tau-t) beta} delta = delta^{1-p}.
double choose_beta_power_of_delta(double p, double t, double tau, double delta);

// Balancing shift alpha = (delta/rho_t)^{1/(gamma+1)} with gamma clamped to 1
// (the method saturates there); the resulting bound scales as
// delta^{gamma/(gamma+1)}.
double choose_alpha_lavrentiev(double gamma, double rho_t, double delta);

// The truncation level with the same noise amplification as the Lavrentiev
// shift alpha: beta = log(1/alpha) / (tau-t), for alpha in (0,1).
double beta_alpha_correspondence(double alpha, double t, double tau);

// ||h_t(A) u_t||; certifies rho_t for manufactured problems. Throws
// DomainViolation when u_t fails the source condition at working precision.
double source_condition_norm(const SpectralVector& u_t, const EigenSystem& es,
                             const SourceCondition& sc, double t, double tau);

// rho_t alpha^{min(gamma,1)} + delta/alpha: the Lavrentiev analogue of
// total_bound under the exponential-family source condition.
double lavrentiev_total_bound(const SourceCondition& sc, double alpha, double delta);

}  // namespace reglab
