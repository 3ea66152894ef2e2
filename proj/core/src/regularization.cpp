#include "reglab/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace reglab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_time_in_window(double t, double tau, const char* what) {
  if (!(t >= 0.0) || !(t < tau)) {
    std::ostringstream msg;
    msg << what << ": t must satisfy 0 <= t < tau (t=" << t << ", tau=" << tau << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

SourceCondition SourceCondition::power(double exponent, double rho) {
  if (!(exponent > 0.0)) throw std::invalid_argument("SourceCondition::power: exponent must be > 0");
  if (!(rho > 0.0)) throw std::invalid_argument("SourceCondition::power: rho must be > 0");
  SourceCondition sc;
  sc.family_ = Family::power;
  sc.exponent_ = exponent;
  sc.rho_ = rho;
  sc.name_ = "lambda^" + std::to_string(exponent);
  return sc;
}

SourceCondition SourceCondition::exponential(double gamma, double rho) {
  if (!(gamma > 0.0)) throw std::invalid_argument("SourceCondition::exponential: gamma must be > 0");
  if (!(rho > 0.0)) throw std::invalid_argument("SourceCondition::exponential: rho must be > 0");
  SourceCondition sc;
  sc.family_ = Family::exponential;
  sc.gamma_ = gamma;
  sc.rho_ = rho;
  sc.name_ = "exp(" + std::to_string(gamma) + "*(tau-t)*lambda)";
  return sc;
}

SourceCondition SourceCondition::general(std::string name, std::function<double(double)> h,
                                         double rho) {
  if (!h) throw std::invalid_argument("SourceCondition::general: missing h");
  if (!(rho > 0.0)) throw std::invalid_argument("SourceCondition::general: rho must be > 0");
  SourceCondition sc;
  sc.family_ = Family::general;
  sc.h_ = std::move(h);
  sc.rho_ = rho;
  sc.name_ = std::move(name);
  return sc;
}

double SourceCondition::gamma() const {
  if (family_ != Family::exponential)
    throw std::logic_error("SourceCondition::gamma: not an exponential-family condition");
  return gamma_;
}

double SourceCondition::exponent() const {
  if (family_ != Family::power)
    throw std::logic_error("SourceCondition::exponent: not a power-family condition");
  return exponent_;
}

double SourceCondition::h(double lambda, double t, double tau) const {
  switch (family_) {
    case Family::power:
      return std::pow(lambda, exponent_);
    case Family::exponential:
      return std::exp(gamma_ * (tau - t) * lambda);
    case Family::general:
      return h_(lambda);
  }
  return 0.0;  // unreachable
}

double SourceCondition::log_h(double lambda, double t, double tau) const {
  switch (family_) {
    case Family::power:
      return exponent_ * std::log(lambda);
    case Family::exponential:
      return gamma_ * (tau - t) * lambda;
    case Family::general:
      return std::log(std::abs(h_(lambda)));
  }
  return 0.0;  // unreachable
}

ScalarSymbol SourceCondition::symbol(double t, double tau) const {
  switch (family_) {
    case Family::power:
      return ScalarSymbol::power(exponent_);
    case Family::exponential:
      return ScalarSymbol::exponential(gamma_ * (tau - t));
    case Family::general: {
      auto h = h_;
      return ScalarSymbol::general(name_, h);
    }
  }
  return ScalarSymbol::identity();  // unreachable
}

void SourceCondition::spot_check(double t, double tau) const {
  require_time_in_window(t, tau, "SourceCondition::spot_check");
  double prev = 0.0;
  double first = 0.0;
  double lambda = 1e-2;
  for (int k = 0; k < 14; ++k, lambda *= 4.0) {
    const double v = h(lambda, t, tau);
    if (!(v > 0.0))
      throw std::invalid_argument("SourceCondition: h_t must be positive on (0, inf)");
    if (k == 0)
      first = v;
    else if (v < prev)
      throw std::invalid_argument("SourceCondition: h_t must be monotonically increasing");
    prev = v;
  }
  if (!(prev > first))
    throw std::invalid_argument("SourceCondition: h_t must grow along the lambda ladder");
}

SpectralVector truncated_solution(const FinalValueProblem& problem, double t, double beta) {
  require_time_in_window(t, problem.tau(), "truncated_solution");
  if (!(beta > 0.0)) throw std::invalid_argument("truncated_solution: beta must be > 0");
  const double rate = problem.tau() - t;
  if (rate * beta > log_overflow_threshold) {
    std::ostringstream msg;
    msg << "truncation level beta=" << beta << " implies amplification exp(" << rate * beta
        << "), beyond working precision";
    throw ParameterOverflow(msg.str());
  }
  const SpectralVector psi = accumulate_psi(problem, t);
  const auto& es = problem.eigensystem();
  std::vector<double> out(es.size(), 0.0);
  for (std::size_t n = 0; n < es.size(); ++n) {
    const double lambda = es.eigenvalue(n);
    if (lambda <= beta) out[n] = amplified_coefficient(rate, lambda, psi[n]);
  }
  return SpectralVector(std::move(out));
}

SpectralVector lavrentiev_solution(const FinalValueProblem& problem, double t, double alpha) {
  require_time_in_window(t, problem.tau(), "lavrentiev_solution");
  if (!(alpha > 0.0)) throw std::invalid_argument("lavrentiev_solution: alpha must be > 0");
  const double rate = problem.tau() - t;
  const SpectralVector psi = accumulate_psi(problem, t);
  const auto& es = problem.eigensystem();
  std::vector<double> out(es.size());
  for (std::size_t n = 0; n < es.size(); ++n)
    out[n] = psi[n] / (std::exp(-rate * es.eigenvalue(n)) + alpha);
  return SpectralVector(std::move(out));
}

double stability_bound(double beta, double t, double tau, double delta) {
  if (!(beta > 0.0)) throw std::invalid_argument("stability_bound: beta must be > 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("stability_bound: delta must be >= 0");
  if (!(t >= 0.0) || !(t <= tau))
    throw std::invalid_argument("stability_bound: t must satisfy 0 <= t <= tau");
  if (delta == 0.0) return 0.0;
  const double exponent = (tau - t) * beta;
  if (exponent > log_overflow_threshold)
    throw ParameterOverflow("stability_bound: amplification exp((tau-t)*beta) overflows");
  return std::exp(exponent) * delta;
}

double truncation_error_bound(const SourceCondition& sc, double beta, double t, double tau) {
  if (!(beta > 0.0)) throw std::invalid_argument("truncation_error_bound: beta must be > 0");
  require_time_in_window(t, tau, "truncation_error_bound");
  return std::exp(std::log(sc.rho()) - sc.log_h(beta, t, tau));
}

double tail_rho(const FinalValueProblem& problem, double t, double beta,
                const SourceCondition& sc) {
  require_time_in_window(t, problem.tau(), "tail_rho");
  if (!(beta > 0.0)) throw std::invalid_argument("tail_rho: beta must be > 0");
  const double rate = problem.tau() - t;
  const SpectralVector psi = accumulate_psi(problem, t);
  const auto& es = problem.eigensystem();

  // Accumulate sqrt(sum of exp(2 logmag_n)) with the largest term factored
  // out, so tails close to the representability edge do not overflow.
  std::vector<double> logmags;
  logmags.reserve(es.size());
  double logmax = -kInf;
  for (std::size_t n = 0; n < es.size(); ++n) {
    const double lambda = es.eigenvalue(n);
    if (!(lambda > beta) || psi[n] == 0.0) continue;
    const double logmag =
        sc.log_h(lambda, t, problem.tau()) + rate * lambda + std::log(std::abs(psi[n]));
    if (!(logmag <= log_overflow_threshold)) {
      std::ostringstream msg;
      msg << "tail_rho: mode with lambda=" << lambda
          << " fails the source condition at working precision (log-magnitude " << logmag << ")";
      throw DomainViolation(msg.str());
    }
    logmags.push_back(logmag);
    logmax = std::max(logmax, logmag);
  }
  if (logmags.empty()) return 0.0;
  double s = 0.0;
  for (double lm : logmags) {
    const double r = std::exp(lm - logmax);
    s += r * r;
  }
  return std::exp(logmax) * std::sqrt(s);
}

double total_bound(const SourceCondition& sc, double beta, double t, double tau, double delta) {
  return truncation_error_bound(sc, beta, t, tau) + stability_bound(beta, t, tau, delta);
}

double choose_beta_general(const SourceCondition& sc, double t, double tau, double delta) {
  require_time_in_window(t, tau, "choose_beta_general");
  if (!(delta > 0.0)) throw std::invalid_argument("choose_beta_general: delta must be > 0");
  sc.spot_check(t, tau);

  const double rate = tau - t;
  const auto log_xi = [&](double b) { return sc.log_h(b, t, tau) + rate * b; };
  const double target = std::log(sc.rho()) - std::log(delta);

  // xi_t(0) = h_t(0): the product at a vanishing truncation level.
  const double log_xi_zero =
      sc.family() == SourceCondition::Family::power ? -kInf : log_xi(0.0);
  if (!(log_xi_zero < target)) {
    std::ostringstream msg;
    msg << "choose_beta_general: rho/delta = " << sc.rho() / delta
        << " does not exceed xi_t(0); noise too large for a positive truncation level";
    throw NoBracket(msg.str());
  }

  // Bracket by doubling (or halving) from lambda = 1, then bisect. The
  // product is strictly increasing, so convergence is monotone.
  double lo = 0.0;
  double hi = 1.0;
  if (log_xi(1.0) < target) {
    lo = 1.0;
    hi = 2.0;
    while (log_xi(hi) < target) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NoBracket("choose_beta_general: failed to bracket");
    }
  }

  constexpr double rel_tol = 0.99e-12;  // relative on xi, i.e. absolute on log xi
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // interval shrank to one ulp
    const double v = log_xi(mid);
    if (std::abs(v - target) <= rel_tol) return mid;
    if (v < target)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

double choose_beta_exponential(double gamma, double t, double tau, double delta) {
  if (!(gamma > 0.0)) throw std::invalid_argument("choose_beta_exponential: gamma must be > 0");
  require_time_in_window(t, tau, "choose_beta_exponential");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("choose_beta_exponential: delta must be in (0, 1)");
  return -std::log(delta) / ((gamma + 1.0) * (tau - t));
}

double choose_beta_power_of_delta(double p, double t, double tau, double delta) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("choose_beta_power_of_delta: p must be in (0, 1)");
  require_time_in_window(t, tau, "choose_beta_power_of_delta");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("choose_beta_power_of_delta: delta must be in (0, 1)");
  return -p * std::log(delta) / (tau - t);
}

double choose_alpha_lavrentiev(double gamma, double rho_t, double delta) {
  if (!(gamma > 0.0)) throw std::invalid_argument("choose_alpha_lavrentiev: gamma must be > 0");
  if (!(rho_t > 0.0)) throw std::invalid_argument("choose_alpha_lavrentiev: rho_t must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("choose_alpha_lavrentiev: delta must be > 0");
  const double clamped = std::min(gamma, 1.0);  // saturation: no gain beyond gamma = 1
  return std::pow(delta / rho_t, 1.0 / (clamped + 1.0));
}

double beta_alpha_correspondence(double alpha, double t, double tau) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("beta_alpha_correspondence: alpha must be in (0, 1)");
  require_time_in_window(t, tau, "beta_alpha_correspondence");
  return -std::log(alpha) / (tau - t);
}

double source_condition_norm(const SpectralVector& u_t, const EigenSystem& es,
                             const SourceCondition& sc, double t, double tau) {
  require_time_in_window(t, tau, "source_condition_norm");
  return norm(apply_calculus(sc.symbol(t, tau), es, u_t));
}

double lavrentiev_total_bound(const SourceCondition& sc, double alpha, double delta) {
  if (!(alpha > 0.0)) throw std::invalid_argument("lavrentiev_total_bound: alpha must be > 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("lavrentiev_total_bound: delta must be >= 0");
  const double clamped = std::min(sc.gamma(), 1.0);
  return sc.rho() * std::pow(alpha, clamped) + delta / alpha;
}

}  // namespace reglab
