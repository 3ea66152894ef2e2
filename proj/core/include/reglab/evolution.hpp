#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "reglab/spectral.hpp"

namespace reglab {

// --- per-mode time functions --------------------------------------------

struct ConstantMode {
  double value = 0.0;
};

struct ExponentialMode {
  double amplitude = 0.0;
  double rate = 0.0;  // amplitude * e^{rate * s}
};

// Uniform samples values[i] = f(i * step), i = 0..n-1.
struct SampledMode {
  std::vector<double> values;
  double step = 0.0;
};

using ModeTerm = std::variant<ConstantMode, ExponentialMode, SampledMode>;

// One mode of the source term: a finite sum of primitive terms. A freshly
// parsed mode holds a single term; sums arise from perturbations and from
// source arithmetic.
class ModeFunction {
 public:
  ModeFunction() = default;  // zero
  explicit ModeFunction(ModeTerm term);

  static ModeFunction zero() { return ModeFunction(); }
  static ModeFunction constant(double c);
  static ModeFunction exponential(double amplitude, double rate);
  static ModeFunction sampled(std::vector<double> values, double step);

  void add_term(ModeTerm term);
  double operator()(double s) const;
  const std::vector<ModeTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  // End of the interval the mode can be evaluated on (inf for closed forms).
  double coverage() const;

 private:
  std::vector<ModeTerm> terms_;
};

// Structural difference a - b with exact cancellation of identical terms, so
// re-measuring a perturbation does not pay floating-point cancellation. Terms
// of b without an identical partner in a are appended negated.
ModeFunction mode_difference(const ModeFunction& a, const ModeFunction& b);

// The non-homogeneous term f: [0, tau] -> H as one time function per mode.
class SourceTerm {
 public:
  explicit SourceTerm(std::vector<ModeFunction> modes);
  static SourceTerm zero(std::size_t n_modes);

  std::size_t mode_count() const { return modes_.size(); }
  const ModeFunction& mode(std::size_t n) const { return modes_[n]; }

  SpectralVector evaluate(double s) const;  // f(s) in spectral coordinates
  bool is_zero() const;
  double coverage() const;  // min over modes

  // f + c with c constant in time (spectral coordinates). Zero components do
  // not add a term, so a zero shift returns an identical source.
  SourceTerm with_constant_shift(const SpectralVector& c) const;

 private:
  std::vector<ModeFunction> modes_;
};

SourceTerm operator+(const SourceTerm& a, const SourceTerm& b);

// --- quadrature ------------------------------------------------------------

struct TimeGrid {
  enum class Rule { trapezoid, gauss_legendre };

  std::vector<double> points;  // ascending, at least 2, endpoints included
  Rule rule = Rule::trapezoid;

  static TimeGrid uniform(double a, double b, std::size_t cells, Rule rule = Rule::trapezoid);
};

inline constexpr double default_richardson_tol = 1e-3;

// integral_a^b e^{-(b-s) lambda} f(s) ds. Constant and exponential terms are
// integrated analytically; sampled terms use the grid (trapezoid with a
// step-halving certificate, or Gauss-Legendre panels). Throws
// QuadratureTolerance when the certificate disagrees beyond richardson_tol
// (relative to max(1, |I|)).
double bochner_quadrature(const ModeFunction& f, double lambda, double a, double b,
                          const TimeGrid& grid, double richardson_tol = default_richardson_tol);

// Same, with the grid for sampled terms derived from their own sample step.
double bochner_quadrature(const ModeFunction& f, double lambda, double a, double b,
                          double richardson_tol = default_richardson_tol);

// --- problems ----------------------------------------------------------------

// The data of u' + Au = f, u(tau) = phi_tau, plus an optional exact mild
// solution for manufactured test problems.
class FinalValueProblem {
 public:
  using TruthFn = std::function<SpectralVector(double)>;

  FinalValueProblem(EigenSystem eigensystem, double tau, SpectralVector phi_tau,
                    SourceTerm source, TruthFn truth = {});

  const EigenSystem& eigensystem() const { return eigensystem_; }
  double tau() const { return tau_; }
  const SpectralVector& phi_tau() const { return phi_tau_; }
  const SourceTerm& source() const { return source_; }

  bool has_truth() const { return static_cast<bool>(truth_); }
  SpectralVector truth(double t) const;

  // Same problem with replaced (typically perturbed) data; the exact solution
  // map is kept so reconstruction errors can still be measured against it.
  FinalValueProblem with_data(SpectralVector phi_tau, SourceTerm source) const;

 private:
  EigenSystem eigensystem_;
  double tau_;
  SpectralVector phi_tau_;
  SourceTerm source_;
  TruthFn truth_;
};

// Forward (well-posed) mild solution of the initial value problem:
// e^{-tA} phi0 + integral_0^t e^{-(t-s)A} f(s) ds.
SpectralVector ivp_mild_solution(const EigenSystem& es, const SpectralVector& phi0,
                                 const SourceTerm& source, double t);

// psi(t) = phi_tau - integral_t^tau e^{-(tau-s)A} f(s) ds, t in [0, tau).
SpectralVector accumulate_psi(const FinalValueProblem& problem, double t);

// Exact (unregularized) backward solution e^{(tau-t)A} psi(t). Throws
// DomainViolation when psi(t) leaves D(e^{(tau-t)A}) at working precision:
// the ill-posedness made concrete.
SpectralVector fvp_mild_solution(const FinalValueProblem& problem, double t);

// True iff phi is in D(A e^{tau A}) at working precision: the criterion for
// the backward evolution u(t) = e^{(tau-t)A} phi to be a classical solution.
bool classical_solution_check(const SpectralVector& phi, const EigenSystem& es, double tau);

// Builds consistent final data by running the forward solve from target_u0,
// and attaches the exact mild solution t -> u(t) as the truth map.
FinalValueProblem manufacture_problem(const EigenSystem& es, double tau,
                                      const SpectralVector& target_u0, const SourceTerm& source);

}  // namespace reglab
