#include "reglab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace reglab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (1 - e^{-x}) / x, continuous through x = 0.
double one_minus_exp_over(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

double eval_term(const ModeTerm& term, double s) {
  if (const auto* c = std::get_if<ConstantMode>(&term)) return c->value;
  if (const auto* e = std::get_if<ExponentialMode>(&term))
    return e->amplitude * std::exp(e->rate * s);
  const auto& g = std::get<SampledMode>(term);
  const double span = static_cast<double>(g.values.size() - 1) * g.step;
  const double tol = 1e-9 * std::max(span, g.step);
  if (s < -tol || s > span + tol)
    throw std::invalid_argument("SampledMode: evaluation point outside the sampled range");
  const double u = std::clamp(s / g.step, 0.0, static_cast<double>(g.values.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(u), g.values.size() - 2);
  const double w = u - static_cast<double>(i);
  return g.values[i] * (1.0 - w) + g.values[i + 1] * w;
}

double term_coverage(const ModeTerm& term) {
  if (const auto* g = std::get_if<SampledMode>(&term))
    return static_cast<double>(g->values.size() - 1) * g->step;
  return kInf;
}

bool terms_identical(const ModeTerm& a, const ModeTerm& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ca = std::get_if<ConstantMode>(&a))
    return ca->value == std::get<ConstantMode>(b).value;
  if (const auto* ea = std::get_if<ExponentialMode>(&a)) {
    const auto& eb = std::get<ExponentialMode>(b);
    return ea->amplitude == eb.amplitude && ea->rate == eb.rate;
  }
  const auto& ga = std::get<SampledMode>(a);
  const auto& gb = std::get<SampledMode>(b);
  return ga.step == gb.step && ga.values == gb.values;
}

ModeTerm negated(const ModeTerm& term) {
  if (const auto* c = std::get_if<ConstantMode>(&term)) return ConstantMode{-c->value};
  if (const auto* e = std::get_if<ExponentialMode>(&term))
    return ExponentialMode{-e->amplitude, e->rate};
  auto g = std::get<SampledMode>(term);
  for (double& v : g.values) v = -v;
  return g;
}

void validate_term(const ModeTerm& term) {
  if (const auto* c = std::get_if<ConstantMode>(&term)) {
    if (!std::isfinite(c->value)) throw std::invalid_argument("ConstantMode: non-finite value");
    return;
  }
  if (const auto* e = std::get_if<ExponentialMode>(&term)) {
    if (!std::isfinite(e->amplitude) || !std::isfinite(e->rate))
      throw std::invalid_argument("ExponentialMode: non-finite parameters");
    return;
  }
  const auto& g = std::get<SampledMode>(term);
  if (g.values.size() < 2) throw std::invalid_argument("SampledMode: needs at least 2 samples");
  if (!(g.step > 0.0) || !std::isfinite(g.step))
    throw std::invalid_argument("SampledMode: step must be positive");
  for (double v : g.values)
    if (!std::isfinite(v)) throw std::invalid_argument("SampledMode: non-finite sample");
}

}  // namespace

ModeFunction::ModeFunction(ModeTerm term) { add_term(std::move(term)); }

ModeFunction ModeFunction::constant(double c) { return ModeFunction(ConstantMode{c}); }

ModeFunction ModeFunction::exponential(double amplitude, double rate) {
  return ModeFunction(ExponentialMode{amplitude, rate});
}

ModeFunction ModeFunction::sampled(std::vector<double> values, double step) {
  return ModeFunction(SampledMode{std::move(values), step});
}

void ModeFunction::add_term(ModeTerm term) {
  validate_term(term);
  terms_.push_back(std::move(term));
}

double ModeFunction::operator()(double s) const {
  double v = 0.0;
  for (const auto& term : terms_) v += eval_term(term, s);
  return v;
}

double ModeFunction::coverage() const {
  double c = kInf;
  for (const auto& term : terms_) c = std::min(c, term_coverage(term));
  return c;
}

ModeFunction mode_difference(const ModeFunction& a, const ModeFunction& b) {
  std::vector<ModeTerm> remaining = a.terms();
  std::vector<ModeTerm> extra;
  for (const auto& tb : b.terms()) {
    auto hit = std::find_if(remaining.begin(), remaining.end(),
                            [&](const ModeTerm& ta) { return terms_identical(ta, tb); });
    if (hit != remaining.end())
      remaining.erase(hit);
    else
      extra.push_back(negated(tb));
  }
  ModeFunction diff;
  for (auto& t : remaining) diff.add_term(std::move(t));
  for (auto& t : extra) diff.add_term(std::move(t));
  return diff;
}

SourceTerm::SourceTerm(std::vector<ModeFunction> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) throw std::invalid_argument("SourceTerm: needs at least one mode");
}

SourceTerm SourceTerm::zero(std::size_t n_modes) {
  return SourceTerm(std::vector<ModeFunction>(n_modes));
}

SpectralVector SourceTerm::evaluate(double s) const {
  std::vector<double> v(modes_.size());
  for (std::size_t n = 0; n < modes_.size(); ++n) v[n] = modes_[n](s);
  return SpectralVector(std::move(v));
}

bool SourceTerm::is_zero() const {
  return std::all_of(modes_.begin(), modes_.end(),
                     [](const ModeFunction& m) { return m.is_zero(); });
}

double SourceTerm::coverage() const {
  double c = kInf;
  for (const auto& m : modes_) c = std::min(c, m.coverage());
  return c;
}

SourceTerm SourceTerm::with_constant_shift(const SpectralVector& c) const {
  if (c.size() != modes_.size())
    throw std::invalid_argument("SourceTerm::with_constant_shift: size mismatch");
  std::vector<ModeFunction> shifted = modes_;
  for (std::size_t n = 0; n < shifted.size(); ++n)
    if (c[n] != 0.0) shifted[n].add_term(ConstantMode{c[n]});
  return SourceTerm(std::move(shifted));
}

SourceTerm operator+(const SourceTerm& a, const SourceTerm& b) {
  if (a.mode_count() != b.mode_count())
    throw std::invalid_argument("SourceTerm operator+: mode count mismatch");
  std::vector<ModeFunction> modes;
  modes.reserve(a.mode_count());
  for (std::size_t n = 0; n < a.mode_count(); ++n) {
    ModeFunction m = a.mode(n);
    for (const auto& t : b.mode(n).terms()) m.add_term(t);
    modes.push_back(std::move(m));
  }
  return SourceTerm(std::move(modes));
}

TimeGrid TimeGrid::uniform(double a, double b, std::size_t cells, Rule rule) {
  if (!(b > a)) throw std::invalid_argument("TimeGrid::uniform: needs b > a");
  if (cells == 0) throw std::invalid_argument("TimeGrid::uniform: needs at least one cell");
  std::vector<double> pts(cells + 1);
  const double h = (b - a) / static_cast<double>(cells);
  for (std::size_t i = 0; i <= cells; ++i) pts[i] = a + h * static_cast<double>(i);
  pts.back() = b;
  return TimeGrid{std::move(pts), rule};
}

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr double kGlx[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                            0.9061798459386640};
constexpr double kGlw[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                            0.2369268850561891, 0.2369268850561891};

double closed_form_integral(double c, double mu, double lambda, double a, double b) {
  // integral_a^b e^{-(b-s) lambda} c e^{mu s} ds
  //   = c e^{mu b} (b - a) * (1 - e^{-x}) / x,  x = (lambda + mu)(b - a)
  //   = c (e^{mu b} - e^{mu a - lambda (b - a)}) / (lambda + mu)
  // The first form is cancellation-safe near x = 0; the second keeps the
  // exponents bounded when x is large of either sign.
  const double x = (lambda + mu) * (b - a);
  if (std::abs(x) <= 1.0) return c * std::exp(mu * b) * (b - a) * one_minus_exp_over(x);
  return c * (std::exp(mu * b) - std::exp(mu * a - lambda * (b - a))) / (lambda + mu);
}

double trapezoid(const std::vector<double>& nodes, const std::function<double(double)>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    acc += 0.5 * (w(nodes[i]) + w(nodes[i + 1])) * (nodes[i + 1] - nodes[i]);
  return acc;
}

double gauss_panels(const std::vector<double>& nodes, const std::function<double(double)>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double mid = 0.5 * (nodes[i] + nodes[i + 1]);
    const double half = 0.5 * (nodes[i + 1] - nodes[i]);
    double panel = 0.0;
    for (int k = 0; k < 5; ++k) panel += kGlw[k] * w(mid + half * kGlx[k]);
    acc += panel * half;
  }
  return acc;
}

// Nodes of `fine` with every other interior point dropped (endpoints kept).
std::vector<double> coarsened(const std::vector<double>& fine) {
  std::vector<double> coarse;
  coarse.push_back(fine.front());
  for (std::size_t i = 2; i + 1 < fine.size(); i += 2) coarse.push_back(fine[i]);
  coarse.push_back(fine.back());
  return coarse;
}

double quadrature_with_certificate(const std::vector<double>& nodes, TimeGrid::Rule rule,
                                   const std::function<double(double)>& w, double tol) {
  const bool trap = rule == TimeGrid::Rule::trapezoid;
  const double fine = trap ? trapezoid(nodes, w) : gauss_panels(nodes, w);
  if (nodes.size() > 2) {
    const std::vector<double> half = coarsened(nodes);
    const double coarse = trap ? trapezoid(half, w) : gauss_panels(half, w);
    const double estimate = trap ? std::abs(fine - coarse) / 3.0 : std::abs(fine - coarse);
    if (estimate > tol * std::max(1.0, std::abs(fine))) {
      std::ostringstream msg;
      msg << "quadrature certificate failed: step-halving disagreement " << estimate
          << " exceeds tolerance " << tol << " (value " << fine << ")";
      throw QuadratureTolerance(msg.str());
    }
  }
  return fine;
}

// Sample-grid nodes of `g` clipped to [a, b], with a and b themselves included.
std::vector<double> clipped_sample_nodes(const SampledMode& g, double a, double b) {
  std::vector<double> nodes;
  nodes.push_back(a);
  const auto last = g.values.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const double s = static_cast<double>(i) * g.step;
    if (s > a + 1e-12 * g.step && s < b - 1e-12 * g.step) nodes.push_back(s);
  }
  nodes.push_back(b);
  return nodes;
}

double sampled_integral(const SampledMode& g, double lambda, double a, double b,
                        const std::vector<double>& nodes, TimeGrid::Rule rule, double tol) {
  (void)a;
  ModeTerm term = g;
  auto w = [&](double s) { return std::exp(-(b - s) * lambda) * eval_term(term, s); };
  return quadrature_with_certificate(nodes, rule, w, tol);
}

}  // namespace

double bochner_quadrature(const ModeFunction& f, double lambda, double a, double b,
                          const TimeGrid& grid, double richardson_tol) {
  if (!(b >= a)) throw std::invalid_argument("bochner_quadrature: needs a <= b");
  if (a == b || f.is_zero()) return 0.0;
  if (grid.points.size() < 2 || !std::is_sorted(grid.points.begin(), grid.points.end()))
    throw std::invalid_argument("bochner_quadrature: grid needs at least 2 ascending points");
  double acc = 0.0;
  for (const auto& term : f.terms()) {
    if (const auto* c = std::get_if<ConstantMode>(&term)) {
      acc += closed_form_integral(c->value, 0.0, lambda, a, b);
    } else if (const auto* e = std::get_if<ExponentialMode>(&term)) {
      acc += closed_form_integral(e->amplitude, e->rate, lambda, a, b);
    } else {
      const auto& g = std::get<SampledMode>(term);
      acc += sampled_integral(g, lambda, a, b, grid.points, grid.rule, richardson_tol);
    }
  }
  return acc;
}

double bochner_quadrature(const ModeFunction& f, double lambda, double a, double b,
                          double richardson_tol) {
  if (!(b >= a)) throw std::invalid_argument("bochner_quadrature: needs a <= b");
  if (a == b || f.is_zero()) return 0.0;
  double acc = 0.0;
  for (const auto& term : f.terms()) {
    if (const auto* c = std::get_if<ConstantMode>(&term)) {
      acc += closed_form_integral(c->value, 0.0, lambda, a, b);
    } else if (const auto* e = std::get_if<ExponentialMode>(&term)) {
      acc += closed_form_integral(e->amplitude, e->rate, lambda, a, b);
    } else {
      const auto& g = std::get<SampledMode>(term);
      acc += sampled_integral(g, lambda, a, b, clipped_sample_nodes(g, a, b),
                              TimeGrid::Rule::trapezoid, richardson_tol);
    }
  }
  return acc;
}

FinalValueProblem::FinalValueProblem(EigenSystem eigensystem, double tau, SpectralVector phi_tau,
                                     SourceTerm source, TruthFn truth)
    : eigensystem_(std::move(eigensystem)),
      tau_(tau),
      phi_tau_(std::move(phi_tau)),
      source_(std::move(source)),
      truth_(std::move(truth)) {
  if (!(tau_ > 0.0) || !std::isfinite(tau_))
    throw std::invalid_argument("FinalValueProblem: tau must be positive and finite");
  detail::require_aligned(eigensystem_, phi_tau_, "FinalValueProblem");
  if (source_.mode_count() != eigensystem_.size())
    throw std::invalid_argument("FinalValueProblem: source mode count != eigensystem size");
  if (source_.coverage() < tau_ * (1.0 - 1e-12))
    throw std::invalid_argument("FinalValueProblem: sampled source does not cover [0, tau]");
}

SpectralVector FinalValueProblem::truth(double t) const {
  if (!truth_) throw std::logic_error("FinalValueProblem: no truth map attached");
  return truth_(t);
}

FinalValueProblem FinalValueProblem::with_data(SpectralVector phi_tau, SourceTerm source) const {
  return FinalValueProblem(eigensystem_, tau_, std::move(phi_tau), std::move(source), truth_);
}

SpectralVector ivp_mild_solution(const EigenSystem& es, const SpectralVector& phi0,
                                 const SourceTerm& source, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("ivp_mild_solution: t must be >= 0");
  detail::require_aligned(es, phi0, "ivp_mild_solution");
  if (source.mode_count() != es.size())
    throw std::invalid_argument("ivp_mild_solution: source mode count != eigensystem size");
  std::vector<double> out(es.size());
  for (std::size_t n = 0; n < es.size(); ++n) {
    const double lambda = es.eigenvalue(n);
    out[n] = std::exp(-t * lambda) * phi0[n] + bochner_quadrature(source.mode(n), lambda, 0.0, t);
  }
  return SpectralVector(std::move(out));
}

SpectralVector accumulate_psi(const FinalValueProblem& problem, double t) {
  if (!(t >= 0.0) || !(t < problem.tau()))
    throw std::invalid_argument("accumulate_psi: t must satisfy 0 <= t < tau");
  const auto& es = problem.eigensystem();
  std::vector<double> out(es.size());
  for (std::size_t n = 0; n < es.size(); ++n) {
    const double lambda = es.eigenvalue(n);
    out[n] = problem.phi_tau()[n] -
             bochner_quadrature(problem.source().mode(n), lambda, t, problem.tau());
  }
  return SpectralVector(std::move(out));
}

SpectralVector fvp_mild_solution(const FinalValueProblem& problem, double t) {
  const SpectralVector psi = accumulate_psi(problem, t);
  return apply_calculus(ScalarSymbol::exponential(problem.tau() - t), problem.eigensystem(), psi);
}

bool classical_solution_check(const SpectralVector& phi, const EigenSystem& es, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("classical_solution_check: tau must be > 0");
  const auto g = ScalarSymbol::general(
      "lambda*exp(tau*lambda)", [tau](double l) { return l * std::exp(tau * l); },
      [tau](double l) { return std::log(l) + tau * l; });
  return domain_check(g, es, phi);
}

FinalValueProblem manufacture_problem(const EigenSystem& es, double tau,
                                      const SpectralVector& target_u0, const SourceTerm& source) {
  SpectralVector phi_tau = ivp_mild_solution(es, target_u0, source, tau);
  auto truth = [es, u0 = target_u0, source](double t) {
    return ivp_mild_solution(es, u0, source, t);
  };
  return FinalValueProblem(es, tau, std::move(phi_tau), source, std::move(truth));
}

}  // namespace reglab
