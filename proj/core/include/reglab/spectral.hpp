#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "reglab/errors.hpp"

namespace reglab {

// Per-mode products whose log-magnitude exceeds this are treated as
// unrepresentable (log(DBL_MAX) is about 709.78; we keep headroom).
inline constexpr double log_overflow_threshold = 700.0;

// Finite, strictly increasing list of positive eigenvalues. Realizes a
// positive self-adjoint operator diagonally; there is no multiplicity field,
// a multiple eigenvalue is modeled by nearby distinct entries.
class EigenSystem {
 public:
  explicit EigenSystem(std::vector<double> eigenvalues, std::string label = {});

  std::size_t size() const { return eigenvalues_.size(); }
  double eigenvalue(std::size_t n) const { return eigenvalues_[n]; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double max_eigenvalue() const { return eigenvalues_.back(); }
  const std::string& label() const { return label_; }

 private:
  std::vector<double> eigenvalues_;
  std::string label_;
};

// lambda_k = k^2, k = 1..n_modes: the classic one-dimensional test spectrum.
EigenSystem make_dirichlet_laplacian(std::size_t n_modes);

// Coefficients of an element of H in the eigenbasis of an associated
// EigenSystem. Plain value type; alignment is checked where the pairing
// happens.
class SpectralVector {
 public:
  SpectralVector() = default;
  explicit SpectralVector(std::vector<double> coefficients);

  static SpectralVector zeros(std::size_t n);
  static SpectralVector unit(std::size_t n, std::size_t mode);  // e_{mode}, 0-based

  std::size_t size() const { return coefficients_.size(); }
  double operator[](std::size_t n) const { return coefficients_[n]; }
  double& operator[](std::size_t n) { return coefficients_[n]; }
  const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> coefficients_;
};

SpectralVector operator+(const SpectralVector& a, const SpectralVector& b);
SpectralVector operator-(const SpectralVector& a, const SpectralVector& b);
SpectralVector operator*(double s, const SpectralVector& v);

// sqrt(sum of squared coefficients), scaled to avoid intermediate overflow.
double norm(const SpectralVector& v);

// Evaluation rule lambda -> g(lambda) for the diagonal functional calculus
// g(A). The tagged families carry an exact log-magnitude so products can be
// formed in log space when direct evaluation would overflow.
class ScalarSymbol {
 public:
  enum class Family { power, exponential, general };

  static ScalarSymbol identity();                // g == 1
  static ScalarSymbol power(double exponent);    // lambda^p
  static ScalarSymbol exponential(double rate);  // e^{rate * lambda}
  static ScalarSymbol semigroup(double t);       // e^{-t lambda}, t >= 0

  // General monotone callable. log_magnitude is optional; without it the
  // log-magnitude falls back to log(|eval(lambda)|), which still detects
  // overflow (an inf evaluation maps to +inf).
  static ScalarSymbol general(std::string name, std::function<double(double)> eval,
                              std::function<double(double)> log_magnitude = {});

  double operator()(double lambda) const;
  double log_magnitude(double lambda) const;

  Family family() const { return family_; }
  bool is_exponential() const { return family_ == Family::exponential; }
  double rate() const { return rate_; }
  const std::string& name() const { return name_; }

 private:
  ScalarSymbol() = default;

  Family family_ = Family::power;
  double exponent_ = 0.0;
  double rate_ = 0.0;
  std::function<double(double)> eval_;
  std::function<double(double)> log_eval_;
  std::string name_;
};

// e^{rate * lambda} * coeff. Uses the direct product when it is finite and
// falls back to exp of the (clamped) log-magnitude otherwise, so a tiny
// coefficient survives a large positive rate. Throws DomainViolation when the
// product's log-magnitude exceeds log_overflow_threshold.
double amplified_coefficient(double rate, double lambda, double coeff);

// True iff every product g(lambda_n) * v_n is representable at working
// precision, i.e. v is in D(g(A)) at this resolution. Zero-mass modes always
// pass, so shrinking a coefficient can never turn a pass into a failure.
bool domain_check(const ScalarSymbol& g, const EigenSystem& es, const SpectralVector& v);

// Coefficient n of the result is g(lambda_n) * v_n. Products are formed in
// log space when direct evaluation overflows. Throws DomainViolation when the
// domain check fails.
SpectralVector apply_calculus(const ScalarSymbol& g, const EigenSystem& es,
                              const SpectralVector& v);

// e^{-tA} v: coefficient n is e^{-t lambda_n} v_n. Contraction for t >= 0.
SpectralVector semigroup_apply(double t, const EigenSystem& es, const SpectralVector& v);

namespace detail {
void require_aligned(const EigenSystem& es, const SpectralVector& v, const char* what);
void require_same_size(const SpectralVector& a, const SpectralVector& b, const char* what);
}

}  // namespace reglab
