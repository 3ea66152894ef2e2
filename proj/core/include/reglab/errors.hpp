#pragma once

#include <stdexcept>

namespace reglab {

// A spectral coefficient product left the representable range: the vector is
// outside the domain of the requested operator function at working precision.
class DomainViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The regularization parameter implies an amplification factor that is itself
// not representable in double precision.
class ParameterOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A step-halving (Richardson) certificate disagreed beyond the configured
// tolerance; the quadrature result cannot be trusted at the requested level.
class QuadratureTolerance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No positive parameter can reach the requested residual level: the noise is
// too large relative to the smoothness bound.
class NoBracket : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reglab
