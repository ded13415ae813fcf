#pragma once

#include <stdexcept>
#include <string>

namespace chipgate {

/// Base class for every failure raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CHIPGATE_DEFINE_ERROR(Name)         \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

// Field evaluated on (or within epsilon of) a wire line.
CHIPGATE_DEFINE_ERROR(SingularityError)
// Multistart descent produced no stationary minimum.
CHIPGATE_DEFINE_ERROR(DescentError)
// Hessian at a supposed minimum has a non-positive eigenvalue.
CHIPGATE_DEFINE_ERROR(SaddlePointError)
CHIPGATE_DEFINE_ERROR(TuningError)
CHIPGATE_DEFINE_ERROR(DomainError)
// Too many states requested for the grid resolution.
CHIPGATE_DEFINE_ERROR(ResolutionError)
CHIPGATE_DEFINE_ERROR(ConvergenceError)
// Double-well doublet structure missing.
CHIPGATE_DEFINE_ERROR(StructureError)
CHIPGATE_DEFINE_ERROR(GridMismatchError)
CHIPGATE_DEFINE_ERROR(InstabilityError)
// Overlap too small to define a phase.
CHIPGATE_DEFINE_ERROR(PhaseGapError)
CHIPGATE_DEFINE_ERROR(ValidityError)
CHIPGATE_DEFINE_ERROR(VerificationError)
CHIPGATE_DEFINE_ERROR(ConfigError)

#undef CHIPGATE_DEFINE_ERROR

}  // namespace chipgate
