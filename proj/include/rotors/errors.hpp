#pragma once

#include <stdexcept>
#include <string>

namespace rotors {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ROTORS_DEFINE_ERROR(Name)      \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

// phasepoly
ROTORS_DEFINE_ERROR(NonZeroMean)
ROTORS_DEFINE_ERROR(PoleAtZero)
// averaging
ROTORS_DEFINE_ERROR(NotDivisible)
ROTORS_DEFINE_ERROR(NonTermination)
// sde / observables
ROTORS_DEFINE_ERROR(NonFinite)
ROTORS_DEFINE_ERROR(RegimeViolation)
// lyapunov
ROTORS_DEFINE_ERROR(ParameterRejection)
// control
ROTORS_DEFINE_ERROR(DegenerateForce)
ROTORS_DEFINE_ERROR(Unsupported)
ROTORS_DEFINE_ERROR(Unachievable)
ROTORS_DEFINE_ERROR(NotConverging)
// configuration and preconditions
ROTORS_DEFINE_ERROR(ConfigError)
ROTORS_DEFINE_ERROR(PreconditionError)

#undef ROTORS_DEFINE_ERROR

}  // namespace rotors
