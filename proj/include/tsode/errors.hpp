#pragma once

// Exception taxonomy. Kernel-raised errors carry the offending code-list
// line index in the message whenever it is known.

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tsode {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tracing-time: a function name with no registered sub-ODE definition.
struct UnsupportedFunction : Error {
  using Error::Error;
};

// Tracing-time: pow() with an exponent that is a runtime parameter.
struct UnsupportedParamExponent : Error {
  using Error::Error;
};

// Tracing-time: arithmetic that would fold a runtime parameter into a
// constant (e.g. g*2 with g a parameter); the line format holds at most
// one immediate, so the combination cannot be kept live.
struct UnsupportedParamExpression : Error {
  using Error::Error;
};

struct UnknownParameter : Error {
  using Error::Error;
};

// Kernel: division where the divisor series has a zero leading coefficient.
struct DivisionBySingularSeries : Error {
  using Error::Error;
};

// Kernel: a base function evaluated outside its domain (log/sqrt/pow of a
// non-positive leading coefficient).
struct BaseFunctionDomainError : Error {
  using Error::Error;
};

// Registration: a sub-ODE definition whose h disagrees with the finite
// difference derivative of its base function.
struct InconsistentSubODE : Error {
  using Error::Error;
};

// Structural analysis: no finite transversal exists.
struct StructurallyIllPosed : Error {
  using Error::Error;
};

// Count of no-forward-read violations observed process-wide. The counter
// is bumped when a TrapViolation is constructed, so a suite can assert it
// stayed at zero across arbitrary workloads.
inline std::atomic<std::uint64_t>& trap_violation_count() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

// A read of a coefficient order that the current sweep has not produced
// yet. This is a logic error in the kernel scheduling, never user input.
struct TrapViolation : std::logic_error {
  explicit TrapViolation(const std::string& msg) : std::logic_error(msg) {
    ++trap_violation_count();
  }
};

}  // namespace tsode
