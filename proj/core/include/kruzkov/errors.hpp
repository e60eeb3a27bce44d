#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kruzkov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid solver, oracle or verifier configuration (CFL violation, missing
/// penalty, target below grid resolution, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Error that carries the last state reached before the failure.
class StateError : public Error {
 public:
  StateError(const std::string& what, std::vector<double> state)
      : Error(what), state_(std::move(state)) {}
  const std::vector<double>& state() const noexcept { return state_; }

 private:
  std::vector<double> state_;
};

/// Non-finite dynamics evaluation during a Runge-Kutta step.
class IntegrationError : public StateError {
 public:
  using StateError::StateError;
};

/// Trajectory left the safety box.
class DivergenceError : public StateError {
 public:
  using StateError::StateError;
};

/// Closed-loop synthesis left the computed domain.
class SynthesisError : public StateError {
 public:
  using StateError::StateError;
};

/// Internal monotonicity check failed (e.g. the epsilon ladder).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Bracketing W_below <= W_above failed beyond tolerance.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Auxiliary function of a verifier (m(s), c2(s)) is not admissible.
class InvalidAuxiliaryError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace kruzkov
