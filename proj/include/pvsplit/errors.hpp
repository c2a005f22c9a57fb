#pragma once

#include <stdexcept>
#include <string>

namespace pvsplit {

// Base class for everything thrown by this library on bad input or a
// detected numerical failure.  Catching pvsplit::Error is enough to map
// any library failure to a clean exit.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed arguments: NaN/Inf coordinates, mismatched sizes, out-of-range
// parameters, unparsable configs.
class InvalidInput : public Error {
public:
  using Error::Error;
};

// The singular kernel was evaluated at (numerically) zero separation.
class SingularPoint : public Error {
public:
  using Error::Error;
};

// A configuration with coincident vortices was handed to an operation that
// requires pairwise-distinct positions (exact-kernel dynamics, Hamiltonian).
class SingularConfiguration : public Error {
public:
  using Error::Error;
};

// An integrated trajectory came closer than the configured collision radius.
// Carries the time at which integration stopped.
class NearCollision : public Error {
public:
  NearCollision(const std::string& what, double stop_time)
      : Error(what), stop_time_(stop_time) {}
  double stop_time() const { return stop_time_; }

private:
  double stop_time_;
};

// A tabulated kernel failed its accuracy validation against direct evaluation.
class TableAccuracy : public Error {
public:
  using Error::Error;
};

// Microcanonical shell search exhausted its budget without reaching the shell.
class EmptyShell : public Error {
public:
  using Error::Error;
};

// Canonical sampling refused: beta is at or beyond the partition-function
// existence threshold 4*pi / min_i |xi_i|.
class InvalidTemperature : public Error {
public:
  using Error::Error;
};

// Config-file problems (unknown keys, wrong types, missing seed).  The CLI
// maps these to a distinct exit code from numerical failures.
class ConfigError : public InvalidInput {
public:
  using InvalidInput::InvalidInput;
};

}  // namespace pvsplit
