#pragma once

#include <stdexcept>
#include <string>

namespace divbar {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A kernel value is not representable in double precision.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// mu <= 0: the value function is V(t,x) = x and no solver is needed.
class TrivialCase : public Error {
 public:
  explicit TrivialCase(const std::string& where)
      : Error(where + ": mu <= 0, the value function is trivial (V = x)") {}
};

/// The scalar root of the boundary equation could not be bracketed.
class NoBracket : public Error {
 public:
  using Error::Error;
};

/// A solved boundary value rose above its successor in time.
class NonMonotone : public Error {
 public:
  using Error::Error;
};

class PsorDiverged : public Error {
 public:
  using Error::Error;
};

/// The continuation region reaches the truncation level x_max.
class XmaxTooSmall : public Error {
 public:
  using Error::Error;
};

/// Extracted boundary increases in time by more than one space cell.
class NonMonotoneBeyondCell : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An input artifact (such as a boundary file) is absent.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

}  // namespace divbar
