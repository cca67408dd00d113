#pragma once

#include <stdexcept>
#include <string>

namespace recon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to an operation (bad extents, mismatched sizes, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A mesh or field violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message carries the offending line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Inconsistent experiment or partition configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sparse factorization or solve failed its residual contract.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Data violates the solvability condition of a boundary value problem.
class WellPosednessError : public Error {
 public:
  using Error::Error;
};

/// Synthetic data would be generated on the inversion discretization.
class InverseCrimeError : public Error {
 public:
  using Error::Error;
};

class NotImplementedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace recon
