#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace protmeas {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor structure of an input does not match what the operation needs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated (e.g. non-Hermitian Hamiltonian).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Floating-point result failed an integrity check (norm drift, complex
/// expectation of a Hermitian operator, vanishing probability, ...).
class NumericalIntegrityError : public Error {
 public:
  using Error::Error;
};

/// User-supplied parameters cannot describe a valid setup.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// The requested state cannot be protected (degenerate eigenvalue).
class ProtectionImpossible : public Error {
 public:
  using Error::Error;
};

/// Forward and backward states became (numerically) orthogonal.
class DegenerateTwoStateVector : public Error {
 public:
  using Error::Error;
};

/// Postselection outcome has vanishing probability.
class ImpossiblePostselection : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration failed validation. Carries one diagnostic per
/// offending field, formatted as "section.key: message".
class ValidationError : public ConfigurationError {
 public:
  explicit ValidationError(std::vector<std::string> diagnostics);

  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

}  // namespace protmeas
