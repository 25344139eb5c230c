#ifndef SHADOWPROBE_ERROR_H_
#define SHADOWPROBE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shadowprobe {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (wrong dimension, unlabeled data,
// mixed model kinds, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or document. `row()` is the 1-based data row when the
// problem is tied to one, otherwise 0.
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what, std::size_t row = 0)
      : Error(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// No state path consistent with the model topology explains the sequence.
class InfeasiblePathError : public Error {
 public:
  using Error::Error;
};

// Serialized document carries an unknown or unexpected "kind".
class KindError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// Pipeline configuration failed validation; `field()` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// An internal invariant (likelihood monotonicity, gain optimality, ...) did
// not hold. Always a bug, never a user error.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace shadowprobe

#endif  // SHADOWPROBE_ERROR_H_
