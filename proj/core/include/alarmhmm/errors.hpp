#pragma once

#include <stdexcept>
#include <string>

namespace alarmhmm {

// Invalid argument or precondition violation (dimension mismatch, value out of range).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A symbol index that is not part of the model's alphabet.
class UnknownSymbolError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Inference hit an observation with zero probability under the model.
class InferenceError : public std::runtime_error {
 public:
  InferenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// A file or document that does not follow the expected layout.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model document whose probabilities violate the HMM invariants.
class InvalidModelError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// A file that cannot be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alarmhmm
