#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entroute {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or record violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input text could not be parsed. `line()` is 1-based; 0 means "not line oriented".
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), source_(source), line_(line) {}

  [[nodiscard]] const std::string& source() const noexcept { return source_; }
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// A descriptor was requested for a probe that stopped before N tokens.
/// Callers route such instances to Standard instead.
class EarlyStopError : public Error {
 public:
  using Error::Error;
};

/// An object was used before it reached the required state (e.g. unfitted scaler).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Optimisation diverged.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// The endpoint could not be reached after all retry attempts.
class TransportError : public Error {
 public:
  TransportError(int attempts, const std::string& what)
      : Error(what + " (after " + std::to_string(attempts) + " attempt(s))"), attempts_(attempts) {}

  [[nodiscard]] int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// The endpoint answered but does not support a required feature (log-probabilities).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// The endpoint answered with something that is not a valid completion response.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace entroute
