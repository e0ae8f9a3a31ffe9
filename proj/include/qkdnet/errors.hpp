#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qkdnet {

// Base for every protocol-level failure raised by the library. Parameter
// validation uses std::invalid_argument / std::domain_error directly.
class QkdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistic was requested over an empty population (e.g. QBER of zero
// detections).
class NoDataError : public QkdError {
 public:
  using QkdError::QkdError;
};

// The two parties' records have drifted out of step (length mismatch).
class ProtocolDesyncError : public QkdError {
 public:
  using QkdError::QkdError;
};

// Not enough key to carry out the requested step.
class InsufficientKeyError : public QkdError {
 public:
  using QkdError::QkdError;
};

// Session terminated by the protocol itself (QBER threshold, failed
// verification). Carries a short machine-readable reason.
class SessionAborted : public QkdError {
 public:
  SessionAborted(std::string reason, const std::string& detail)
      : QkdError(reason + ": " + detail), reason_(std::move(reason)) {}
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

// A pairwise key pool cannot cover a one-time-pad draw.
class KeyExhaustedError : public QkdError {
 public:
  using QkdError::QkdError;
};

class RoutingError : public QkdError {
 public:
  using QkdError::QkdError;
};

// Invalid configuration or topology text; `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(format(source, line, what)), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line, const std::string& what) {
    return line == 0 ? source + ": " + what : source + ":" + std::to_string(line) + ": " + what;
  }
  std::size_t line_;
};

}  // namespace qkdnet
