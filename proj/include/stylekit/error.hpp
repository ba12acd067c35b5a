#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stylekit {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

class PreconditionError : public Error {
public:
  explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

class NotFoundError : public Error {
public:
  explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};

class InfeasibleError : public Error {
public:
  explicit InfeasibleError(const std::string& what) : Error("infeasible", what) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

/// Malformed input record. `line` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error("parse", line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Transport failure talking to a provider; carries the per-attempt log.
class TransportError : public Error {
public:
  TransportError(const std::string& what, std::string attempt_log)
      : Error("transport", what), attempt_log_(std::move(attempt_log)) {}

  const std::string& attempt_log() const noexcept { return attempt_log_; }

private:
  std::string attempt_log_;
};

}  // namespace stylekit
