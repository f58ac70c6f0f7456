#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace factcheck {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dataset / fixture / store file problems. Carries the position when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = "")
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& field) {
    std::string msg = what;
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    if (!field.empty()) msg += " [field: " + field + "]";
    return msg;
  }
  std::size_t line_;
  std::string field_;
};

// Model output that is not parseable JSON at all.
class SyntaxError : public Error {
 public:
  using Error::Error;
};

// Parseable JSON that violates the output schema (missing/extra/empty property).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A verdict string outside the active label scheme.
class LabelError : public Error {
 public:
  using Error::Error;
};

// Network / endpoint failure. Retryable covers timeouts, 429 and 5xx;
// auth and quota failures are fatal.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// Terminal failure of complete_validated: every attempt within the repair
// budget was invalid. Keeps the raw text of all attempts.
class ValidationFailed : public Error {
 public:
  ValidationFailed(const std::string& what, std::vector<std::string> attempts)
      : Error(what), attempts_(std::move(attempts)) {}
  const std::vector<std::string>& attempts() const { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Precondition violation of a pure operation (empty input, bad dof, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace factcheck
