#pragma once

#include <stdexcept>
#include <string>

namespace gsa {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called with arguments that break its precondition
/// (e.g. combining elements of different groups).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Input outside the admissible domain (identity universe, digit strings).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Signer or combiner set does not match the threshold policy.
class PolicyError : public Error {
 public:
  using Error::Error;
};

/// Fewer partial signatures than the threshold.
class ThresholdError : public Error {
 public:
  using Error::Error;
};

/// A partial signature or precomputation is bound to a different
/// (message, policy) pair.
class BindingError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class ReplayError : public Error {
 public:
  using Error::Error;
};

/// Malformed bytes or text. `line` is 0 when not applicable.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : ParseError(std::string(), what, line) {}

  std::size_t line() const noexcept { return line_; }
  /// Same error, prefixed with the file or stream it came from.
  ParseError in(const std::string& source) const { return ParseError(source, detail_, line_); }

 private:
  ParseError(const std::string& source, const std::string& detail, std::size_t line)
      : Error((source.empty() ? "" : source + ": ") + (line == 0 ? "" : "line " + std::to_string(line) + ": ") + detail),
        detail_(detail),
        line_(line) {}

  std::string detail_;
  std::size_t line_;
};

}  // namespace gsa
