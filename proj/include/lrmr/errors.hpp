#pragma once

#include <stdexcept>
#include <string>

namespace lrmr {

// Base for everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Domain invariant or schema violated; not retryable.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (sizes, fractions, flag combinations).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed input file.
class InputError : public Error {
 public:
  using Error::Error;
};

// Cross-file inconsistency (e.g. outcome citing an unknown patient).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed judge output; recoverable, triggers the retry policy.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Network-level failure (connect, timeout, non-2xx); retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Judge call failed after exhausting retries; carries the last cause.
class JudgeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace lrmr
