#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace triage {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input at a known line of a text file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input that parses but violates a domain constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace triage
