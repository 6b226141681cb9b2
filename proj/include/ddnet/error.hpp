#pragma once

#include <stdexcept>
#include <string>

namespace ddnet {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConflictError : public Error { using Error::Error; };
class GapError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class SampleSizeError : public Error { using Error::Error; };
class AlignmentError : public Error { using Error::Error; };
class DecompositionError : public Error { using Error::Error; };

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double last_change)
      : Error(msg), last_change_(last_change) {}
  // Largest coefficient change in the final sweep.
  double last_change() const noexcept { return last_change_; }

 private:
  double last_change_;
};

}  // namespace ddnet
