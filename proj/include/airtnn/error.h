#ifndef AIRTNN_ERROR_H_
#define AIRTNN_ERROR_H_

#include <stdexcept>
#include <string>

namespace airtnn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (e.g. disconnected graph).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Shapes or dimensions of operands do not agree.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Random generation could not satisfy its constraints within the retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Iterative numeric routine failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. The message carries the offending line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Loss became non-finite during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace airtnn

#endif  // AIRTNN_ERROR_H_
