#pragma once

#include <stdexcept>
#include <string>

namespace belltime {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kIo = 2,
  kIntegrity = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ExitCode::kValidation, what) {}
};

// Not enough trials in a context bucket to estimate its correlator.
class InsufficientDataError : public ValidationError {
 public:
  explicit InsufficientDataError(const std::string& what)
      : ValidationError(what) {}
};

class UnsupportedOperationError : public ValidationError {
 public:
  explicit UnsupportedOperationError(const std::string& what)
      : ValidationError(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::kIo, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what)
      : Error(ExitCode::kIntegrity, what) {}
};

}  // namespace belltime
