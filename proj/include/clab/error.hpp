#pragma once

#include <stdexcept>
#include <string>

namespace clab {

enum class ErrorKind {
  kUnsupportedPrime,
  kDimension,
  kSingularVector,
  kPrecondition,
  kBudgetExceeded,
  kNumerical,
  kValidation,
  kOverflow,
  kIo,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this type; `kind()` lets callers
// (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnsupportedPrime: return "unsupported-prime";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kSingularVector: return "singular-vector";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kBudgetExceeded: return "budget-exceeded";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kOverflow: return "overflow";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace clab
