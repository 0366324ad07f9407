#pragma once

#include <stdexcept>
#include <string>

namespace sfk {

enum class Errc {
  TypeMismatch,
  NumericDomain,
  Unsupported,
  Indeterminate,
  NotZeroInftyAbsCont,
  NotAbsCont,
  InftyCompatibilityFailed,
  NotProbability,
  NotSubprobability,
  FiniteTotalMass,
  BoundViolation,
  UnsampleableSite,
  SyntaxError,
  ScopeError,
  TypeError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Parse failures keep the 1-based source position.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, int line, int column);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace sfk
