#include "sfk/errors.hpp"

namespace sfk {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::NumericDomain: return "NumericDomain";
    case Errc::Unsupported: return "Unsupported";
    case Errc::Indeterminate: return "Indeterminate";
    case Errc::NotZeroInftyAbsCont: return "NotZeroInftyAbsCont";
    case Errc::NotAbsCont: return "NotAbsCont";
    case Errc::InftyCompatibilityFailed: return "InftyCompatibilityFailed";
    case Errc::NotProbability: return "NotProbability";
    case Errc::NotSubprobability: return "NotSubprobability";
    case Errc::FiniteTotalMass: return "FiniteTotalMass";
    case Errc::BoundViolation: return "BoundViolation";
    case Errc::UnsampleableSite: return "UnsampleableSite";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::ScopeError: return "ScopeError";
    case Errc::TypeError: return "TypeError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

SyntaxError::SyntaxError(const std::string& message, int line, int column)
    : Error(Errc::SyntaxError,
            std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace sfk
