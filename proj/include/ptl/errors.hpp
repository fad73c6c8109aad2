#pragma once

#include <stdexcept>
#include <string>

namespace ptl {

// Every failure surfaced by the library carries one of these kinds so the
// CLI can map it to an exit code and tests can assert on the category
// instead of matching message text.
enum class ErrorKind {
  Syntax,
  MixedDialect,
  UnknownVariable,
  UnknownRelation,
  UnknownConstant,
  BadInput,
  ArityMismatch,
  SearchRequired,
  Overflow,
  WitnessShape,
  WitnessInsufficient,
  LogUnsupported,
  NonExistentialSystem,
  ConditionNotEmpty,
  EmptyTeam,
  FunctionQuantifierUnsupported,
  Unsupported,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::MixedDialect: return "mixed-dialect";
    case ErrorKind::UnknownVariable: return "unknown-variable";
    case ErrorKind::UnknownRelation: return "unknown-relation";
    case ErrorKind::UnknownConstant: return "unknown-constant";
    case ErrorKind::BadInput: return "bad-input";
    case ErrorKind::ArityMismatch: return "arity-mismatch";
    case ErrorKind::SearchRequired: return "search-required";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::WitnessShape: return "witness-shape";
    case ErrorKind::WitnessInsufficient: return "witness-insufficient";
    case ErrorKind::LogUnsupported: return "log-unsupported";
    case ErrorKind::NonExistentialSystem: return "non-existential-system";
    case ErrorKind::ConditionNotEmpty: return "condition-not-empty";
    case ErrorKind::EmptyTeam: return "empty-team";
    case ErrorKind::FunctionQuantifierUnsupported:
      return "function-quantifier-unsupported";
    case ErrorKind::Unsupported: return "unsupported";
  }
  return "unknown";
}

}  // namespace ptl
