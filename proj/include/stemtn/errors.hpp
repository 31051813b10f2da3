#pragma once

#include <stdexcept>
#include <string>

namespace stemtn {

enum class ErrorKind {
  // network / tensor semantics
  MalformedNetwork,
  CapExceeded,
  OpenEdgeSliced,
  IndexOutOfRange,
  // circuit
  MissingParams,
  SyntaxError,
  InvariantViolation,
  QubitCoverage,
  LayoutTooSmall,
  // planning
  Infeasible,
  EdgeNotFound,
  SchemaError,
  Stuck,
  // runtime / harness
  HashMismatch,
  WidthExceedsBudget,
  SubtaskFailure,
  MissingResult,
  ChecksumMismatch,
  EmptySamples,
};

inline const char *error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedNetwork: return "MalformedNetwork";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::OpenEdgeSliced: return "OpenEdgeSliced";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::MissingParams: return "MissingParams";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::QubitCoverage: return "QubitCoverage";
    case ErrorKind::LayoutTooSmall: return "LayoutTooSmall";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::EdgeNotFound: return "EdgeNotFound";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::Stuck: return "Stuck";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::WidthExceedsBudget: return "WidthExceedsBudget";
    case ErrorKind::SubtaskFailure: return "SubtaskFailure";
    case ErrorKind::MissingResult: return "MissingResult";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::EmptySamples: return "EmptySamples";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string &msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace stemtn
