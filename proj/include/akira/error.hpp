#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace akira {

enum class ErrorKind {
  EmptyProgram,
  DetectorUnavailable,
  ProviderUnavailable,
  UnknownSnapshot,
  DuplicateSnapshot,
  EmptyHistory,
  InvalidWeights,
  DegenerateCandidate,
  InvalidKnowledgeEntry,
  TerminalState,
  RunnerFailure,
  ParseError,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure the library raises carries a kind so callers can route on it
/// (the FSM maps DetectorUnavailable to QErr, agents degrade on ProviderUnavailable).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace akira
