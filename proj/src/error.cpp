#include "akira/error.hpp"

namespace akira {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyProgram: return "empty program";
    case ErrorKind::DetectorUnavailable: return "detector unavailable";
    case ErrorKind::ProviderUnavailable: return "provider unavailable";
    case ErrorKind::UnknownSnapshot: return "unknown snapshot";
    case ErrorKind::DuplicateSnapshot: return "duplicate snapshot";
    case ErrorKind::EmptyHistory: return "empty history";
    case ErrorKind::InvalidWeights: return "invalid weights";
    case ErrorKind::DegenerateCandidate: return "degenerate candidate";
    case ErrorKind::InvalidKnowledgeEntry: return "invalid knowledge entry";
    case ErrorKind::TerminalState: return "terminal state";
    case ErrorKind::RunnerFailure: return "runner failure";
    case ErrorKind::ParseError: return "parse error";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

}  // namespace akira
