#pragma once

#include <stdexcept>
#include <string>

namespace towerforge {

// Failure classes, grouped by how callers are expected to react:
//   kPrecondition*    caller passed something invalid; fix the call.
//   kNeedsDeeperStage the construction exists but is not resolvable at the
//                     requested stage depth; retry deeper (CLI exit code 3).
//   everything else   structural violations detected mid-operation.
enum class ErrorKind {
  kPrecondition,
  kNeedsDeeperStage,
  kDepthExceeded,
  kNegativeEndpoint,
  kUnresolvedMass,
  kNoReturnWithinBudget,
  kNotRepresentable,
  kHeightMismatch,
  kAlphabetMismatch,
  kEmptyAnchor,
  kWindowOutOfRange,
  kWordTooLong,
  kUnknownSymbol,
  kNotRefining,
  kMaximalPath,
  kInconsistentTower,
  kTowerNotRefinedByK,
  kMissingNames,
  kDegeneratePartition,
  kBoundedOrbitDetected,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kPrecondition: return "Precondition";
    case ErrorKind::kNeedsDeeperStage: return "NeedsDeeperStage";
    case ErrorKind::kDepthExceeded: return "DepthExceeded";
    case ErrorKind::kNegativeEndpoint: return "NegativeEndpoint";
    case ErrorKind::kUnresolvedMass: return "UnresolvedMass";
    case ErrorKind::kNoReturnWithinBudget: return "NoReturnWithinBudget";
    case ErrorKind::kNotRepresentable: return "NotRepresentable";
    case ErrorKind::kHeightMismatch: return "HeightMismatch";
    case ErrorKind::kAlphabetMismatch: return "AlphabetMismatch";
    case ErrorKind::kEmptyAnchor: return "EmptyAnchor";
    case ErrorKind::kWindowOutOfRange: return "WindowOutOfRange";
    case ErrorKind::kWordTooLong: return "WordTooLong";
    case ErrorKind::kUnknownSymbol: return "UnknownSymbol";
    case ErrorKind::kNotRefining: return "NotRefining";
    case ErrorKind::kMaximalPath: return "MaximalPath";
    case ErrorKind::kInconsistentTower: return "InconsistentTower";
    case ErrorKind::kTowerNotRefinedByK: return "TowerNotRefinedByK";
    case ErrorKind::kMissingNames: return "MissingNames";
    case ErrorKind::kDegeneratePartition: return "DegeneratePartition";
    case ErrorKind::kBoundedOrbitDetected: return "BoundedOrbitDetected";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// NeedsDeeperStage keeps the orbit index (or -1) that failed so drivers can
// report which direction fell off the stage column.
class NeedsDeeperStage : public Error {
 public:
  explicit NeedsDeeperStage(std::string message, long long failing_index = 0)
      : Error(ErrorKind::kNeedsDeeperStage, std::move(message)),
        failing_index_(failing_index) {}

  long long failing_index() const { return failing_index_; }

 private:
  long long failing_index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
  if (!cond) throw Error(kind, message);
}

}  // namespace towerforge
