#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace sshala {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidCharacter,
  kIndexOutOfRange,
  kParseError,
  kConstraintViolation,
  kIoError,
  kNonFiniteLoss,
  kVersionMismatch,
  kCorruptFile,
  kNotAPath,
  kEmptyInput,
  kUnreachableLemma,
  kMissingGold,
  kLengthMismatch,
  kSpanOutOfRange,
  kConstituentJoinMismatch,
  kUnknownLabel,
  kEmptyCorpus,
  kTaskMismatch,
  kInsufficientPairs,
  kInvalidRequest,
  kModelMissing,
  kSessionNotFound,
  kSessionFinalized,
  kInvalidCorrection,
  kFormatUnsupported,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidCharacter: return "InvalidCharacter";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConstraintViolation: return "ConstraintViolation";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kNotAPath: return "NotAPath";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnreachableLemma: return "UnreachableLemma";
    case ErrorCode::kMissingGold: return "MissingGold";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::kConstituentJoinMismatch: return "ConstituentJoinMismatch";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kTaskMismatch: return "TaskMismatch";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kModelMissing: return "ModelMissing";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kSessionFinalized: return "SessionFinalized";
    case ErrorCode::kInvalidCorrection: return "InvalidCorrection";
    case ErrorCode::kFormatUnsupported: return "FormatUnsupported";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type. `where`
// carries a position when one is meaningful (character index, line number,
// epoch, token index).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<std::size_t> where = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        where_(where),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> where() const noexcept { return where_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> where_;
  std::string detail_;
};

}  // namespace sshala
