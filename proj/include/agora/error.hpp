#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agora {

enum class ErrorCode {
  Syntax,
  Schema,
  Range,
  CoincidentPoints,
  NoTask,
  NotEnrolled,
  AssignmentClosed,
  SessionComplete,
  NotLocalized,
  ProofRequired,
  ProofInvalid,
  AlreadyAnswered,
  PayloadMismatch,
  UnknownQuestion,
  AlreadyUsed,
  AlreadyJoined,
  NotJoined,
  DivergenceDetected,
  NotFound,
  Conflict,
  Unauthorized,
  Forbidden,
  BadRequest,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the engine carries a code; codec errors also
// carry the document path of the offending field.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string path = {})
      : std::runtime_error(std::move(message)), code_(code), path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

}  // namespace agora
