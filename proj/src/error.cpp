#include "agora/error.hpp"

namespace agora {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Range: return "RangeError";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::NoTask: return "NoTask";
    case ErrorCode::NotEnrolled: return "NotEnrolled";
    case ErrorCode::AssignmentClosed: return "AssignmentClosed";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::NotLocalized: return "NotLocalized";
    case ErrorCode::ProofRequired: return "ProofRequired";
    case ErrorCode::ProofInvalid: return "ProofInvalid";
    case ErrorCode::AlreadyAnswered: return "AlreadyAnswered";
    case ErrorCode::PayloadMismatch: return "PayloadMismatch";
    case ErrorCode::UnknownQuestion: return "UnknownQuestion";
    case ErrorCode::AlreadyUsed: return "AlreadyUsed";
    case ErrorCode::AlreadyJoined: return "AlreadyJoined";
    case ErrorCode::NotJoined: return "NotJoined";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

}  // namespace agora
