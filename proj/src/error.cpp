#include "brainstorm/error.hpp"

namespace brainstorm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicatePersona: return "DuplicatePersona";
    case ErrorCode::NonPositiveTurnBudget: return "NonPositiveTurnBudget";
    case ErrorCode::OddTurnBudget: return "OddTurnBudget";
    case ErrorCode::UnknownPersona: return "UnknownPersona";
    case ErrorCode::InvalidModelConfig: return "InvalidModelConfig";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::AlreadyComplete: return "AlreadyComplete";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::TurnExecutionFailed: return "TurnExecutionFailed";
    case ErrorCode::Cancelled: return "Cancelled";
    case ErrorCode::SessionAlreadyRunning: return "SessionAlreadyRunning";
    case ErrorCode::ProviderTimeout: return "ProviderTimeout";
    case ErrorCode::ProviderRejection: return "ProviderRejection";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::DuplicateMount: return "DuplicateMount";
    case ErrorCode::MountNotFound: return "MountNotFound";
    case ErrorCode::MalformedEnvelope: return "MalformedEnvelope";
    case ErrorCode::TaskFailed: return "TaskFailed";
    case ErrorCode::PollTimeout: return "PollTimeout";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::RemountInProgress: return "RemountInProgress";
    case ErrorCode::StorageUnavailable: return "StorageUnavailable";
    case ErrorCode::DuplicateTurn: return "DuplicateTurn";
    case ErrorCode::TurnGap: return "TurnGap";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::ClassifierFailure: return "ClassifierFailure";
    case ErrorCode::UnparseableGrade: return "UnparseableGrade";
    case ErrorCode::EmbeddingProviderFailure: return "EmbeddingProviderFailure";
    case ErrorCode::NoTranscripts: return "NoTranscripts";
    case ErrorCode::MalformedTranscript: return "MalformedTranscript";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicatePersona:
    case ErrorCode::NonPositiveTurnBudget:
    case ErrorCode::OddTurnBudget:
    case ErrorCode::UnknownPersona:
    case ErrorCode::InvalidModelConfig:
      return true;
    default:
      return false;
  }
}

nlohmann::json Error::to_json() const {
  nlohmann::json j{{"error", std::string(to_string(code_))}, {"message", what()}};
  if (!detail_.is_null()) j["detail"] = detail_;
  return j;
}

}  // namespace brainstorm
