#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace brainstorm {

// Every failure the engine reports carries one of these codes. The string
// form (to_string) is what appears in REST bodies, CLI stderr and logs.
enum class ErrorCode {
  // config validation
  DuplicatePersona,
  NonPositiveTurnBudget,
  OddTurnBudget,
  UnknownPersona,
  InvalidModelConfig,
  // strategy / session lifecycle
  SessionComplete,
  AlreadyComplete,
  UnknownSession,
  TurnExecutionFailed,
  Cancelled,
  SessionAlreadyRunning,
  // model gateway
  ProviderTimeout,
  ProviderRejection,
  ScriptExhausted,
  ProviderFailure,
  // agent runtime
  DuplicateMount,
  MountNotFound,
  MalformedEnvelope,
  TaskFailed,
  PollTimeout,
  UnknownTask,
  RemountInProgress,
  // storage
  StorageUnavailable,
  DuplicateTurn,
  TurnGap,
  // analysis
  DegenerateInput,
  EmptyDistribution,
  ClassifierFailure,
  UnparseableGrade,
  EmbeddingProviderFailure,
  NoTranscripts,
  MalformedTranscript,
};

std::string_view to_string(ErrorCode code);

// True for the codes create_session reports as a configuration problem.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }

  // {"error": "<Code>", "message": "...", "detail": ...}
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace brainstorm
