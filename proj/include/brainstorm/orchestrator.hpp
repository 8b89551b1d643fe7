#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "brainstorm/a2a.hpp"
#include "brainstorm/domain.hpp"
#include "brainstorm/error.hpp"
#include "brainstorm/events.hpp"
#include "brainstorm/ids.hpp"
#include "brainstorm/personas.hpp"
#include "brainstorm/storage.hpp"
#include "brainstorm/strategy.hpp"

namespace brainstorm {

using namespace std::chrono_literals;

struct NotePosition {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const NotePosition&, const NotePosition&) = default;
};

// Board position of a persona's `slot`-th note in the session (0-based,
// counting all of that persona's notes). persona_a fills the left band,
// persona_b the right; collaborative notes of a separate-then-together
// session go to the center band. Each band has two columns of 12 rows;
// later pages shift down by 0.0035.
NotePosition assign_coordinates(const ValidatedConfig& config, PersonaId persona, PhaseKind kind,
                                int slot);

// Where a session stands, rebuilt purely from the stored actions.
struct SessionLoopState {
  int total_turns_taken = 0;
  // Count of each persona's actions, which is also its next note slot.
  std::map<PersonaId, int> next_note_slot;
  std::vector<Phase> phases;
  int active_phase = 0;

  bool finished() const;
};

SessionLoopState derive_loop_state(const ValidatedConfig& config,
                                   const std::vector<AgentAction>& history);

struct EngineOptions {
  std::chrono::milliseconds poll_interval = 1s;
  std::chrono::milliseconds max_wait = 120s;
  // Extra attempts, each with a fresh task, before the session fails.
  int retries = 2;
  // Sees the context of every turn before it is sent.
  std::function<void(const std::string& session_id, const ExecutionContext&)> context_observer;
};

struct TurnResult {
  AgentAction action;
  StickyNote note;
};

struct StopPolicy {
  std::optional<int> max_turns;
  std::optional<std::chrono::milliseconds> max_wall_clock;
  const std::atomic<bool>* cancel = nullptr;
};

enum class StopReason { Finished, MaxTurns, WallClock, Cancelled };

std::string_view to_string(StopReason r);

struct RunReport {
  SessionStatus status = SessionStatus::Created;
  int turns_executed = 0;
  StopReason reason = StopReason::Finished;
  Transcript transcript;
};

class SessionEngine {
 public:
  SessionEngine(Storage& storage, const PersonaRegistry& registry, a2a::A2AClient& client,
                EventHub& hub, IdSource& ids, TurnClock& clock, EngineOptions options = {});

  // Validates, stores overrides and phases, and returns the Created session.
  // Nothing is persisted when validation fails.
  Session create_session(SessionConfig config);

  // One turn: advance phase if due, pick the persona, build and send the
  // prompt, poll, persist, broadcast. Throws SessionComplete once done and
  // TurnExecutionFailed after the retries are spent (the session is then
  // Failed).
  TurnResult run_turn(const std::string& session_id);

  // Runs turns until the session finishes or the policy stops it. Resumes
  // from whatever is stored. Throws AlreadyComplete for a Complete session.
  RunReport run_session(const std::string& session_id, const StopPolicy& policy = {});

  // Requests that a running run_session stop before its next turn.
  void cancel(const std::string& session_id);

 private:
  std::mutex& session_mutex(const std::string& session_id);
  bool take_cancel(const std::string& session_id);
  std::string request_idea(const std::string& session_id, PersonaId persona,
                           const TurnPrompt& prompt, int script_position);
  [[noreturn]] void fail_session(Session& session, const Error& cause);

  Storage& storage_;
  const PersonaRegistry& registry_;
  a2a::A2AClient& client_;
  EventHub& hub_;
  IdSource& ids_;
  TurnClock& clock_;
  EngineOptions options_;

  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> session_locks_;
  std::set<std::string> cancelled_;
};

}  // namespace brainstorm
