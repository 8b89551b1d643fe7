#include "brainstorm/orchestrator.hpp"

#include "brainstorm/error.hpp"
#include "brainstorm/gateway.hpp"

namespace brainstorm {

namespace {

// Coordinates are kept in units of 1/10000 so the layout is exact.
constexpr int kUnit = 10000;
constexpr int kRows = 12;
constexpr int kTop = 500;
constexpr int kRowStep = 700;
constexpr int kPageStep = 35;

constexpr int kLeftBand[2] = {500, 2500};
constexpr int kRightBand[2] = {6000, 8000};
constexpr int kCenterA[2] = {3600, 4300};
constexpr int kCenterB[2] = {5000, 5700};

}  // namespace

NotePosition assign_coordinates(const ValidatedConfig& config, PersonaId persona, PhaseKind kind,
                                int slot) {
  const bool is_a = persona == config->persona_a;
  const int* band = is_a ? kLeftBand : kRightBand;
  int local = slot;
  if (kind == PhaseKind::CollaborativeDiscussion &&
      config->ideation_system == IdeationSystem::SeparateThenTogether) {
    band = is_a ? kCenterA : kCenterB;
    local = std::max(0, slot - config->separate_turns / 2);
  }
  const int row = local % kRows;
  const int column = (local / kRows) % 2;
  const int page = local / (2 * kRows);
  return {static_cast<double>(band[column]) / kUnit,
          static_cast<double>(kTop + row * kRowStep + page * kPageStep) / kUnit};
}

bool SessionLoopState::finished() const {
  for (const auto& p : phases) {
    if (p.turns_taken < p.turn_budget) return false;
  }
  return true;
}

SessionLoopState derive_loop_state(const ValidatedConfig& config,
                                   const std::vector<AgentAction>& history) {
  SessionLoopState state;
  state.phases = build_phases(config);
  state.total_turns_taken = static_cast<int>(history.size());
  for (const auto& a : history) {
    ++state.next_note_slot[a.persona];
    auto& phase = state.phases.at(static_cast<std::size_t>(a.phase_index));
    ++phase.turns_taken;
  }
  // The active phase is the last one with turns; a full phase stays active
  // until the next turn advances past it.
  state.active_phase = 0;
  for (std::size_t i = 0; i < state.phases.size(); ++i) {
    if (state.phases[i].turns_taken > 0) state.active_phase = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < state.phases.size(); ++i) {
    const int idx = static_cast<int>(i);
    auto& p = state.phases[i];
    if (idx < state.active_phase) p.status = PhaseStatus::Complete;
    else if (idx > state.active_phase) p.status = PhaseStatus::Pending;
    else p.status = PhaseStatus::Active;
  }
  if (state.finished()) {
    for (auto& p : state.phases) p.status = PhaseStatus::Complete;
  }
  return state;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Finished: return "finished";
    case StopReason::MaxTurns: return "max_turns";
    case StopReason::WallClock: return "wall_clock";
    case StopReason::Cancelled: return "cancelled";
  }
  return "unknown";
}

SessionEngine::SessionEngine(Storage& storage, const PersonaRegistry& registry,
                             a2a::A2AClient& client, EventHub& hub, IdSource& ids,
                             TurnClock& clock, EngineOptions options)
    : storage_(storage),
      registry_(registry),
      client_(client),
      hub_(hub),
      ids_(ids),
      clock_(clock),
      options_(std::move(options)) {}

Session SessionEngine::create_session(SessionConfig config) {
  const ValidatedConfig valid = validate_config(std::move(config));
  Session session;
  session.session_id = ids_.session_id(valid.get());
  session.config = valid.get();
  session.phases = build_phases(valid);
  session.status = SessionStatus::Created;
  storage_.create_session(session);
  for (const auto& [persona, text] : valid->prompt_overrides) {
    storage_.put_prompt(persona, PromptSource::Override, text, session.session_id);
  }
  return session;
}

std::mutex& SessionEngine::session_mutex(const std::string& session_id) {
  std::lock_guard lock(locks_mu_);
  auto& slot = session_locks_[session_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void SessionEngine::cancel(const std::string& session_id) {
  std::lock_guard lock(locks_mu_);
  cancelled_.insert(session_id);
}

bool SessionEngine::take_cancel(const std::string& session_id) {
  std::lock_guard lock(locks_mu_);
  return cancelled_.erase(session_id) > 0;
}

std::string SessionEngine::request_idea(const std::string& session_id, PersonaId persona,
                                        const TurnPrompt& prompt, int script_position) {
  const std::string path = a2a::path_for(persona);
  const json metadata{{"session_id", session_id}, {"script_position", script_position}};
  std::optional<Error> last;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    try {
      const std::string task = client_.send_message(path, prompt, metadata);
      std::string text = trim(client_.poll_task(path, task, options_.poll_interval, options_.max_wait));
      if (text.empty()) {
        throw Error(ErrorCode::ProviderRejection, "agent returned an empty idea",
                    json{{"reason", "EmptyCompletion"}});
      }
      return text;
    } catch (const Error& e) {
      last = e;
    }
  }
  throw Error(ErrorCode::TurnExecutionFailed,
              "turn failed after " + std::to_string(options_.retries + 1) + " attempts",
              json{{"persona", persona}, {"attempts", options_.retries + 1}, {"cause", last->to_json()}});
}

void SessionEngine::fail_session(Session& session, const Error& cause) {
  session.status = SessionStatus::Failed;
  storage_.update_session(session);
  hub_.broadcast(session_failed(session.session_id, cause.to_json()));
  throw cause;
}

TurnResult SessionEngine::run_turn(const std::string& session_id) {
  std::lock_guard session_lock(session_mutex(session_id));

  Session session = storage_.load_session(session_id);
  const ValidatedConfig config = validate_config(session.config);
  const auto history = storage_.load_history(session_id);
  SessionLoopState state = derive_loop_state(config, history);
  if (state.finished()) {
    throw Error(ErrorCode::SessionComplete, "session has no turns left",
                json{{"session_id", session_id}, {"total_turns", state.total_turns_taken}});
  }

  // Advance out of a full phase before taking the turn.
  Phase* phase = &state.phases.at(static_cast<std::size_t>(state.active_phase));
  if (should_advance(*phase)) {
    phase->status = PhaseStatus::Complete;
    const int from = state.active_phase++;
    phase = &state.phases.at(static_cast<std::size_t>(state.active_phase));
    phase->status = PhaseStatus::Active;
    hub_.broadcast(phase_transition(session_id, from, state.active_phase));
  }

  const PersonaId persona = next_persona(config, state.total_turns_taken);
  const auto strategy = make_strategy(config->ideation_system);
  const ExecutionContext ctx = strategy->build_context(config, *phase, persona, history);
  if (options_.context_observer) options_.context_observer(session_id, ctx);

  Persona speaker = registry_.get(persona);
  if (auto override_prompt = storage_.get_prompt(persona, PromptSource::Override, session_id)) {
    speaker.system_prompt = *override_prompt;
  }
  const TurnPrompt prompt = build_turn_prompt(ctx, speaker);

  session.phases = state.phases;
  session.status = SessionStatus::Running;
  const int slot = state.next_note_slot[persona];
  std::string idea;
  try {
    idea = request_idea(session_id, persona, prompt, slot);
  } catch (const Error& e) {
    fail_session(session, e);
  }

  const int turn = state.total_turns_taken;
  AgentAction action;
  action.action_id = ids_.action_id(session_id, turn);
  action.session_id = session_id;
  action.persona = persona;
  action.phase_index = phase->index;
  action.turn_number = turn;
  action.idea_text = std::move(idea);
  action.created_at = clock_.stamp(turn);

  StickyNote note;
  note.note_id = ids_.note_id(session_id, turn);
  note.action_id = action.action_id;
  note.color = color_for(persona, phase->kind, config.partner_of(persona), config->ideation_system);
  const NotePosition pos = assign_coordinates(config, persona, phase->kind, slot);
  note.x = pos.x;
  note.y = pos.y;

  storage_.append_action(action, note);
  hub_.broadcast(action_produced(session_id, action, note));

  ++phase->turns_taken;
  ++state.total_turns_taken;
  const bool done = state.finished();
  if (done) {
    for (auto& p : state.phases) p.status = PhaseStatus::Complete;
  }
  session.phases = state.phases;
  session.status = done ? SessionStatus::Complete : SessionStatus::Running;
  storage_.update_session(session);
  if (done) hub_.broadcast(session_complete(session_id, state.total_turns_taken));
  return {std::move(action), std::move(note)};
}

RunReport SessionEngine::run_session(const std::string& session_id, const StopPolicy& policy) {
  Session session = storage_.load_session(session_id);
  if (session.status == SessionStatus::Complete) {
    throw Error(ErrorCode::AlreadyComplete, "session is already complete",
                json{{"session_id", session_id}});
  }
  take_cancel(session_id);
  const auto started = std::chrono::steady_clock::now();
  RunReport report;
  for (;;) {
    const ValidatedConfig config = validate_config(session.config);
    if (derive_loop_state(config, storage_.load_history(session_id)).finished()) {
      report.reason = StopReason::Finished;
      break;
    }
    if ((policy.cancel && policy.cancel->load()) || take_cancel(session_id)) {
      report.reason = StopReason::Cancelled;
      break;
    }
    if (policy.max_turns && report.turns_executed >= *policy.max_turns) {
      report.reason = StopReason::MaxTurns;
      break;
    }
    if (policy.max_wall_clock && std::chrono::steady_clock::now() - started >= *policy.max_wall_clock) {
      report.reason = StopReason::WallClock;
      break;
    }
    run_turn(session_id);
    ++report.turns_executed;
  }
  session = storage_.load_session(session_id);
  if (session.status == SessionStatus::Created) {
    session.status = SessionStatus::Running;
    storage_.update_session(session);
  }
  report.status = session.status;
  report.transcript = storage_.load_transcript(session_id);
  return report;
}

}  // namespace brainstorm
