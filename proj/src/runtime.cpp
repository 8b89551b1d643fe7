#include "brainstorm/runtime.hpp"

#include "brainstorm/error.hpp"

namespace brainstorm {

namespace {

std::unique_ptr<IdSource> make_ids(const RuntimeOptions& o) {
  if (o.deterministic_seed) return std::make_unique<DeterministicIdSource>(*o.deterministic_seed);
  return std::make_unique<RandomIdSource>();
}

std::unique_ptr<TurnClock> make_clock(const RuntimeOptions& o) {
  if (o.deterministic_seed) return std::make_unique<LogicalClock>(logical_epoch());
  return std::make_unique<SystemClock>();
}

}  // namespace

Timestamp logical_epoch() { return parse_timestamp("2025-01-01T00:00:00.000Z"); }

PersonaRegistry load_registry(const Storage& storage, const EmbeddingProvider& embedder) {
  PersonaRegistry registry = PersonaRegistry::defaults(embedder);
  for (PersonaId id : kAllPersonas) {
    const auto stored = storage.get_prompt(id, PromptSource::Default);
    if (stored && *stored != registry.get(id).system_prompt) {
      registry = registry.with_prompt(id, *stored, embedder);
    }
  }
  return registry;
}

Runtime::Runtime(RuntimeOptions options)
    : options_(std::move(options)),
      storage_(options_.database),
      registry_(load_registry(storage_, embedder_)),
      host_(registry_, storage_, options_.host),
      transport_(host_),
      client_(transport_),
      hub_(options_.event_buffer),
      ids_(make_ids(options_)),
      clock_(make_clock(options_)),
      engine_(storage_, registry_, client_, hub_, *ids_, *clock_, options_.engine) {
  if (options_.model) {
    validate_model_config(*options_.model);
    for (PersonaId id : kAllPersonas) storage_.put_model_config(id, *options_.model);
  }
  host_.mount_all();
}

Runtime::~Runtime() {
  std::map<std::string, Run> runs;
  {
    std::lock_guard lock(runs_mu_);
    runs.swap(runs_);
  }
  for (auto& [id, run] : runs) run.cancel->store(true);
  for (auto& [id, run] : runs) {
    if (run.thread.joinable()) run.thread.join();
  }
}

void Runtime::reap_locked() {
  for (auto it = runs_.begin(); it != runs_.end();) {
    if (it->second.done->load()) {
      if (it->second.thread.joinable()) it->second.thread.join();
      it = runs_.erase(it);
    } else {
      ++it;
    }
  }
}

void Runtime::start(const std::string& session_id) {
  const Session session = storage_.load_session(session_id);
  if (session.status == SessionStatus::Complete) {
    throw Error(ErrorCode::AlreadyComplete, "session is already complete",
                json{{"session_id", session_id}});
  }
  std::lock_guard lock(runs_mu_);
  reap_locked();
  if (runs_.count(session_id)) {
    throw Error(ErrorCode::SessionAlreadyRunning, "session is already running",
                json{{"session_id", session_id}});
  }
  Run run;
  run.done = std::make_shared<std::atomic<bool>>(false);
  run.cancel = std::make_shared<std::atomic<bool>>(false);
  run.thread = std::thread([this, session_id, done = run.done, cancel = run.cancel] {
    StopPolicy policy;
    policy.cancel = cancel.get();
    try {
      engine_.run_session(session_id, policy);
    } catch (const std::exception&) {
      // Failures are recorded on the session and broadcast by the engine.
    }
    done->store(true);
  });
  runs_.emplace(session_id, std::move(run));
}

void Runtime::cancel(const std::string& session_id) {
  std::lock_guard lock(runs_mu_);
  if (auto it = runs_.find(session_id); it != runs_.end()) it->second.cancel->store(true);
}

bool Runtime::running(const std::string& session_id) {
  std::lock_guard lock(runs_mu_);
  reap_locked();
  return runs_.count(session_id) > 0;
}

void Runtime::wait(const std::string& session_id) {
  std::thread t;
  {
    std::lock_guard lock(runs_mu_);
    auto it = runs_.find(session_id);
    if (it == runs_.end()) return;
    t = std::move(it->second.thread);
    runs_.erase(it);
  }
  if (t.joinable()) t.join();
}

}  // namespace brainstorm
