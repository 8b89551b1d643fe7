#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "brainstorm/a2a.hpp"
#include "brainstorm/embedding.hpp"
#include "brainstorm/events.hpp"
#include "brainstorm/ids.hpp"
#include "brainstorm/orchestrator.hpp"
#include "brainstorm/personas.hpp"
#include "brainstorm/storage.hpp"

namespace brainstorm {

struct RuntimeOptions {
  std::string database = ":memory:";
  // Set for reproducible runs: seeded ids and a logical clock.
  std::optional<std::uint64_t> deterministic_seed;
  // Stored for every persona before the agents are mounted.
  std::optional<ModelConfig> model;
  EngineOptions engine;
  a2a::AgentHost::Options host;
  std::size_t event_buffer = EventHub::kDefaultBufferSize;
};

// Fixed epoch of the logical clock used by deterministic runs.
Timestamp logical_epoch();

// One process worth of engine: storage, personas, mounted agents reached over
// a loopback transport, event hub and session engine, plus background runs.
class Runtime {
 public:
  explicit Runtime(RuntimeOptions options = {});
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  Storage& storage() { return storage_; }
  const PersonaRegistry& registry() const { return registry_; }
  a2a::AgentHost& host() { return host_; }
  a2a::A2AClient& client() { return client_; }
  EventHub& hub() { return hub_; }
  SessionEngine& engine() { return engine_; }

  // Runs the session on a background thread. Throws UnknownSession,
  // AlreadyComplete or SessionAlreadyRunning.
  void start(const std::string& session_id);
  void cancel(const std::string& session_id);
  bool running(const std::string& session_id);
  // Blocks until the background run (if any) ends.
  void wait(const std::string& session_id);

 private:
  struct Run {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
    std::shared_ptr<std::atomic<bool>> cancel;
  };

  void reap_locked();

  RuntimeOptions options_;
  Storage storage_;
  HashedTermFrequencyEmbedder embedder_;
  PersonaRegistry registry_;
  a2a::AgentHost host_;
  a2a::LoopbackTransport transport_;
  a2a::A2AClient client_;
  EventHub hub_;
  std::unique_ptr<IdSource> ids_;
  std::unique_ptr<TurnClock> clock_;
  SessionEngine engine_;

  std::mutex runs_mu_;
  std::map<std::string, Run> runs_;
};

// Default personas, with any edited default prompts from storage applied.
PersonaRegistry load_registry(const Storage& storage, const EmbeddingProvider& embedder);

}  // namespace brainstorm
