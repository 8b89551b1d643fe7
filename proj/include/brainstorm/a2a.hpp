#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "brainstorm/domain.hpp"
#include "brainstorm/gateway.hpp"
#include "brainstorm/personas.hpp"

namespace brainstorm {
class Storage;
}

namespace brainstorm::a2a {

using namespace std::chrono_literals;

// JSON-RPC 2.0 error codes, plus the A2A task-not-found code.
namespace rpc {
inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kInternalError = -32603;
inline constexpr int kTaskNotFound = -32001;
inline constexpr int kAgentUnavailable = -32002;

inline constexpr std::string_view kSendMethod = "message/send";
inline constexpr std::string_view kGetTaskMethod = "tasks/get";
}  // namespace rpc

enum class TaskState { Submitted, Working, Completed, Failed };
enum class MountStatus { Mounted, Unmounting, Unmounted };

std::string_view to_string(TaskState s);
TaskState parse_task_state(std::string_view s);
std::string_view to_string(MountStatus s);

struct TaskSnapshot {
  std::string task_id;
  TaskState state = TaskState::Submitted;
  std::optional<std::string> result_text;  // present iff Completed
  json error;                              // set when Failed
};

struct AgentMountInfo {
  PersonaId persona = PersonaId::Doctor;
  std::string path;
  ModelConfig model;
  MountStatus status = MountStatus::Unmounted;
};

struct RemountOutcome {
  PersonaId persona = PersonaId::Doctor;
  std::string path;
  bool remounted = false;
  ModelConfig model;
  std::string error;
};

struct RemountReport {
  std::vector<RemountOutcome> outcomes;
  int drained_tasks = 0;
  int force_failed_tasks = 0;
};

void to_json(json& j, const AgentMountInfo& v);
void to_json(json& j, const RemountOutcome& v);
void to_json(json& j, const RemountReport& v);
void from_json(const json& j, RemountOutcome& v);
void from_json(const json& j, RemountReport& v);

// HTTP-level reply: status plus body (a JSON-RPC envelope, or empty).
struct WireResponse {
  int status = 200;
  std::string body;
};

// "/agents/<slug>"
std::string path_for(PersonaId persona);

class TaskTable;
struct Mount;

// Hosts one isolated agent per persona, each at its own path, speaking
// JSON-RPC 2.0 ("message/send", "tasks/get"). Every mount owns its task table
// and provider; nothing is shared between mounts.
class AgentHost {
 public:
  struct Options {
    ProviderFactory provider_factory = make_default_provider;
    // How long a remount waits for in-flight tasks before failing them.
    std::chrono::milliseconds drain_timeout = 10s;
    // How long message/send waits for a running remount to finish.
    std::chrono::milliseconds remount_wait = 30s;
    // Test seam, runs while the remount lock is held.
    std::function<void()> on_remount_locked;
  };

  AgentHost(const PersonaRegistry& registry, Storage& storage);
  AgentHost(const PersonaRegistry& registry, Storage& storage, Options options);
  ~AgentHost();

  AgentHost(const AgentHost&) = delete;
  AgentHost& operator=(const AgentHost&) = delete;

  // Reads each persona's model config from storage and mounts it. Throws
  // Error(DuplicateMount) if any persona is already mounted.
  std::vector<AgentMountInfo> mount_all(std::span<const Persona> personas);
  std::vector<AgentMountInfo> mount_all();  // every registered persona

  // Exclusive: persists `new_model` (for `only`, or every mounted persona),
  // drains and unmounts the current agents, then mounts again from storage.
  // A concurrent second caller gets Error(RemountInProgress).
  RemountReport remount_all(const ModelConfig& new_model,
                            std::optional<PersonaId> only = std::nullopt);

  // Serves one JSON-RPC request addressed to `path`.
  WireResponse handle(const std::string& path, const std::string& body);

  // Discovery document for a mounted path.
  std::optional<json> agent_card(const std::string& path) const;

  std::vector<AgentMountInfo> mounts() const;
  bool remount_in_progress() const;

 private:
  std::shared_ptr<Mount> make_mount(const Persona& persona);
  std::shared_ptr<Mount> find_mount(const std::string& path) const;
  json handle_send(Mount& mount, const json& params, const json& id);
  json handle_get(const std::string& path, const json& params, const json& id);

  const PersonaRegistry& registry_;
  Storage& storage_;
  Options options_;

  mutable std::shared_mutex routes_mu_;
  std::map<std::string, std::shared_ptr<Mount>> mounts_;
  // Task tables of unmounted generations stay pollable.
  std::map<std::string, std::vector<std::shared_ptr<TaskTable>>> retired_;

  std::mutex remount_mu_;
  std::mutex gate_mu_;
  std::condition_variable gate_cv_;
  bool remounting_ = false;
  int submitting_ = 0;
};

// Carries JSON-RPC envelopes to a host.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual WireResponse post(const std::string& path, const std::string& body) = 0;
};

// Hands envelopes straight to an in-process host.
class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(AgentHost& host) : host_(host) {}
  WireResponse post(const std::string& path, const std::string& body) override {
    return host_.handle(path, body);
  }

 private:
  AgentHost& host_;
};

// POSTs envelopes to base_url + path.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string base_url) : base_url_(std::move(base_url)) {}
  WireResponse post(const std::string& path, const std::string& body) override;

 private:
  std::string base_url_;
};

class A2AClient {
 public:
  explicit A2AClient(Transport& transport) : transport_(transport) {}

  // Returns the new task id (state Submitted). `metadata` rides along in the
  // message and may carry "system_prompt" and "script_position".
  std::string send_message(const std::string& path, const TurnPrompt& prompt,
                           const json& metadata = json::object());

  TaskSnapshot get_task(const std::string& path, const std::string& task_id);

  // Polls every `interval` until Completed (returns the text), Failed
  // (Error(TaskFailed)) or `max_wait` elapses (Error(PollTimeout)).
  std::string poll_task(const std::string& path, const std::string& task_id,
                        std::chrono::milliseconds interval = 1s,
                        std::chrono::milliseconds max_wait = 120s);

 private:
  json call(const std::string& path, std::string_view method, const json& params);

  Transport& transport_;
  std::atomic<std::uint64_t> next_id_{1};
};

// Envelope builders, exposed for conformance tests.
json make_request(const json& id, std::string_view method, const json& params);
json make_error(const json& id, int code, std::string_view message, const json& data = {});
json make_result(const json& id, const json& result);

}  // namespace brainstorm::a2a
