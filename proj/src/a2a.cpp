#include "brainstorm/a2a.hpp"

#include <thread>

#include "brainstorm/error.hpp"
#include "brainstorm/http_client.hpp"
#include "brainstorm/ids.hpp"
#include "brainstorm/storage.hpp"

namespace brainstorm::a2a {

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::Submitted: return "submitted";
    case TaskState::Working: return "working";
    case TaskState::Completed: return "completed";
    case TaskState::Failed: return "failed";
  }
  return "unknown";
}

TaskState parse_task_state(std::string_view s) {
  for (auto st : {TaskState::Submitted, TaskState::Working, TaskState::Completed, TaskState::Failed}) {
    if (s == to_string(st)) return st;
  }
  throw Error(ErrorCode::MalformedEnvelope, "unknown task state: " + std::string(s));
}

std::string_view to_string(MountStatus s) {
  switch (s) {
    case MountStatus::Mounted: return "mounted";
    case MountStatus::Unmounting: return "unmounting";
    case MountStatus::Unmounted: return "unmounted";
  }
  return "unknown";
}

void to_json(json& j, const AgentMountInfo& v) {
  j = json{{"persona", v.persona},
           {"path", v.path},
           {"model", v.model},
           {"status", std::string(to_string(v.status))}};
}

void to_json(json& j, const RemountOutcome& v) {
  j = json{{"persona", v.persona},
           {"path", v.path},
           {"remounted", v.remounted},
           {"model", v.model}};
  if (!v.error.empty()) j["error"] = v.error;
}

void from_json(const json& j, RemountOutcome& v) {
  j.at("persona").get_to(v.persona);
  j.at("path").get_to(v.path);
  j.at("remounted").get_to(v.remounted);
  j.at("model").get_to(v.model);
  v.error = j.value("error", std::string{});
}

void to_json(json& j, const RemountReport& v) {
  j = json{{"outcomes", v.outcomes},
           {"drained_tasks", v.drained_tasks},
           {"force_failed_tasks", v.force_failed_tasks}};
}

void from_json(const json& j, RemountReport& v) {
  j.at("outcomes").get_to(v.outcomes);
  v.drained_tasks = j.value("drained_tasks", 0);
  v.force_failed_tasks = j.value("force_failed_tasks", 0);
}

std::string path_for(PersonaId persona) { return "/agents/" + std::string(slug(persona)); }

json make_request(const json& id, std::string_view method, const json& params) {
  return json{{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", params}};
}

json make_error(const json& id, int code, std::string_view message, const json& data) {
  json err{{"code", code}, {"message", message}};
  if (!data.is_null()) err["data"] = data;
  return json{{"jsonrpc", "2.0"}, {"id", id}, {"error", err}};
}

json make_result(const json& id, const json& result) {
  return json{{"jsonrpc", "2.0"}, {"id", id}, {"result", result}};
}

// ---- task table ------------------------------------------------------------

struct TaskRecord {
  TaskState state = TaskState::Submitted;
  std::optional<std::string> result_text;
  json error;
};

class TaskTable {
 public:
  std::string create() {
    std::lock_guard lock(mu_);
    std::string id = format_id(rng_(), rng_());
    tasks_.emplace(id, TaskRecord{});
    ++in_flight_;
    return id;
  }

  std::optional<TaskSnapshot> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(id);
    if (it == tasks_.end()) return std::nullopt;
    return TaskSnapshot{id, it->second.state, it->second.result_text, it->second.error};
  }

  void start(const std::string& id) {
    std::lock_guard lock(mu_);
    auto& t = tasks_.at(id);
    if (t.state == TaskState::Submitted) t.state = TaskState::Working;
  }

  // Terminal transitions are first-writer-wins; a force-failed task keeps
  // its failure even if the provider later returns.
  void complete(const std::string& id, std::string text) {
    finish(id, [&](TaskRecord& t) {
      t.state = TaskState::Completed;
      t.result_text = std::move(text);
    });
  }

  void fail(const std::string& id, json error) {
    finish(id, [&](TaskRecord& t) {
      t.state = TaskState::Failed;
      t.error = std::move(error);
    });
  }

  // Waits until every task is terminal; false on timeout.
  bool wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return in_flight_ == 0; });
  }

  int in_flight() const {
    std::lock_guard lock(mu_);
    return in_flight_;
  }

  int force_fail_all(const json& error) {
    std::lock_guard lock(mu_);
    int n = 0;
    for (auto& [id, t] : tasks_) {
      if (t.state == TaskState::Submitted || t.state == TaskState::Working) {
        t.state = TaskState::Failed;
        t.error = error;
        ++n;
      }
    }
    in_flight_ = 0;
    cv_.notify_all();
    return n;
  }

 private:
  template <typename F>
  void finish(const std::string& id, F&& apply) {
    std::lock_guard lock(mu_);
    auto& t = tasks_.at(id);
    if (t.state == TaskState::Completed || t.state == TaskState::Failed) return;
    if (t.state == TaskState::Submitted) t.state = TaskState::Working;
    apply(t);
    if (in_flight_ > 0) --in_flight_;
    cv_.notify_all();
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, TaskRecord> tasks_;
  int in_flight_ = 0;
  std::mt19937_64 rng_{std::random_device{}()};
};

struct Mount {
  PersonaId persona = PersonaId::Doctor;
  std::string path;
  ModelConfig model;
  std::string default_system_prompt;
  std::atomic<MountStatus> status{MountStatus::Unmounted};
  std::shared_ptr<CompletionProvider> provider;
  std::shared_ptr<TaskTable> tasks = std::make_shared<TaskTable>();

  AgentMountInfo info() const { return {persona, path, model, status.load()}; }
};

// ---- host ------------------------------------------------------------------

AgentHost::AgentHost(const PersonaRegistry& registry, Storage& storage)
    : AgentHost(registry, storage, Options{}) {}

AgentHost::AgentHost(const PersonaRegistry& registry, Storage& storage, Options options)
    : registry_(registry), storage_(storage), options_(std::move(options)) {}

AgentHost::~AgentHost() {
  // Worker threads only hold shared_ptrs, but give them a chance to finish so
  // no provider call outlives the process teardown.
  std::vector<std::shared_ptr<TaskTable>> tables;
  {
    std::shared_lock lock(routes_mu_);
    for (const auto& [path, m] : mounts_) tables.push_back(m->tasks);
    for (const auto& [path, old] : retired_) tables.insert(tables.end(), old.begin(), old.end());
  }
  for (auto& t : tables) t->wait_idle(options_.drain_timeout);
}

std::shared_ptr<Mount> AgentHost::make_mount(const Persona& persona) {
  auto m = std::make_shared<Mount>();
  m->persona = persona.id;
  m->path = path_for(persona.id);
  m->model = storage_.get_model_config(persona.id);
  m->default_system_prompt = persona.system_prompt;
  m->provider = std::shared_ptr<CompletionProvider>(options_.provider_factory(persona.id, m->model));
  m->status = MountStatus::Mounted;
  return m;
}

std::vector<AgentMountInfo> AgentHost::mount_all(std::span<const Persona> personas) {
  std::unique_lock lock(routes_mu_);
  for (const auto& p : personas) {
    if (mounts_.count(path_for(p.id))) {
      throw Error(ErrorCode::DuplicateMount, "already mounted: " + path_for(p.id),
                  json{{"path", path_for(p.id)}});
    }
  }
  std::vector<std::shared_ptr<Mount>> fresh;
  for (const auto& p : personas) fresh.push_back(make_mount(p));
  std::vector<AgentMountInfo> out;
  for (auto& m : fresh) {
    out.push_back(m->info());
    mounts_.emplace(m->path, std::move(m));
  }
  return out;
}

std::vector<AgentMountInfo> AgentHost::mount_all() {
  const auto& all = registry_.all();
  return mount_all(std::span<const Persona>(all.data(), all.size()));
}

std::vector<AgentMountInfo> AgentHost::mounts() const {
  std::shared_lock lock(routes_mu_);
  std::vector<AgentMountInfo> out;
  for (const auto& [path, m] : mounts_) out.push_back(m->info());
  return out;
}

bool AgentHost::remount_in_progress() const {
  std::lock_guard lock(const_cast<std::mutex&>(gate_mu_));
  return remounting_;
}

RemountReport AgentHost::remount_all(const ModelConfig& new_model, std::optional<PersonaId> only) {
  std::unique_lock remount_lock(remount_mu_, std::try_to_lock);
  if (!remount_lock.owns_lock()) {
    throw Error(ErrorCode::RemountInProgress, "another remount is running");
  }
  validate_model_config(new_model);
  if (options_.on_remount_locked) options_.on_remount_locked();

  std::vector<PersonaId> personas;
  {
    std::shared_lock lock(routes_mu_);
    for (const auto& [path, m] : mounts_) personas.push_back(m->persona);
  }
  for (PersonaId p : personas) {
    if (!only || *only == p) storage_.put_model_config(p, new_model);
  }
  if (only && std::find(personas.begin(), personas.end(), *only) == personas.end()) {
    storage_.put_model_config(*only, new_model);
  }

  // Hold back new submissions and let the ones already inside finish.
  {
    std::unique_lock gate(gate_mu_);
    remounting_ = true;
    gate_cv_.wait(gate, [&] { return submitting_ == 0; });
  }
  struct Reopen {
    AgentHost& host;
    ~Reopen() {
      {
        std::lock_guard gate(host.gate_mu_);
        host.remounting_ = false;
      }
      host.gate_cv_.notify_all();
    }
  } reopen{*this};

  std::vector<std::shared_ptr<Mount>> old;
  {
    std::shared_lock lock(routes_mu_);
    for (const auto& [path, m] : mounts_) old.push_back(m);
  }
  for (auto& m : old) m->status = MountStatus::Unmounting;

  RemountReport report;
  const auto deadline = std::chrono::steady_clock::now() + options_.drain_timeout;
  for (auto& m : old) {
    const int pending = m->tasks->in_flight();
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (m->tasks->wait_idle(std::max(left, std::chrono::milliseconds{0}))) {
      report.drained_tasks += pending;
    } else {
      const int forced = m->tasks->force_fail_all(
          Error(ErrorCode::TaskFailed, "agent remounted before the task finished",
                json{{"reason", "Remounted"}})
              .to_json());
      report.force_failed_tasks += forced;
      report.drained_tasks += pending - forced;
    }
  }

  std::unique_lock lock(routes_mu_);
  for (auto& m : old) {
    m->status = MountStatus::Unmounted;
    retired_[m->path].push_back(m->tasks);
    mounts_.erase(m->path);
  }
  for (PersonaId p : personas) {
    RemountOutcome outcome;
    outcome.persona = p;
    outcome.path = path_for(p);
    try {
      auto m = make_mount(registry_.get(p));
      outcome.model = m->model;
      outcome.remounted = true;
      mounts_.emplace(m->path, std::move(m));
    } catch (const std::exception& e) {
      outcome.model = storage_.get_model_config(p);
      outcome.error = e.what();
    }
    report.outcomes.push_back(std::move(outcome));
  }
  return report;
}

std::shared_ptr<Mount> AgentHost::find_mount(const std::string& path) const {
  std::shared_lock lock(routes_mu_);
  auto it = mounts_.find(path);
  return it == mounts_.end() ? nullptr : it->second;
}

std::optional<json> AgentHost::agent_card(const std::string& path) const {
  auto m = find_mount(path);
  if (!m) return std::nullopt;
  const auto& persona = registry_.get(m->persona);
  const auto& prompt = persona.system_prompt;
  return json{{"name", persona.display_name},
              {"description", prompt.substr(0, prompt.find('\n'))},
              {"url", m->path},
              {"version", "1.0.0"},
              {"capabilities", json{{"streaming", false}, {"pushNotifications", false}}},
              {"defaultInputModes", json::array({"text/plain"})},
              {"defaultOutputModes", json::array({"text/plain"})},
              {"skills", json::array({json{{"id", "brainstorm"},
                                           {"name", "Brainstorm"},
                                           {"description", "Proposes one idea per message."}}})}};
}

WireResponse AgentHost::handle(const std::string& path, const std::string& body) {
  auto reply = [](const json& envelope) { return WireResponse{200, envelope.dump()}; };

  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return reply(make_error(nullptr, rpc::kParseError, "Parse error", e.what()));
  }
  // Batches are not part of the agent protocol.
  if (!req.is_object()) return reply(make_error(nullptr, rpc::kInvalidRequest, "Invalid Request"));

  json id = nullptr;
  if (auto it = req.find("id"); it != req.end()) {
    if (it->is_string() || it->is_number_integer() || it->is_null()) id = *it;
    else return reply(make_error(nullptr, rpc::kInvalidRequest, "Invalid Request", "bad id"));
  }
  if (req.value("jsonrpc", json()) != "2.0") {
    return reply(make_error(id, rpc::kInvalidRequest, "Invalid Request", "jsonrpc must be \"2.0\""));
  }
  auto method_it = req.find("method");
  if (method_it == req.end() || !method_it->is_string()) {
    return reply(make_error(id, rpc::kInvalidRequest, "Invalid Request", "missing method"));
  }
  const json params = req.value("params", json::object());
  if (!params.is_object()) {
    return reply(make_error(id, rpc::kInvalidParams, "Invalid params", "params must be an object"));
  }
  const std::string method = *method_it;
  // Notifications are processed but never answered.
  const bool notification = !req.contains("id");
  auto answer = [&](WireResponse r) { return notification ? WireResponse{204, ""} : r; };

  if (method == rpc::kSendMethod) {
    // Waits out a running remount, then holds the gate open while submitting.
    {
      std::unique_lock gate(gate_mu_);
      if (!gate_cv_.wait_for(gate, options_.remount_wait, [&] { return !remounting_; })) {
        return answer(reply(make_error(id, rpc::kAgentUnavailable, "Agent unavailable during remount")));
      }
      ++submitting_;
    }
    struct Leave {
      AgentHost& host;
      ~Leave() {
        {
          std::lock_guard gate(host.gate_mu_);
          --host.submitting_;
        }
        host.gate_cv_.notify_all();
      }
    } leave{*this};

    auto mount = find_mount(path);
    if (!mount || mount->status != MountStatus::Mounted) {
      return answer(WireResponse{404, make_error(id, rpc::kAgentUnavailable, "No agent mounted at " + path).dump()});
    }
    return answer(reply(handle_send(*mount, params, id)));
  }
  if (method == rpc::kGetTaskMethod) return answer(reply(handle_get(path, params, id)));
  return answer(reply(make_error(id, rpc::kMethodNotFound, "Method not found", method)));
}

json AgentHost::handle_send(Mount& mount, const json& params, const json& id) {
  const auto msg_it = params.find("message");
  if (msg_it == params.end() || !msg_it->is_object()) {
    return make_error(id, rpc::kInvalidParams, "Invalid params", "params.message is required");
  }
  const json& message = *msg_it;
  std::string text;
  for (const auto& part : message.value("parts", json::array())) {
    if (part.value("kind", "") == "text") text += part.value("text", "");
  }
  if (text.empty()) {
    return make_error(id, rpc::kInvalidParams, "Invalid params", "message has no text part");
  }
  const json metadata = message.value("metadata", json::object());

  TurnPrompt prompt{metadata.value("system_prompt", mount.default_system_prompt), text};
  CompletionOptions options;
  if (metadata.contains("script_position") && metadata["script_position"].is_number_unsigned()) {
    options.script_position = metadata["script_position"].get<std::size_t>();
  }

  auto tasks = mount.tasks;
  auto provider = mount.provider;
  const std::string task_id = tasks->create();
  std::thread([tasks, provider, task_id, prompt, options] {
    tasks->start(task_id);
    try {
      tasks->complete(task_id, provider->complete(prompt, options));
    } catch (const Error& e) {
      tasks->fail(task_id, e.to_json());
    } catch (const std::exception& e) {
      tasks->fail(task_id, json{{"error", "ProviderFailure"}, {"message", e.what()}});
    }
  }).detach();

  return make_result(id, json{{"kind", "task"},
                              {"id", task_id},
                              {"contextId", metadata.value("session_id", task_id)},
                              {"status", json{{"state", to_string(TaskState::Submitted)}}}});
}

json AgentHost::handle_get(const std::string& path, const json& params, const json& id) {
  if (!params.contains("id") || !params["id"].is_string()) {
    return make_error(id, rpc::kInvalidParams, "Invalid params", "params.id is required");
  }
  const std::string task_id = params["id"];
  std::optional<TaskSnapshot> snap;
  {
    std::shared_lock lock(routes_mu_);
    if (auto it = mounts_.find(path); it != mounts_.end()) snap = it->second->tasks->get(task_id);
    if (!snap) {
      if (auto it = retired_.find(path); it != retired_.end()) {
        for (auto t = it->second.rbegin(); t != it->second.rend() && !snap; ++t) {
          snap = (*t)->get(task_id);
        }
      }
    }
  }
  if (!snap) return make_error(id, rpc::kTaskNotFound, "Task not found", task_id);

  json task{{"kind", "task"},
            {"id", snap->task_id},
            {"status", json{{"state", to_string(snap->state)}}}};
  if (snap->state == TaskState::Completed) {
    task["artifacts"] = json::array(
        {json{{"artifactId", snap->task_id + "-result"},
              {"parts", json::array({json{{"kind", "text"}, {"text", *snap->result_text}}})}}});
  } else if (snap->state == TaskState::Failed) {
    task["status"]["message"] =
        json{{"role", "agent"},
             {"parts", json::array({json{{"kind", "text"},
                                         {"text", snap->error.value("message", "task failed")}}})}};
    task["metadata"] = json{{"error", snap->error}};
  }
  return make_result(id, task);
}

// ---- client ----------------------------------------------------------------

WireResponse HttpTransport::post(const std::string& path, const std::string& body) {
  net::HttpRequest req;
  req.url = base_url_ + path;
  req.body = body;
  req.timeout = std::chrono::seconds{30};
  const auto resp = net::send(req);
  return {resp.status, resp.body};
}

json A2AClient::call(const std::string& path, std::string_view method, const json& params) {
  const json id = next_id_++;
  const auto resp = transport_.post(path, make_request(id, method, params).dump());
  json env;
  try {
    env = json::parse(resp.body);
  } catch (const json::parse_error&) {
    if (resp.status == 404) {
      throw Error(ErrorCode::MountNotFound, "no agent mounted at " + path, json{{"path", path}});
    }
    throw Error(ErrorCode::MalformedEnvelope, "response is not JSON (HTTP " +
                                                  std::to_string(resp.status) + ")");
  }
  if (resp.status == 404) {
    throw Error(ErrorCode::MountNotFound, "no agent mounted at " + path, json{{"path", path}});
  }
  if (!env.is_object() || env.value("jsonrpc", json()) != "2.0" || env.value("id", json()) != id) {
    throw Error(ErrorCode::MalformedEnvelope, "response envelope does not match the request",
                json{{"body", resp.body}});
  }
  if (auto err = env.find("error"); err != env.end()) {
    const int code = err->value("code", 0);
    const std::string message = err->value("message", "");
    switch (code) {
      case rpc::kTaskNotFound:
        throw Error(ErrorCode::UnknownTask, "unknown task", *err);
      case rpc::kAgentUnavailable:
        throw Error(ErrorCode::MountNotFound, message, *err);
      case rpc::kParseError:
      case rpc::kInvalidRequest:
      case rpc::kMethodNotFound:
      case rpc::kInvalidParams:
        throw Error(ErrorCode::MalformedEnvelope, message, *err);
      default:
        throw Error(ErrorCode::ProviderFailure, message, *err);
    }
  }
  return env.at("result");
}

std::string A2AClient::send_message(const std::string& path, const TurnPrompt& prompt,
                                    const json& metadata) {
  json meta = metadata.is_object() ? metadata : json::object();
  meta["system_prompt"] = prompt.system_prompt;
  const json message{{"kind", "message"},
                     {"role", "user"},
                     {"messageId", format_id(next_id_.load(), fnv1a64(prompt.user_prompt))},
                     {"parts", json::array({json{{"kind", "text"}, {"text", prompt.user_prompt}}})},
                     {"metadata", meta}};
  const json result = call(path, rpc::kSendMethod, json{{"message", message}});
  return result.at("id").get<std::string>();
}

TaskSnapshot A2AClient::get_task(const std::string& path, const std::string& task_id) {
  const json result = call(path, rpc::kGetTaskMethod, json{{"id", task_id}});
  TaskSnapshot snap;
  snap.task_id = result.at("id").get<std::string>();
  snap.state = parse_task_state(result.at("status").at("state").get<std::string>());
  if (snap.state == TaskState::Completed) {
    std::string text;
    for (const auto& artifact : result.value("artifacts", json::array())) {
      for (const auto& part : artifact.value("parts", json::array())) {
        if (part.value("kind", "") == "text") text += part.value("text", "");
      }
    }
    snap.result_text = std::move(text);
  } else if (snap.state == TaskState::Failed) {
    snap.error = result.value("metadata", json::object()).value("error", json::object());
  }
  return snap;
}

std::string A2AClient::poll_task(const std::string& path, const std::string& task_id,
                                 std::chrono::milliseconds interval,
                                 std::chrono::milliseconds max_wait) {
  const auto start = std::chrono::steady_clock::now();
  for (;;) {
    const TaskSnapshot snap = get_task(path, task_id);
    if (snap.state == TaskState::Completed) return snap.result_text.value_or("");
    if (snap.state == TaskState::Failed) {
      throw Error(ErrorCode::TaskFailed, snap.error.value("message", "task failed"), snap.error);
    }
    if (std::chrono::steady_clock::now() - start + interval > max_wait) {
      throw Error(ErrorCode::PollTimeout, "task " + task_id + " still " +
                                              std::string(to_string(snap.state)),
                  json{{"task_id", task_id}});
    }
    std::this_thread::sleep_for(interval);
  }
}

}  // namespace brainstorm::a2a
