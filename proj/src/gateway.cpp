#include "brainstorm/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "brainstorm/error.hpp"
#include "brainstorm/http_client.hpp"
#include "brainstorm/personas.hpp"

namespace brainstorm {

namespace {

constexpr std::string_view kDefaultApiBase = "https://api.openai.com/v1";

std::string env_or(const char* name, std::string_view fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::string(fallback);
}

}  // namespace

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n\f\v");
  return std::string(text.substr(first, last - first + 1));
}

std::string_view to_string(ProviderKind kind) {
  return kind == ProviderKind::ScriptedPlayback ? "scripted_playback" : "remote_chat_api";
}

void validate_model_config(const ModelConfig& config) {
  if (!std::isfinite(config.temperature) || config.temperature < 0.0) {
    throw Error(ErrorCode::InvalidModelConfig, "temperature must be a non-negative number",
                json{{"temperature", config.temperature}});
  }
  if (config.provider == ProviderKind::ScriptedPlayback && config.script_source.empty()) {
    throw Error(ErrorCode::InvalidModelConfig, "scripted playback needs a script source");
  }
}

ModelConfig default_model_config() { return ModelConfig{}; }

void to_json(json& j, ProviderKind v) { j = std::string(to_string(v)); }
void from_json(const json& j, ProviderKind& v) {
  const auto s = j.get<std::string>();
  if (s == "scripted_playback") {
    v = ProviderKind::ScriptedPlayback;
  } else if (s == "remote_chat_api") {
    v = ProviderKind::RemoteChatAPI;
  } else {
    throw Error(ErrorCode::InvalidModelConfig, "unknown provider: " + s);
  }
}

void to_json(json& j, const ModelConfig& v) {
  j = json{{"provider", v.provider},
           {"model_name", v.model_name},
           {"temperature", v.temperature},
           {"script_source", v.script_source},
           {"endpoint", v.endpoint}};
}

void from_json(const json& j, ModelConfig& v) {
  v = ModelConfig{};
  if (j.contains("provider")) j.at("provider").get_to(v.provider);
  j.at("model_name").get_to(v.model_name);
  j.at("temperature").get_to(v.temperature);
  v.script_source = j.value("script_source", std::string{});
  v.endpoint = j.value("endpoint", std::string{});
}

void to_json(json& j, const TurnPrompt& v) {
  j = json{{"system_prompt", v.system_prompt}, {"user_prompt", v.user_prompt}};
}
void from_json(const json& j, TurnPrompt& v) {
  j.at("system_prompt").get_to(v.system_prompt);
  j.at("user_prompt").get_to(v.user_prompt);
}

TurnPrompt build_turn_prompt(const ExecutionContext& ctx, const Persona& persona) {
  std::ostringstream user;
  user << "Topic: " << ctx.topic << "\n\n";
  user << "Current phase: " << phase_name(ctx.phase.kind) << "\n\n";
  user << "Turn constraints: " << ctx.turn_constraints << "\n\n";
  user << "Partner: " << display_name(ctx.partner);
  if (ctx.phase.kind == PhaseKind::SeparateIdeation) {
    user << " (working separately; their ideas are not shown to you)";
  }
  user << "\n\n";
  user << "Conversation history:\n";
  if (ctx.visible_history.empty()) {
    user << kNoPriorIdeas << "\n";
  } else {
    for (const auto& a : ctx.visible_history) {
      user << "[" << display_name(a.persona) << "] " << a.idea_text << "\n";
    }
  }
  user << "\n";
  user << "Instructions: " << ctx.phase_instructions << "\n";
  return TurnPrompt{persona.system_prompt, user.str()};
}

std::string ScriptedPlaybackProvider::complete(const TurnPrompt&,
                                               const CompletionOptions& options) {
  std::size_t position = 0;
  {
    std::lock_guard lock(mu_);
    position = options.script_position.value_or(cursor_);
    if (position >= entries_.size()) {
      throw Error(ErrorCode::ScriptExhausted,
                  "script has " + std::to_string(entries_.size()) + " entries, asked for #" +
                      std::to_string(position + 1),
                  json{{"position", position}, {"size", entries_.size()}});
    }
    cursor_ = position + 1;
  }
  auto text = trim(entries_[position]);
  if (text.empty()) {
    throw Error(ErrorCode::ProviderRejection, "script entry is blank",
                json{{"reason", "EmptyCompletion"}, {"position", position}});
  }
  return text;
}

std::size_t ScriptedPlaybackProvider::cursor() const {
  std::lock_guard lock(mu_);
  return cursor_;
}

RemoteEndpoint endpoint_from_environment(const ModelConfig& config) {
  RemoteEndpoint ep;
  ep.base_url = config.endpoint.empty() ? env_or("BRAINSTORM_API_BASE", kDefaultApiBase)
                                        : config.endpoint;
  while (!ep.base_url.empty() && ep.base_url.back() == '/') ep.base_url.pop_back();
  ep.api_key = env_or("BRAINSTORM_API_KEY", "");
  return ep;
}

RemoteChatProvider::RemoteChatProvider(ModelConfig config, RemoteEndpoint endpoint)
    : config_(std::move(config)), endpoint_(std::move(endpoint)) {}

json RemoteChatProvider::request_body(const TurnPrompt& prompt) const {
  return json{{"model", config_.model_name},
              {"temperature", config_.temperature},
              {"messages",
               json::array({json{{"role", "system"}, {"content", prompt.system_prompt}},
                            json{{"role", "user"}, {"content", prompt.user_prompt}}})}};
}

std::string RemoteChatProvider::attempt(const TurnPrompt& prompt) {
  net::HttpRequest req;
  req.url = endpoint_.base_url + "/chat/completions";
  req.timeout = endpoint_.timeout;
  if (!endpoint_.api_key.empty()) req.headers["Authorization"] = "Bearer " + endpoint_.api_key;
  req.body = request_body(prompt).dump();

  const auto resp = net::send(req);
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::ProviderRejection,
                "chat completion returned HTTP " + std::to_string(resp.status),
                json{{"status", resp.status}, {"body", resp.body}});
  }
  std::string content;
  try {
    const auto doc = json::parse(resp.body);
    const auto& message = doc.at("choices").at(0).at("message");
    if (message.contains("content") && message["content"].is_string()) {
      content = message["content"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderRejection, std::string("malformed completion: ") + e.what(),
                json{{"status", resp.status}, {"body", resp.body}});
  }
  auto text = trim(content);
  if (text.empty()) {
    throw Error(ErrorCode::ProviderRejection, "provider returned an empty completion",
                json{{"reason", "EmptyCompletion"}, {"status", resp.status}, {"body", resp.body}});
  }
  return text;
}

std::string RemoteChatProvider::complete(const TurnPrompt& prompt, const CompletionOptions&) {
  try {
    return attempt(prompt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProviderTimeout) throw;
  }
  std::this_thread::sleep_for(endpoint_.retry_backoff);
  return attempt(prompt);
}

std::vector<std::string> ScriptFile::entries_for(PersonaId persona) const {
  if (auto it = per_persona.find(persona); it != per_persona.end()) return it->second;
  return shared;
}

ScriptFile parse_script(const json& doc) {
  ScriptFile script;
  if (doc.is_array()) {
    script.shared = doc.get<std::vector<std::string>>();
  } else if (doc.is_object()) {
    for (const auto& [key, entries] : doc.items()) {
      script.per_persona[parse_persona(key)] = entries.get<std::vector<std::string>>();
    }
  } else {
    throw Error(ErrorCode::InvalidModelConfig,
                "script must be an array of strings or an object of persona arrays");
  }
  return script;
}

ScriptFile load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidModelConfig, "cannot read script file: " + path);
  try {
    return parse_script(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidModelConfig,
                "script file " + path + " is not valid JSON: " + e.what());
  }
}

std::unique_ptr<CompletionProvider> make_default_provider(PersonaId persona,
                                                          const ModelConfig& config) {
  validate_model_config(config);
  if (config.provider == ProviderKind::ScriptedPlayback) {
    return std::make_unique<ScriptedPlaybackProvider>(
        load_script_file(config.script_source).entries_for(persona));
  }
  return std::make_unique<RemoteChatProvider>(config, endpoint_from_environment(config));
}

}  // namespace brainstorm
