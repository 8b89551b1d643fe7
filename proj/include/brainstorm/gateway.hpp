#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "brainstorm/domain.hpp"
#include "brainstorm/strategy.hpp"

namespace brainstorm {

struct Persona;

enum class ProviderKind { ScriptedPlayback, RemoteChatAPI };

std::string_view to_string(ProviderKind kind);

struct ModelConfig {
  ProviderKind provider = ProviderKind::RemoteChatAPI;
  std::string model_name = "gpt-4.1";
  double temperature = 1.0;
  // ScriptedPlayback: path of the script fixture.
  std::string script_source;
  // RemoteChatAPI: base URL; empty means $BRAINSTORM_API_BASE or the default.
  std::string endpoint;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws Error(InvalidModelConfig) on negative/non-finite temperature or a
// scripted config without a script source.
void validate_model_config(const ModelConfig& config);

// What get_model_config returns before any put: gpt-4.1 at temperature 1.
ModelConfig default_model_config();

void to_json(json& j, ProviderKind v);
void from_json(const json& j, ProviderKind& v);
void to_json(json& j, const ModelConfig& v);
void from_json(const json& j, ModelConfig& v);

struct TurnPrompt {
  std::string system_prompt;
  std::string user_prompt;

  friend bool operator==(const TurnPrompt&, const TurnPrompt&) = default;
};

void to_json(json& j, const TurnPrompt& v);
void from_json(const json& j, TurnPrompt& v);

// Sections appear in a fixed order: topic, phase, turn constraints, partner,
// history, instructions. History lines read "[<display name>] <idea>".
TurnPrompt build_turn_prompt(const ExecutionContext& ctx, const Persona& persona);

inline constexpr std::string_view kNoPriorIdeas = "(no prior ideas)";

// Per-call extras. `script_position` lets a scripted backend pick the entry
// for the persona's n-th turn in a session instead of advancing its cursor,
// which keeps resumed sessions aligned with their script.
struct CompletionOptions {
  std::optional<std::size_t> script_position;
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // Returns trimmed, non-empty text or throws.
  virtual std::string complete(const TurnPrompt& prompt, const CompletionOptions& options = {}) = 0;
};

class ScriptedPlaybackProvider final : public CompletionProvider {
 public:
  explicit ScriptedPlaybackProvider(std::vector<std::string> entries)
      : entries_(std::move(entries)) {}
  std::string complete(const TurnPrompt& prompt, const CompletionOptions& options = {}) override;

  std::size_t cursor() const;

 private:
  std::vector<std::string> entries_;
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
};

struct RemoteEndpoint {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::chrono::milliseconds timeout{std::chrono::seconds{60}};
  std::chrono::milliseconds retry_backoff{std::chrono::seconds{2}};
};

// Resolves base URL and key from the config and $BRAINSTORM_API_BASE /
// $BRAINSTORM_API_KEY.
RemoteEndpoint endpoint_from_environment(const ModelConfig& config);

// OpenAI-style POST {base}/chat/completions with one system and one user
// message. Retries once after `retry_backoff` on a timeout.
class RemoteChatProvider final : public CompletionProvider {
 public:
  RemoteChatProvider(ModelConfig config, RemoteEndpoint endpoint);
  std::string complete(const TurnPrompt& prompt, const CompletionOptions& options = {}) override;

  // The exact JSON body sent for `prompt`.
  json request_body(const TurnPrompt& prompt) const;

 private:
  std::string attempt(const TurnPrompt& prompt);

  ModelConfig config_;
  RemoteEndpoint endpoint_;
};

// Script fixture: either a JSON array of strings (one shared script) or an
// object mapping persona slug -> array of strings.
struct ScriptFile {
  std::vector<std::string> shared;
  std::map<PersonaId, std::vector<std::string>> per_persona;

  // Entries for `persona`, falling back to the shared array.
  std::vector<std::string> entries_for(PersonaId persona) const;
};

ScriptFile load_script_file(const std::string& path);
ScriptFile parse_script(const json& doc);

using ProviderFactory =
    std::function<std::unique_ptr<CompletionProvider>(PersonaId, const ModelConfig&)>;

// ScriptedPlayback -> playback of the persona's script; RemoteChatAPI ->
// RemoteChatProvider with endpoint_from_environment.
std::unique_ptr<CompletionProvider> make_default_provider(PersonaId persona,
                                                          const ModelConfig& config);

std::string trim(std::string_view text);

}  // namespace brainstorm
