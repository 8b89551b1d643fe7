#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "brainstorm/error.hpp"
#include "brainstorm/runtime.hpp"

namespace testsupport {

using namespace brainstorm;
using namespace std::chrono_literals;

// Distinct, persona-tagged ideas so every idea can be traced to its author.
inline std::vector<std::string> script_for(PersonaId persona, int n, const std::string& tag = "") {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(std::string(display_name(persona)) + " idea " + std::to_string(i) + tag +
                  ": training with " + std::string(slug(persona)) + " tools");
  }
  return out;
}

// Every persona plays back its own script; unscripted personas get a long
// generated one.
inline ProviderFactory scripted_factory(std::map<PersonaId, std::vector<std::string>> scripts = {}) {
  return [scripts = std::move(scripts)](PersonaId persona, const ModelConfig&) {
    auto it = scripts.find(persona);
    return std::make_unique<ScriptedPlaybackProvider>(it != scripts.end() ? it->second
                                                                          : script_for(persona, 64));
  };
}

// Provider that sleeps before answering.
class DelayedProvider final : public CompletionProvider {
 public:
  DelayedProvider(std::chrono::milliseconds delay, std::string reply)
      : delay_(delay), reply_(std::move(reply)) {}
  std::string complete(const TurnPrompt&, const CompletionOptions&) override {
    std::this_thread::sleep_for(delay_);
    return reply_;
  }

 private:
  std::chrono::milliseconds delay_;
  std::string reply_;
};

// Provider that always throws the given error.
class FailingProvider final : public CompletionProvider {
 public:
  explicit FailingProvider(ErrorCode code) : code_(code) {}
  std::string complete(const TurnPrompt&, const CompletionOptions&) override {
    throw Error(code_, "stub failure");
  }

 private:
  ErrorCode code_;
};

inline RuntimeOptions scripted_options(std::uint64_t seed = 0, ProviderFactory factory = scripted_factory(),
                                       std::string db = ":memory:") {
  RuntimeOptions o;
  o.database = std::move(db);
  o.deterministic_seed = seed;
  o.engine.poll_interval = 1ms;
  o.engine.max_wait = 10s;
  o.host.provider_factory = std::move(factory);
  return o;
}

inline SessionConfig make_config(IdeationSystem system, PersonaId a = PersonaId::Doctor,
                                 PersonaId b = PersonaId::VREngineer, int separate = 10,
                                 int together = 20) {
  SessionConfig c;
  c.topic = "How can new technology improve training new medical professionals?";
  c.persona_a = a;
  c.persona_b = b;
  c.ideation_system = system;
  c.separate_turns = separate;
  c.together_turns = together;
  return c;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

template <typename Pred>
bool eventually(Pred pred, std::chrono::milliseconds timeout = 5s) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(2ms);
  }
  return pred();
}

}  // namespace testsupport
