#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace brainstorm {

using json = nlohmann::json;

// Millisecond-precision UTC instant.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

std::string format_timestamp(Timestamp t);  // 2025-01-01T00:00:00.000Z
Timestamp parse_timestamp(std::string_view text);

enum class PersonaId {
  Doctor,
  Nurse,
  Dentist,
  VREngineer,
  IOSEngineer,
  MobileEngineer,
  DesignPrototyper,
  UXResearcher,
  FrontendDesigner,
};

inline constexpr std::size_t kPersonaCount = 9;

inline constexpr std::array<PersonaId, kPersonaCount> kAllPersonas{
    PersonaId::Doctor,           PersonaId::Nurse,        PersonaId::Dentist,
    PersonaId::VREngineer,       PersonaId::IOSEngineer,  PersonaId::MobileEngineer,
    PersonaId::DesignPrototyper, PersonaId::UXResearcher, PersonaId::FrontendDesigner,
};

// Slugs ("doctor", "vr-engineer", ...) are the wire and CLI form.
std::string_view slug(PersonaId id);
std::string_view display_name(PersonaId id);
std::size_t index_of(PersonaId id);
// Accepts slugs, display names and enum spellings, case-insensitively.
// Throws Error(UnknownPersona).
PersonaId parse_persona(std::string_view text);

enum class IdeationSystem { Separate, Together, SeparateThenTogether };
enum class InteractionType { Collaborative };
enum class PhaseKind { SeparateIdeation, CollaborativeDiscussion };
enum class PhaseStatus { Pending, Active, Complete };
enum class SessionStatus { Created, Running, Complete, Failed };

std::string_view to_string(IdeationSystem v);
std::string_view to_string(InteractionType v);
std::string_view to_string(PhaseKind v);
std::string_view to_string(PhaseStatus v);
std::string_view to_string(SessionStatus v);

// Also accepts the hyphenated CLI spelling ("separate-then-together").
IdeationSystem parse_ideation_system(std::string_view text);

// Human-readable phase name used in prompts and UI banners.
std::string_view phase_name(PhaseKind kind);

struct Color {
  std::string name;
  std::string hex;  // "#rrggbb"

  friend bool operator==(const Color&, const Color&) = default;
};

struct SessionConfig {
  std::string topic;
  PersonaId persona_a = PersonaId::Doctor;
  PersonaId persona_b = PersonaId::VREngineer;
  IdeationSystem ideation_system = IdeationSystem::SeparateThenTogether;
  InteractionType interaction_type = InteractionType::Collaborative;
  int separate_turns = 10;
  int together_turns = 20;
  std::map<PersonaId, std::string> prompt_overrides;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

// A SessionConfig that passed validate_config. Only validate_config builds one.
class ValidatedConfig {
 public:
  const SessionConfig& get() const { return config_; }
  const SessionConfig* operator->() const { return &config_; }

  PersonaId partner_of(PersonaId p) const {
    return p == config_.persona_a ? config_.persona_b : config_.persona_a;
  }

 private:
  explicit ValidatedConfig(SessionConfig c) : config_(std::move(c)) {}
  friend ValidatedConfig validate_config(SessionConfig config);

  SessionConfig config_;
};

// Checks persona distinctness, override keys and the turn budgets that the
// chosen ideation system actually uses. Throws Error with DuplicatePersona,
// NonPositiveTurnBudget, OddTurnBudget or UnknownPersona.
ValidatedConfig validate_config(SessionConfig config);

struct Phase {
  int index = 0;
  PhaseKind kind = PhaseKind::SeparateIdeation;
  int turn_budget = 0;
  int turns_taken = 0;
  PhaseStatus status = PhaseStatus::Pending;

  friend bool operator==(const Phase&, const Phase&) = default;
};

struct AgentAction {
  std::string action_id;
  std::string session_id;
  PersonaId persona = PersonaId::Doctor;
  int phase_index = 0;
  int turn_number = 0;
  std::string idea_text;
  Timestamp created_at{};

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

struct StickyNote {
  std::string note_id;
  std::string action_id;
  Color color;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const StickyNote&, const StickyNote&) = default;
};

struct Session {
  std::string session_id;
  SessionConfig config;
  std::vector<Phase> phases;
  SessionStatus status = SessionStatus::Created;

  friend bool operator==(const Session&, const Session&) = default;
};

struct TranscriptEntry {
  AgentAction action;
  StickyNote note;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// Canonical export of one session: the session record plus every
// action/note pair in turn order.
struct Transcript {
  Session session;
  std::vector<TranscriptEntry> entries;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// Stable text form used for golden files and byte-identity checks.
std::string canonical_dump(const Transcript& t);

void to_json(json& j, PersonaId v);
void from_json(const json& j, PersonaId& v);
void to_json(json& j, IdeationSystem v);
void from_json(const json& j, IdeationSystem& v);
void to_json(json& j, InteractionType v);
void from_json(const json& j, InteractionType& v);
void to_json(json& j, PhaseKind v);
void from_json(const json& j, PhaseKind& v);
void to_json(json& j, PhaseStatus v);
void from_json(const json& j, PhaseStatus& v);
void to_json(json& j, SessionStatus v);
void from_json(const json& j, SessionStatus& v);
void to_json(json& j, const Color& v);
void from_json(const json& j, Color& v);
void to_json(json& j, const SessionConfig& v);
void from_json(const json& j, SessionConfig& v);
void to_json(json& j, const Phase& v);
void from_json(const json& j, Phase& v);
void to_json(json& j, const AgentAction& v);
void from_json(const json& j, AgentAction& v);
void to_json(json& j, const StickyNote& v);
void from_json(const json& j, StickyNote& v);
void to_json(json& j, const Session& v);
void from_json(const json& j, Session& v);
void to_json(json& j, const TranscriptEntry& v);
void from_json(const json& j, TranscriptEntry& v);
void to_json(json& j, const Transcript& v);
void from_json(const json& j, Transcript& v);

}  // namespace brainstorm
