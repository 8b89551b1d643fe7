#include "brainstorm/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ctime>

#include "brainstorm/error.hpp"

namespace brainstorm {

namespace {

struct PersonaNames {
  PersonaId id;
  std::string_view slug;
  std::string_view display;
  std::string_view enum_name;
};

constexpr std::array<PersonaNames, kPersonaCount> kPersonaNames{{
    {PersonaId::Doctor, "doctor", "Doctor", "Doctor"},
    {PersonaId::Nurse, "nurse", "Nurse", "Nurse"},
    {PersonaId::Dentist, "dentist", "Dentist", "Dentist"},
    {PersonaId::VREngineer, "vr-engineer", "VR Engineer", "VREngineer"},
    {PersonaId::IOSEngineer, "ios-engineer", "iOS Engineer", "IOSEngineer"},
    {PersonaId::MobileEngineer, "mobile-engineer", "Mobile Engineer", "MobileEngineer"},
    {PersonaId::DesignPrototyper, "design-prototyper", "Design Prototyper", "DesignPrototyper"},
    {PersonaId::UXResearcher, "ux-researcher", "UX Researcher", "UXResearcher"},
    {PersonaId::FrontendDesigner, "frontend-designer", "Frontend Designer", "FrontendDesigner"},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Generic enum <-> string table lookup.
template <typename E, std::size_t N>
E lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view text,
         std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  throw std::invalid_argument("unknown " + std::string(what) + ": " + std::string(text));
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "unknown";
}

constexpr std::array<std::pair<IdeationSystem, std::string_view>, 3> kSystems{{
    {IdeationSystem::Separate, "separate"},
    {IdeationSystem::Together, "together"},
    {IdeationSystem::SeparateThenTogether, "separate_then_together"},
}};
constexpr std::array<std::pair<InteractionType, std::string_view>, 1> kInteractions{{
    {InteractionType::Collaborative, "collaborative"},
}};
constexpr std::array<std::pair<PhaseKind, std::string_view>, 2> kPhaseKinds{{
    {PhaseKind::SeparateIdeation, "separate_ideation"},
    {PhaseKind::CollaborativeDiscussion, "collaborative_discussion"},
}};
constexpr std::array<std::pair<PhaseStatus, std::string_view>, 3> kPhaseStatuses{{
    {PhaseStatus::Pending, "pending"},
    {PhaseStatus::Active, "active"},
    {PhaseStatus::Complete, "complete"},
}};
constexpr std::array<std::pair<SessionStatus, std::string_view>, 4> kSessionStatuses{{
    {SessionStatus::Created, "created"},
    {SessionStatus::Running, "running"},
    {SessionStatus::Complete, "complete"},
    {SessionStatus::Failed, "failed"},
}};

}  // namespace

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto ms_total = t.time_since_epoch().count();
  auto secs = static_cast<std::time_t>(ms_total / 1000);
  auto ms = static_cast<int>(ms_total % 1000);
  if (ms < 0) {
    ms += 1000;
    secs -= 1;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  std::tm tm{};
  int ms = 0;
  const std::string s(text);
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon,
                            &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms);
  if (n != 7) throw std::invalid_argument("bad timestamp: " + s);
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t secs = timegm(&tm);
  return Timestamp{std::chrono::milliseconds{static_cast<std::int64_t>(secs) * 1000 + ms}};
}

std::string_view slug(PersonaId id) { return kPersonaNames[index_of(id)].slug; }
std::string_view display_name(PersonaId id) { return kPersonaNames[index_of(id)].display; }
std::size_t index_of(PersonaId id) { return static_cast<std::size_t>(id); }

PersonaId parse_persona(std::string_view text) {
  const std::string want = lower(text);
  for (const auto& p : kPersonaNames) {
    if (want == p.slug || want == lower(p.display) || want == lower(p.enum_name)) return p.id;
  }
  throw Error(ErrorCode::UnknownPersona, "unknown persona: " + std::string(text),
              json{{"persona", std::string(text)}});
}

std::string_view to_string(IdeationSystem v) { return name_of(kSystems, v); }
std::string_view to_string(InteractionType v) { return name_of(kInteractions, v); }
std::string_view to_string(PhaseKind v) { return name_of(kPhaseKinds, v); }
std::string_view to_string(PhaseStatus v) { return name_of(kPhaseStatuses, v); }
std::string_view to_string(SessionStatus v) { return name_of(kSessionStatuses, v); }

IdeationSystem parse_ideation_system(std::string_view text) {
  std::string s = lower(text);
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "collaborative") return IdeationSystem::Together;
  return lookup(kSystems, s, "ideation system");
}

std::string_view phase_name(PhaseKind kind) {
  return kind == PhaseKind::SeparateIdeation ? "Separate Ideation" : "Collaborative Discussion";
}

ValidatedConfig validate_config(SessionConfig config) {
  if (config.persona_a == config.persona_b) {
    throw Error(ErrorCode::DuplicatePersona, "a session needs two distinct personas",
                json{{"persona", slug(config.persona_a)}});
  }
  for (const auto& [persona, text] : config.prompt_overrides) {
    if (persona != config.persona_a && persona != config.persona_b) {
      throw Error(ErrorCode::UnknownPersona,
                  "prompt override for a persona outside the session: " +
                      std::string(slug(persona)),
                  json{{"persona", slug(persona)}});
    }
  }

  auto check_budget = [](int budget, std::string_view field) {
    if (budget <= 0) {
      throw Error(ErrorCode::NonPositiveTurnBudget,
                  std::string(field) + " must be positive, got " + std::to_string(budget),
                  json{{"field", field}, {"value", budget}});
    }
    if (budget % 2 != 0) {
      throw Error(ErrorCode::OddTurnBudget,
                  std::string(field) + " must be even, got " + std::to_string(budget),
                  json{{"field", field}, {"value", budget}});
    }
  };
  switch (config.ideation_system) {
    case IdeationSystem::Separate:
      check_budget(config.separate_turns, "separate_turns");
      break;
    case IdeationSystem::Together:
      check_budget(config.together_turns, "together_turns");
      break;
    case IdeationSystem::SeparateThenTogether:
      check_budget(config.separate_turns, "separate_turns");
      check_budget(config.together_turns, "together_turns");
      break;
  }
  return ValidatedConfig(std::move(config));
}

// ---- JSON ----------------------------------------------------------------

void to_json(json& j, PersonaId v) { j = std::string(slug(v)); }
void from_json(const json& j, PersonaId& v) { v = parse_persona(j.get<std::string>()); }

void to_json(json& j, IdeationSystem v) { j = std::string(to_string(v)); }
void from_json(const json& j, IdeationSystem& v) {
  v = parse_ideation_system(j.get<std::string>());
}
void to_json(json& j, InteractionType v) { j = std::string(to_string(v)); }
void from_json(const json& j, InteractionType& v) {
  v = lookup(kInteractions, j.get<std::string>(), "interaction type");
}
void to_json(json& j, PhaseKind v) { j = std::string(to_string(v)); }
void from_json(const json& j, PhaseKind& v) {
  v = lookup(kPhaseKinds, j.get<std::string>(), "phase kind");
}
void to_json(json& j, PhaseStatus v) { j = std::string(to_string(v)); }
void from_json(const json& j, PhaseStatus& v) {
  v = lookup(kPhaseStatuses, j.get<std::string>(), "phase status");
}
void to_json(json& j, SessionStatus v) { j = std::string(to_string(v)); }
void from_json(const json& j, SessionStatus& v) {
  v = lookup(kSessionStatuses, j.get<std::string>(), "session status");
}

void to_json(json& j, const Color& v) { j = json{{"name", v.name}, {"hex", v.hex}}; }
void from_json(const json& j, Color& v) {
  j.at("name").get_to(v.name);
  j.at("hex").get_to(v.hex);
}

void to_json(json& j, const SessionConfig& v) {
  json overrides = json::object();
  for (const auto& [persona, text] : v.prompt_overrides) overrides[std::string(slug(persona))] = text;
  j = json{{"topic", v.topic},
           {"persona_a", v.persona_a},
           {"persona_b", v.persona_b},
           {"ideation_system", v.ideation_system},
           {"interaction_type", v.interaction_type},
           {"separate_turns", v.separate_turns},
           {"together_turns", v.together_turns},
           {"prompt_overrides", overrides}};
}

void from_json(const json& j, SessionConfig& v) {
  j.at("topic").get_to(v.topic);
  j.at("persona_a").get_to(v.persona_a);
  j.at("persona_b").get_to(v.persona_b);
  j.at("ideation_system").get_to(v.ideation_system);
  v.interaction_type = j.value("interaction_type", json("collaborative")).get<InteractionType>();
  v.separate_turns = j.value("separate_turns", 0);
  v.together_turns = j.value("together_turns", 0);
  v.prompt_overrides.clear();
  if (auto it = j.find("prompt_overrides"); it != j.end() && it->is_object()) {
    for (const auto& [key, text] : it->items()) {
      v.prompt_overrides[parse_persona(key)] = text.get<std::string>();
    }
  }
}

void to_json(json& j, const Phase& v) {
  j = json{{"index", v.index},
           {"kind", v.kind},
           {"turn_budget", v.turn_budget},
           {"turns_taken", v.turns_taken},
           {"status", v.status}};
}
void from_json(const json& j, Phase& v) {
  j.at("index").get_to(v.index);
  j.at("kind").get_to(v.kind);
  j.at("turn_budget").get_to(v.turn_budget);
  j.at("turns_taken").get_to(v.turns_taken);
  j.at("status").get_to(v.status);
}

void to_json(json& j, const AgentAction& v) {
  j = json{{"action_id", v.action_id},
           {"session_id", v.session_id},
           {"persona", v.persona},
           {"phase_index", v.phase_index},
           {"turn_number", v.turn_number},
           {"idea_text", v.idea_text},
           {"created_at", format_timestamp(v.created_at)}};
}
void from_json(const json& j, AgentAction& v) {
  j.at("action_id").get_to(v.action_id);
  j.at("session_id").get_to(v.session_id);
  j.at("persona").get_to(v.persona);
  j.at("phase_index").get_to(v.phase_index);
  j.at("turn_number").get_to(v.turn_number);
  j.at("idea_text").get_to(v.idea_text);
  v.created_at = parse_timestamp(j.at("created_at").get<std::string>());
}

void to_json(json& j, const StickyNote& v) {
  j = json{{"note_id", v.note_id},
           {"action_id", v.action_id},
           {"color", v.color},
           {"x", v.x},
           {"y", v.y}};
}
void from_json(const json& j, StickyNote& v) {
  j.at("note_id").get_to(v.note_id);
  j.at("action_id").get_to(v.action_id);
  j.at("color").get_to(v.color);
  j.at("x").get_to(v.x);
  j.at("y").get_to(v.y);
}

void to_json(json& j, const Session& v) {
  j = json{{"session_id", v.session_id},
           {"config", v.config},
           {"phases", v.phases},
           {"status", v.status}};
}
void from_json(const json& j, Session& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("config").get_to(v.config);
  j.at("phases").get_to(v.phases);
  j.at("status").get_to(v.status);
}

void to_json(json& j, const TranscriptEntry& v) { j = json{{"action", v.action}, {"note", v.note}}; }
void from_json(const json& j, TranscriptEntry& v) {
  j.at("action").get_to(v.action);
  j.at("note").get_to(v.note);
}

void to_json(json& j, const Transcript& v) {
  j = json{{"session", v.session}, {"entries", v.entries}};
}
void from_json(const json& j, Transcript& v) {
  j.at("session").get_to(v.session);
  j.at("entries").get_to(v.entries);
}

std::string canonical_dump(const Transcript& t) { return json(t).dump(2) + "\n"; }

}  // namespace brainstorm
