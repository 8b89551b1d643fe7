#include "brainstorm/personas.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "brainstorm/assets.hpp"

namespace brainstorm {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, kPersonaCount> kBaseColors{{
    {"blue", "#3b82f6"},    // Doctor
    {"yellow", "#facc15"},  // Nurse
    {"teal", "#14b8a6"},    // Dentist
    {"pink", "#ec4899"},    // VR Engineer
    {"orange", "#f97316"},  // iOS Engineer
    {"red", "#ef4444"},     // Mobile Engineer
    {"brown", "#a16207"},   // Design Prototyper
    {"gray", "#6b7280"},    // UX Researcher
    {"indigo", "#6366f1"},  // Frontend Designer
}};

struct BlendEntry {
  PersonaId a;
  PersonaId b;
  std::string_view name;
  std::string_view hex;
};

constexpr std::array<BlendEntry, 4> kBlendTable{{
    {PersonaId::Doctor, PersonaId::Nurse, "green", "#22c55e"},
    {PersonaId::Doctor, PersonaId::VREngineer, "purple", "#a855f7"},
    {PersonaId::Nurse, PersonaId::Dentist, "lime", "#84cc16"},
    {PersonaId::Dentist, PersonaId::IOSEngineer, "olive", "#808000"},
}};

std::array<int, 3> parse_hex(std::string_view hex) {
  std::array<int, 3> rgb{};
  for (int i = 0; i < 3; ++i) {
    rgb[i] = std::stoi(std::string(hex.substr(1 + 2 * i, 2)), nullptr, 16);
  }
  return rgb;
}

}  // namespace

std::string default_prompt(PersonaId id) {
  return assets::text("prompts/" + std::string(slug(id)) + ".txt");
}

Color base_color(PersonaId id) {
  const auto& [name, hex] = kBaseColors[index_of(id)];
  return {std::string(name), std::string(hex)};
}

Color blend_color(PersonaId a, PersonaId b) {
  for (const auto& e : kBlendTable) {
    if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) {
      return {std::string(e.name), std::string(e.hex)};
    }
  }
  // Order the pair so the result is symmetric.
  if (index_of(b) < index_of(a)) std::swap(a, b);
  const Color ca = base_color(a);
  const Color cb = base_color(b);
  const auto ra = parse_hex(ca.hex);
  const auto rb = parse_hex(cb.hex);
  char hex[8];
  std::snprintf(hex, sizeof hex, "#%02x%02x%02x", (ra[0] + rb[0]) / 2, (ra[1] + rb[1]) / 2,
                (ra[2] + rb[2]) / 2);
  return {ca.name + "+" + cb.name, hex};
}

Color color_for(PersonaId persona, PhaseKind kind, PersonaId partner, IdeationSystem system) {
  if (kind == PhaseKind::CollaborativeDiscussion &&
      system == IdeationSystem::SeparateThenTogether) {
    return blend_color(persona, partner);
  }
  return base_color(persona);
}

PersonaRegistry PersonaRegistry::defaults(const EmbeddingProvider& embedder) {
  PersonaRegistry reg;
  for (PersonaId id : kAllPersonas) {
    Persona& p = reg.personas_[index_of(id)];
    p.id = id;
    p.display_name = std::string(display_name(id));
    p.system_prompt = default_prompt(id);
    p.base_color = base_color(id);
    p.embedding = embedder.embed_one(p.system_prompt);
    l2_normalize(p.embedding);
  }
  return reg;
}

double PersonaRegistry::similarity(PersonaId a, PersonaId b) const {
  const auto& ea = get(a).embedding;
  const auto& eb = get(b).embedding;
  double dot = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) dot += ea[i] * eb[i];
  return std::clamp(dot, -1.0, 1.0);
}

SimilarityMatrix PersonaRegistry::similarity_matrix() const {
  SimilarityMatrix m;
  for (PersonaId a : kAllPersonas) {
    for (PersonaId b : kAllPersonas) {
      m.entries[index_of(a)][index_of(b)] = a == b ? 1.0 : similarity(a, b);
    }
  }
  return m;
}

PersonaRegistry PersonaRegistry::with_prompt(PersonaId id, std::string prompt,
                                             const EmbeddingProvider& embedder) const {
  PersonaRegistry copy = *this;
  Persona& p = copy.personas_[index_of(id)];
  p.system_prompt = std::move(prompt);
  p.embedding = embedder.embed_one(p.system_prompt);
  l2_normalize(p.embedding);
  return copy;
}

SimilarityMatrix compute_similarity_matrix(const PersonaRegistry& registry,
                                           const EmbeddingProvider& embedder) {
  std::array<std::vector<double>, kPersonaCount> vectors;
  for (const Persona& p : registry.all()) {
    auto v = embedder.embed_one(p.system_prompt);
    l2_normalize(v);
    vectors[index_of(p.id)] = std::move(v);
  }
  SimilarityMatrix m;
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    m.entries[i][i] = 1.0;
    for (std::size_t j = i + 1; j < kPersonaCount; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < vectors[i].size(); ++k) dot += vectors[i][k] * vectors[j][k];
      dot = std::clamp(dot, -1.0, 1.0);
      m.entries[i][j] = dot;
      m.entries[j][i] = dot;
    }
  }
  return m;
}

std::string SimilarityMatrix::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    out << (i ? "," : "") << slug(kAllPersonas[i]);
  }
  out << "\n";
  char buf[32];
  for (const auto& row : entries) {
    for (std::size_t j = 0; j < kPersonaCount; ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", row[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace brainstorm
