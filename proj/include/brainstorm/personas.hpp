#pragma once

#include <array>
#include <string>
#include <vector>

#include "brainstorm/domain.hpp"
#include "brainstorm/embedding.hpp"

namespace brainstorm {

struct Persona {
  PersonaId id = PersonaId::Doctor;
  std::string display_name;
  std::string system_prompt;
  Color base_color;
  std::vector<double> embedding;  // unit norm
};

// Cosine similarity between every pair of registered personas, indexed in
// kAllPersonas order.
struct SimilarityMatrix {
  std::array<std::array<double, kPersonaCount>, kPersonaCount> entries{};

  double at(PersonaId a, PersonaId b) const { return entries[index_of(a)][index_of(b)]; }

  // 9 header columns (persona slugs), 9 rows, 6 decimal places.
  std::string to_csv() const;

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;
};

// The nine built-in personas. Immutable once built; with_prompt returns a new
// registry rather than editing this one.
class PersonaRegistry {
 public:
  // Default prompts come from assets/prompts/<slug>.txt.
  static PersonaRegistry defaults(const EmbeddingProvider& embedder);

  const Persona& get(PersonaId id) const { return personas_[index_of(id)]; }
  const std::array<Persona, kPersonaCount>& all() const { return personas_; }

  // Dot product of unit embeddings.
  double similarity(PersonaId a, PersonaId b) const;
  SimilarityMatrix similarity_matrix() const;

  PersonaRegistry with_prompt(PersonaId id, std::string prompt,
                              const EmbeddingProvider& embedder) const;

 private:
  std::array<Persona, kPersonaCount> personas_;
};

std::string default_prompt(PersonaId id);

// Embeds every persona's system prompt with `embedder` and fills the matrix.
SimilarityMatrix compute_similarity_matrix(const PersonaRegistry& registry,
                                           const EmbeddingProvider& embedder);

Color base_color(PersonaId id);

// Combined color for a pair, symmetric in its arguments. Pairs missing from
// the fixed blend table get the RGB average of the two base colors.
Color blend_color(PersonaId a, PersonaId b);

// Note color: base color, except collaborative-phase notes of a
// separate-then-together session, which get the pair's blend.
Color color_for(PersonaId persona, PhaseKind kind, PersonaId partner, IdeationSystem system);

}  // namespace brainstorm
