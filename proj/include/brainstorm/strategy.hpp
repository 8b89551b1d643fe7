#pragma once

#include <memory>
#include <string>
#include <vector>

#include "brainstorm/domain.hpp"

namespace brainstorm {

enum class StrategyKind { Separate, Collaborative, SeparateThenTogether };

StrategyKind strategy_kind_for(IdeationSystem system);
std::string_view to_string(StrategyKind kind);

// Everything one persona sees when taking a turn.
struct ExecutionContext {
  std::string topic;
  Phase phase;
  PersonaId persona = PersonaId::Doctor;
  PersonaId partner = PersonaId::Doctor;
  std::vector<AgentAction> visible_history;
  std::string phase_instructions;
  std::string turn_constraints;
};

// Turn-taking, context filtering and phase construction for one ideation
// system. Implementations are stateless.
class ConversationStrategy {
 public:
  virtual ~ConversationStrategy() = default;
  virtual StrategyKind kind() const = 0;
  virtual std::vector<Phase> build_phases(const ValidatedConfig& config) const = 0;

  // Own-actions-only in a separate phase, everything in a collaborative one.
  std::vector<AgentAction> filter_history(const Phase& phase, PersonaId persona,
                                          const std::vector<AgentAction>& full_history) const;

  ExecutionContext build_context(const ValidatedConfig& config, const Phase& phase,
                                 PersonaId persona,
                                 const std::vector<AgentAction>& full_history) const;
};

std::unique_ptr<ConversationStrategy> make_strategy(IdeationSystem system);

// Free-function forms of the strategy rules.
std::vector<Phase> build_phases(const ValidatedConfig& config);
std::vector<AgentAction> filter_history(const Phase& phase, PersonaId persona,
                                        const std::vector<AgentAction>& full_history);

// Global turn parity picks the actor: persona_a on even totals. Throws
// Error(SessionComplete) once the summed budget is used up.
PersonaId next_persona(const ValidatedConfig& config, int total_turns_taken);

bool should_advance(const Phase& phase);

std::string phase_instructions(PhaseKind kind);

// Remaining turns in the phase plus the one-idea-per-turn rule.
std::string turn_constraints(const Phase& phase);

int total_budget(const ValidatedConfig& config);

}  // namespace brainstorm
