#include "brainstorm/strategy.hpp"

#include "brainstorm/assets.hpp"
#include "brainstorm/error.hpp"

namespace brainstorm {

namespace {

Phase make_phase(int index, PhaseKind kind, int budget) {
  return Phase{index, kind, budget, 0, index == 0 ? PhaseStatus::Active : PhaseStatus::Pending};
}

class SeparateStrategy final : public ConversationStrategy {
 public:
  StrategyKind kind() const override { return StrategyKind::Separate; }
  std::vector<Phase> build_phases(const ValidatedConfig& config) const override {
    return {make_phase(0, PhaseKind::SeparateIdeation, config->separate_turns)};
  }
};

class CollaborativeStrategy final : public ConversationStrategy {
 public:
  StrategyKind kind() const override { return StrategyKind::Collaborative; }
  std::vector<Phase> build_phases(const ValidatedConfig& config) const override {
    return {make_phase(0, PhaseKind::CollaborativeDiscussion, config->together_turns)};
  }
};

class SeparateThenTogetherStrategy final : public ConversationStrategy {
 public:
  StrategyKind kind() const override { return StrategyKind::SeparateThenTogether; }
  std::vector<Phase> build_phases(const ValidatedConfig& config) const override {
    return {make_phase(0, PhaseKind::SeparateIdeation, config->separate_turns),
            make_phase(1, PhaseKind::CollaborativeDiscussion, config->together_turns)};
  }
};

}  // namespace

StrategyKind strategy_kind_for(IdeationSystem system) {
  switch (system) {
    case IdeationSystem::Separate: return StrategyKind::Separate;
    case IdeationSystem::Together: return StrategyKind::Collaborative;
    case IdeationSystem::SeparateThenTogether: return StrategyKind::SeparateThenTogether;
  }
  return StrategyKind::Separate;
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Separate: return "separate";
    case StrategyKind::Collaborative: return "collaborative";
    case StrategyKind::SeparateThenTogether: return "separate_then_together";
  }
  return "unknown";
}

std::unique_ptr<ConversationStrategy> make_strategy(IdeationSystem system) {
  switch (strategy_kind_for(system)) {
    case StrategyKind::Separate: return std::make_unique<SeparateStrategy>();
    case StrategyKind::Collaborative: return std::make_unique<CollaborativeStrategy>();
    case StrategyKind::SeparateThenTogether:
      return std::make_unique<SeparateThenTogetherStrategy>();
  }
  return nullptr;
}

std::vector<AgentAction> ConversationStrategy::filter_history(
    const Phase& phase, PersonaId persona, const std::vector<AgentAction>& full_history) const {
  return brainstorm::filter_history(phase, persona, full_history);
}

ExecutionContext ConversationStrategy::build_context(
    const ValidatedConfig& config, const Phase& phase, PersonaId persona,
    const std::vector<AgentAction>& full_history) const {
  ExecutionContext ctx;
  ctx.topic = config->topic;
  ctx.phase = phase;
  ctx.persona = persona;
  ctx.partner = config.partner_of(persona);
  ctx.visible_history = filter_history(phase, persona, full_history);
  ctx.phase_instructions = phase_instructions(phase.kind);
  ctx.turn_constraints = turn_constraints(phase);
  return ctx;
}

std::vector<Phase> build_phases(const ValidatedConfig& config) {
  return make_strategy(config->ideation_system)->build_phases(config);
}

std::vector<AgentAction> filter_history(const Phase& phase, PersonaId persona,
                                        const std::vector<AgentAction>& full_history) {
  if (phase.kind == PhaseKind::CollaborativeDiscussion) return full_history;
  std::vector<AgentAction> own;
  for (const auto& a : full_history) {
    if (a.persona == persona) own.push_back(a);
  }
  return own;
}

int total_budget(const ValidatedConfig& config) {
  int total = 0;
  for (const auto& p : build_phases(config)) total += p.turn_budget;
  return total;
}

PersonaId next_persona(const ValidatedConfig& config, int total_turns_taken) {
  if (total_turns_taken >= total_budget(config)) {
    throw Error(ErrorCode::SessionComplete, "all turns of the session are taken",
                json{{"total_turns_taken", total_turns_taken}});
  }
  return total_turns_taken % 2 == 0 ? config->persona_a : config->persona_b;
}

bool should_advance(const Phase& phase) { return phase.turns_taken == phase.turn_budget; }

std::string phase_instructions(PhaseKind kind) {
  return kind == PhaseKind::SeparateIdeation
             ? assets::text("templates/separate_ideation.txt")
             : assets::text("templates/collaborative_discussion.txt");
}

std::string turn_constraints(const Phase& phase) {
  const int remaining = phase.turn_budget - phase.turns_taken;
  return "This phase has " + std::to_string(remaining) + " of " +
         std::to_string(phase.turn_budget) +
         " turns remaining, including this one. Give exactly one idea in this turn.";
}

}  // namespace brainstorm
