#include "atgrpo/core.hpp"

#include <cmath>
#include <sstream>

namespace atgrpo {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::sudoku: return "sudoku";
    case EnvKind::plan_path: return "plan-path";
    case EnvKind::sokoban: return "sokoban";
  }
  return "?";
}

EnvKind parse_env_kind(std::string_view text) {
  if (text == "sudoku") return EnvKind::sudoku;
  if (text == "plan-path" || text == "plan_path") return EnvKind::plan_path;
  if (text == "sokoban") return EnvKind::sokoban;
  throw ConfigError("env", "unknown env '" + std::string(text) + "'");
}

std::string_view role_name(EnvKind kind, Role role) {
  if (role == Role::tool) return "tool";
  return kind == EnvKind::sudoku ? "reasoner" : "planner";
}

char move_symbol(Move m) {
  switch (m) {
    case Move::up: return 'U';
    case Move::down: return 'D';
    case Move::left: return 'L';
    case Move::right: return 'R';
  }
  return '?';
}

std::string describe(const ActionPayload& payload) {
  struct Visitor {
    std::string operator()(Move m) const { return std::string(1, move_symbol(m)); }
    std::string operator()(const FillStep& f) const {
      std::ostringstream os;
      os << '[' << f.row << ',' << f.col << ',' << f.value << ']';
      return os.str();
    }
    std::string operator()(const SubmitGrid&) const { return "submit"; }
  };
  return std::visit(Visitor{}, payload);
}

void CandidateMenu::require_offered(const MacroAction& action) const {
  if (action.menu_index >= entries.size() || entries[action.menu_index].payload != action.payload) {
    throw ContractViolation("action " + describe(action.payload) + " was not offered at menu index " +
                            std::to_string(action.menu_index));
  }
}

std::string_view to_string(TerminationCause cause) {
  switch (cause) {
    case TerminationCause::none: return "none";
    case TerminationCause::solved: return "solved";
    case TerminationCause::horizon: return "horizon";
    case TerminationCause::dead_end: return "dead-end";
  }
  return "?";
}

std::string_view to_string(MixerForm form) {
  return form == MixerForm::appendix ? "appendix" : "main-text";
}

MixerForm parse_mixer_form(std::string_view text) {
  if (text == "appendix") return MixerForm::appendix;
  if (text == "main-text" || text == "main_text") return MixerForm::main_text;
  throw ConfigError("mixer", "unknown mixer form '" + std::string(text) + "'");
}

RoleMapping RoleMapping::role_sharing(std::size_t n_agents) {
  return RoleMapping(std::vector<PolicyId>(n_agents, PolicyId{0}));
}

RoleMapping RoleMapping::role_specialized(std::size_t n_agents) {
  std::vector<PolicyId> ids(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) ids[i] = PolicyId{static_cast<std::uint32_t>(i)};
  return RoleMapping(std::move(ids));
}

ValidatedConfig validate_config(const GameConfig& cfg, const RoleMapping& mapping) {
  if (cfg.n_agents < 1) throw ConfigError("n_agents", "N must be at least 1");
  if (cfg.n_policies < 1) throw ConfigError("n_policies", "M must be at least 1");
  if (cfg.n_policies > cfg.n_agents) throw ConfigError("n_policies", "M exceeds N");
  if (cfg.turn_horizon < 1) throw ConfigError("turn_horizon", "turn_horizon (T) must be at least 1");
  if (cfg.branches < 1) throw ConfigError("branches", "branches (K) must be at least 1");
  if (cfg.n_envs < 1) throw ConfigError("n_envs", "n_envs (E) must be at least 1");
  if (cfg.total_steps < 1) throw ConfigError("total_steps", "total_steps (S) must be at least 1");
  if (!std::isfinite(cfg.sample_temperature) || cfg.sample_temperature < 0.0) {
    throw ConfigError("sample_temperature", "sample_temperature must be finite and >= 0");
  }
  if (!std::isfinite(cfg.mixer.alpha) || cfg.mixer.alpha < 0.0) {
    throw ConfigError("alpha", "alpha must be finite and >= 0");
  }
  if (mapping.n_agents() != cfg.n_agents) {
    throw ConfigError("role_mapping", "role mapping covers " + std::to_string(mapping.n_agents()) +
                                          " agents but N = " + std::to_string(cfg.n_agents));
  }
  std::vector<bool> used(cfg.n_policies, false);
  for (std::size_t i = 0; i < mapping.n_agents(); ++i) {
    const auto m = mapping.assignment()[i].value;
    if (m >= cfg.n_policies) {
      throw ConfigError("role_mapping", "agent " + std::to_string(i + 1) + " maps to policy " +
                                            std::to_string(m + 1) + " but M = " +
                                            std::to_string(cfg.n_policies));
    }
    used[m] = true;
  }
  for (std::size_t m = 0; m < used.size(); ++m) {
    if (!used[m]) throw ConfigError("role_mapping", "policy " + std::to_string(m + 1) + " has no agents");
  }
  return ValidatedConfig{cfg, mapping};
}

PolicyId map_role(const RoleMapping& mapping, AgentId agent) {
  if (agent.value >= mapping.n_agents()) {
    throw ContractViolation("agent " + std::to_string(agent.value + 1) + " out of range (N = " +
                            std::to_string(mapping.n_agents()) + ")");
  }
  return mapping.assignment()[agent.value];
}

}  // namespace atgrpo
