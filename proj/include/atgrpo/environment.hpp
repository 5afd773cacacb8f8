#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "atgrpo/core.hpp"
#include "atgrpo/plan_path.hpp"
#include "atgrpo/sokoban.hpp"
#include "atgrpo/sudoku.hpp"

namespace atgrpo {

using EnvState = std::variant<sudoku::State, plan_path::State, sokoban::State>;

struct InstanceSpec {
  EnvKind kind = EnvKind::plan_path;
  int difficulty = 1;
  int size = 0;  // 0 = difficulty default (plan-path side, sudoku N)
};

struct StepResult {
  EnvState next;
  TerminationFlag term;
};

EnvKind kind_of(const EnvState& s);
std::uint32_t turn_of(const EnvState& s);
TerminationFlag status_of(const EnvState& s);

/// Pure in (spec, seed); the instance is verified solvable before it is
/// returned.
EnvState generate(const InstanceSpec& spec, std::uint64_t seed);
inline EnvState generate(EnvKind kind, std::uint64_t seed, int difficulty) {
  return generate(InstanceSpec{kind, difficulty, 0}, seed);
}

Observation observe(const EnvState& s, Role role);
CandidateMenu legal_menu(const EnvState& s, Role role);
bool is_solved(const EnvState& s);

/// Width of every menu feature row for this environment (both role blocks).
std::size_t feature_dim(EnvKind kind);

/// One role's sub-step within a turn (Planner records, Tool executes).
EnvState act(const EnvState& s, Role role, const MacroAction& action);

/// Closes the turn and reports termination (solved, dead-end, or horizon at
/// turn T - 1).
StepResult finish_turn(const EnvState& s, std::size_t horizon);

/// Full transition: one action per agent in role order, then finish_turn.
/// Every action must come from the menu offered at its sub-step.
StepResult apply(const EnvState& s, std::span<const MacroAction> actions, std::size_t horizon);

/// Turn outcome if `action` decided it: a Tool candidate is executed from
/// `s`; a Planner candidate's proposal is executed as-is.
StepResult speculate(const EnvState& s, Role role, const MacroAction& action, std::size_t horizon);

std::string dump_instance(const EnvState& s);
EnvState load_instance(EnvKind kind, std::string_view text);

}  // namespace atgrpo
