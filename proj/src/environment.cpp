#include "atgrpo/environment.hpp"

namespace atgrpo {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

EnvKind kind_of(const EnvState& s) {
  return std::visit(overloaded{[](const sudoku::State&) { return EnvKind::sudoku; },
                               [](const plan_path::State&) { return EnvKind::plan_path; },
                               [](const sokoban::State&) { return EnvKind::sokoban; }},
                    s);
}

std::uint32_t turn_of(const EnvState& s) {
  return std::visit([](const auto& st) { return st.turn; }, s);
}

TerminationFlag status_of(const EnvState& s) {
  return std::visit([](const auto& st) { return st.status; }, s);
}

EnvState generate(const InstanceSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case EnvKind::sudoku: return sudoku::generate(seed, spec.difficulty, spec.size > 0 ? spec.size : 4);
    case EnvKind::plan_path: return plan_path::generate(seed, spec.difficulty, spec.size);
    case EnvKind::sokoban:
      if (spec.size != 0 && spec.size != sokoban::kSide) throw ConfigError("grid_size", "sokoban grids are 6x6");
      return sokoban::generate(seed, spec.difficulty);
  }
  throw ConfigError("env", "unknown env");
}

Observation observe(const EnvState& s, Role role) {
  return std::visit(overloaded{[&](const sudoku::State& st) { return sudoku::observe(st, role); },
                               [&](const plan_path::State& st) { return plan_path::observe(st, role); },
                               [&](const sokoban::State& st) { return sokoban::observe(st, role); }},
                    s);
}

CandidateMenu legal_menu(const EnvState& s, Role role) {
  return std::visit(overloaded{[&](const sudoku::State& st) { return sudoku::legal_menu(st, role); },
                               [&](const plan_path::State& st) { return plan_path::legal_menu(st, role); },
                               [&](const sokoban::State& st) { return sokoban::legal_menu(st, role); }},
                    s);
}

bool is_solved(const EnvState& s) {
  return std::visit(overloaded{[](const sudoku::State& st) { return sudoku::is_solved(st); },
                               [](const plan_path::State& st) { return plan_path::is_solved(st); },
                               [](const sokoban::State& st) { return sokoban::is_solved(st); }},
                    s);
}

std::size_t feature_dim(EnvKind kind) {
  switch (kind) {
    case EnvKind::sudoku: return sudoku::kFeatureDim;
    case EnvKind::plan_path: return plan_path::kFeatureDim;
    case EnvKind::sokoban: return sokoban::kFeatureDim;
  }
  return 0;
}

EnvState act(const EnvState& s, Role role, const MacroAction& action) {
  return std::visit(
      overloaded{[&](const sudoku::State& st) -> EnvState { return sudoku::act(st, role, action); },
                 [&](const plan_path::State& st) -> EnvState { return plan_path::act(st, role, action); },
                 [&](const sokoban::State& st) -> EnvState { return sokoban::act(st, role, action); }},
      s);
}

StepResult finish_turn(const EnvState& s, std::size_t horizon) {
  EnvState next = std::visit(
      overloaded{[&](const sudoku::State& st) -> EnvState { return sudoku::finish_turn(st, horizon); },
                 [&](const plan_path::State& st) -> EnvState { return plan_path::finish_turn(st, horizon); },
                 [&](const sokoban::State& st) -> EnvState { return sokoban::finish_turn(st, horizon); }},
      s);
  const auto term = status_of(next);
  return {std::move(next), term};
}

StepResult apply(const EnvState& s, std::span<const MacroAction> actions, std::size_t horizon) {
  if (actions.size() != kRoleCount) {
    throw ContractViolation("apply expects one action per agent (" + std::to_string(kRoleCount) + "), got " +
                            std::to_string(actions.size()));
  }
  EnvState cur = s;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Role role = static_cast<Role>(i);
    legal_menu(cur, role).require_offered(actions[i]);
    cur = act(cur, role, actions[i]);
  }
  return finish_turn(cur, horizon);
}

StepResult speculate(const EnvState& s, Role role, const MacroAction& action, std::size_t horizon) {
  if (role == Role::tool) return finish_turn(act(s, role, action), horizon);
  EnvState executed = std::visit(
      overloaded{[&](const sudoku::State& st) -> EnvState { return sudoku::preview(st, action); },
                 [&](const plan_path::State& st) -> EnvState { return plan_path::preview(st, action); },
                 [&](const sokoban::State& st) -> EnvState { return sokoban::preview(st, action); }},
      s);
  return finish_turn(executed, horizon);
}

std::string dump_instance(const EnvState& s) {
  return std::visit([](const auto& st) {
    if constexpr (std::is_same_v<std::decay_t<decltype(st)>, sudoku::State>) return sudoku::dump(st);
    else if constexpr (std::is_same_v<std::decay_t<decltype(st)>, plan_path::State>) return plan_path::dump(st);
    else return sokoban::dump(st);
  }, s);
}

EnvState load_instance(EnvKind kind, std::string_view text) {
  switch (kind) {
    case EnvKind::sudoku: return sudoku::load(text);
    case EnvKind::plan_path: return plan_path::load(text);
    case EnvKind::sokoban: return sokoban::load(text);
  }
  throw ConfigError("env", "unknown env");
}

}  // namespace atgrpo
