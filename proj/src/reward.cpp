#include "atgrpo/reward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace atgrpo {
namespace {

template <class S>
const S& as(const EnvState& s, EnvKind env) {
  if (const auto* p = std::get_if<S>(&s)) return *p;
  throw ContractViolation("state does not belong to env " + std::string(to_string(env)));
}

double indicator(bool b) { return b ? 1.0 : 0.0; }

const Move* move_of(const MacroAction& a) { return a.malformed ? nullptr : std::get_if<Move>(&a.payload); }

LocalComponents plan_path_scores(Role role, const plan_path::State& prev, const MacroAction& action,
                                 const plan_path::State& next) {
  const Move* m = move_of(action);
  const double fmt = indicator(m != nullptr);
  if (role == Role::planner) {
    const auto& grid = prev.map->grid;
    const double leg = indicator(m && grid.passable(step(prev.position, *m)));
    const double sp = m ? sp_next(grid, prev.position, prev.map->goal, *m) : 0.0;
    return {{{"fmt", fmt}, {"leg", leg}, {"sp", sp}}, 1};
  }
  const double exec = indicator(m && next.last_action_legal);
  const double shape = indicator(next.potential >= prev.potential);
  return {{{"fmt", fmt}, {"exec", exec}, {"shape", shape}}, 1};
}

LocalComponents sokoban_scores(Role role, const sokoban::State& prev, const MacroAction& action,
                               const sokoban::State& next) {
  const Move* m = move_of(action);
  const double fmt = indicator(m != nullptr);
  if (role == Role::planner) {
    const double leg = indicator(m && sokoban::move_legal(prev, *m));
    const double dlk = m ? sokoban::corner_deadlock_free(prev, *m) : 0.0;
    return {{{"fmt", fmt}, {"leg", leg}, {"dlk", dlk}}, 1};
  }
  const double exec = indicator(m && next.last_action_legal);
  const double pot = indicator(sokoban::box_goal_potential(next) >= sokoban::box_goal_potential(prev));
  return {{{"fmt", fmt}, {"exec", exec}, {"pot", pot}}, 1};
}

LocalComponents sudoku_scores(Role role, const sudoku::State& prev, const MacroAction& action,
                              const sudoku::State& next) {
  const int n = prev.size;
  const FillStep* fill = action.malformed ? nullptr : std::get_if<FillStep>(&action.payload);
  const bool submit = !action.malformed && std::holds_alternative<SubmitGrid>(action.payload);
  const bool fill_in_range = fill && fill->row >= 0 && fill->col >= 0 && fill->row < n && fill->col < n &&
                             fill->value >= 1 && fill->value <= n;
  const bool fill_consistent = fill_in_range && !sudoku::conflicts(prev.grid_now, n, fill->row, fill->col, fill->value);
  if (role == Role::planner) {
    const double fmt = indicator(fill_in_range || submit);
    const double legal = indicator((fill_consistent || submit) && !sudoku::has_duplicates(next.grid_now, n));
    int newly_filled = 0;
    for (std::size_t i = 0; i < prev.grid_now.size(); ++i)
      newly_filled += (prev.grid_now[i] == 0 && next.grid_now[i] != 0) ? 1 : 0;
    const double prog = static_cast<double>(newly_filled) / static_cast<double>(n * n);
    return {{{"fmt", fmt}, {"legal", legal}, {"prog", prog}}, 1};
  }
  const double fmt = indicator(fill_in_range);
  const double exec = indicator(fill_in_range && next.last_exec_ok);
  double san = indicator(fill_consistent);
  if (action.malformed) {
    san = 0.0;
  } else if (fill == nullptr) {
    san = 1.0;  // no edit applied, so no edit can break a constraint
  }
  return {{{"fmt", fmt}, {"exec", exec}, {"san", san}}, 1};
}

}  // namespace

RewardSchedule preset_schedule(EnvKind env) {
  switch (env) {
    case EnvKind::sudoku:
      return {env, 0.60, {{"fmt", 0.15}, {"legal", 0.55}, {"prog", 0.30}}, {{"fmt", 0.10}, {"exec", 0.20}, {"san", 0.70}}};
    case EnvKind::plan_path:
      return {env, 0.50, {{"fmt", 0.20}, {"leg", 0.40}, {"sp", 0.40}}, {{"fmt", 0.10}, {"exec", 0.40}, {"shape", 0.50}}};
    case EnvKind::sokoban:
      return {env, 0.40, {{"fmt", 0.10}, {"leg", 0.45}, {"dlk", 0.45}}, {{"fmt", 0.10}, {"exec", 0.30}, {"pot", 0.60}}};
  }
  throw ConfigError("env", "unknown env");
}

void validate_schedule(const RewardSchedule& schedule) {
  if (!(schedule.lambda >= 0.0 && schedule.lambda <= 1.0)) throw ConfigError("lambda", "lambda must lie in [0, 1]");
  for (Role role : {Role::planner, Role::tool}) {
    const auto& coeffs = schedule.coefficients(role);
    const auto preset = preset_schedule(schedule.env).coefficients(role);
    if (coeffs.size() != preset.size()) throw ConfigError("coefficients", "coefficient table has wrong length");
    double sum = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i].name != preset[i].name) {
        throw ConfigError("coefficients", "expected coefficient '" + preset[i].name + "', got '" + coeffs[i].name + "'");
      }
      if (!(coeffs[i].weight >= 0.0)) throw ConfigError("coefficients", "coefficients must be non-negative");
      sum += coeffs[i].weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError("coefficients", std::string(role_name(schedule.env, role)) + " coefficients sum to " +
                                            std::to_string(sum) + ", not 1");
    }
  }
}

std::string format_schedule(const RewardSchedule& schedule) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "env=" << to_string(schedule.env) << " lambda=" << schedule.lambda << '\n';
  for (Role role : {Role::planner, Role::tool}) {
    os << role_name(schedule.env, role) << ':';
    for (const auto& c : schedule.coefficients(role)) os << ' ' << c.name << '=' << c.weight;
    os << '\n';
  }
  return os.str();
}

double LocalComponents::score(std::string_view name) const {
  for (const auto& s : scores)
    if (s.name == name) return s.value;
  throw std::out_of_range("no component score named " + std::string(name));
}

double team_reward(EnvKind env, const EnvState& prev, const EnvState& next, TerminationFlag term) {
  switch (env) {
    case EnvKind::plan_path: {
      const auto& p = as<plan_path::State>(prev, env);
      const auto& n = as<plan_path::State>(next, env);
      if (plan_path::is_solved(n)) return 1.0;
      return std::max(0.0, static_cast<double>(p.d_now - n.d_now) / static_cast<double>(n.d_init));
    }
    case EnvKind::sokoban: {
      as<sokoban::State>(prev, env);
      const auto& n = as<sokoban::State>(next, env);
      if (n.n_boxes == 0) throw ContractViolation("sokoban team reward undefined with zero boxes");
      if (sokoban::is_solved(n)) return 1.0;
      return static_cast<double>(n.boxes_on_goal) / static_cast<double>(n.n_boxes);
    }
    case EnvKind::sudoku:
      as<sudoku::State>(prev, env);
      as<sudoku::State>(next, env);
      return (term.done && term.cause == TerminationCause::solved) ? 1.0 : 0.0;
  }
  return 0.0;
}

LocalComponents component_scores(EnvKind env, Role role, const EnvState& prev, const MacroAction& action,
                                 const EnvState& next, ScoringOptions options) {
  LocalComponents out;
  switch (env) {
    case EnvKind::plan_path:
      out = plan_path_scores(role, as<plan_path::State>(prev, env), action, as<plan_path::State>(next, env));
      break;
    case EnvKind::sokoban:
      out = sokoban_scores(role, as<sokoban::State>(prev, env), action, as<sokoban::State>(next, env));
      break;
    case EnvKind::sudoku:
      out = sudoku_scores(role, as<sudoku::State>(prev, env), action, as<sudoku::State>(next, env));
      break;
  }
  out.mask = options.oracle_available ? 1 : 0;
  return out;
}

double combine_local(const LocalComponents& components, std::span<const Coefficient> coefficients) {
  if (components.scores.size() != coefficients.size()) {
    throw ContractViolation("component/coefficient count mismatch");
  }
  double sum = 0.0;
  for (const auto& c : coefficients) sum += c.weight;
  if (std::abs(sum - 1.0) > 1e-12) throw ContractViolation("coefficients sum to " + std::to_string(sum) + ", not 1");
  double local = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (components.scores[i].name != coefficients[i].name) {
      throw ContractViolation("component '" + components.scores[i].name + "' does not match coefficient '" +
                              coefficients[i].name + "'");
    }
    local += coefficients[i].weight * components.scores[i].value;
  }
  return local;
}

double mix(double team, double local, int mask, const MixerConfig& mixer, const RewardSchedule& schedule) {
  const double m = mask != 0 ? 1.0 : 0.0;
  if (mixer.form == MixerForm::main_text) return mixer.alpha * team + m * local;
  return schedule.lambda * team + (1.0 - schedule.lambda) * m * local;
}

CandidateReward score_transition(const RewardSchedule& schedule, const MixerConfig& mixer, Role role,
                                 const EnvState& prev, const MacroAction& action, const StepResult& outcome,
                                 ScoringOptions options) {
  CandidateReward r;
  r.team = team_reward(schedule.env, prev, outcome.next, outcome.term);
  r.components = component_scores(schedule.env, role, prev, action, outcome.next, options);
  r.local = combine_local(r.components, schedule.coefficients(role));
  r.mixed = mix(r.team, r.local, r.components.mask, mixer, schedule);
  return r;
}

}  // namespace atgrpo
