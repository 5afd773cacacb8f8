#include "atgrpo/plan_path.hpp"

#include <algorithm>
#include <sstream>

#include "atgrpo/random.hpp"

namespace atgrpo::plan_path {
namespace {

struct Difficulty {
  int size;
  double wall_prob;
  int min_dist;
  int max_dist;
};

Difficulty difficulty_params(int difficulty) {
  switch (difficulty) {
    case 1: return {5, 0.20, 2, 4};
    case 2: return {10, 0.25, 2, 8};
    case 3: return {10, 0.25, 2, 1 << 20};
    default:
      throw ConfigError("difficulty", "plan-path difficulty must be 1, 2 or 3 (got " +
                                          std::to_string(difficulty) + ")");
  }
}

std::optional<Move> move_of(const MacroAction& a) {
  if (a.malformed) return std::nullopt;
  if (const auto* m = std::get_if<Move>(&a.payload)) return *m;
  return std::nullopt;
}

}  // namespace

State make_state(OccupancyGrid grid, Cell position, Cell goal) {
  if (!grid.passable(position) || !grid.passable(goal)) {
    throw ContractViolation("plan-path position and goal must be passable in-bounds cells");
  }
  auto map = std::make_shared<Map>();
  map->dist_to_goal = distance_field(grid, goal);
  map->grid = std::move(grid);
  map->goal = goal;
  const int d = map->dist_to_goal[map->grid.index(position)];
  if (d == kUnreachable) throw ContractViolation("plan-path goal unreachable from start");
  State s;
  s.map = std::move(map);
  s.position = position;
  s.d_now = d;
  s.d_init = std::max(1, d);
  s.potential = -static_cast<double>(d);
  return s;
}

State generate(std::uint64_t seed, int difficulty, int size_override) {
  auto params = difficulty_params(difficulty);
  if (size_override > 0) {
    if (size_override < 3 || size_override > 32) {
      throw ConfigError("grid_size", "plan-path grid size must be in [3, 32]");
    }
    params.size = size_override;
  }
  Rng rng(derive_seed(seed, {0x504C414EULL, static_cast<std::uint64_t>(difficulty)}));
  const int n = params.size;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    OccupancyGrid grid(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) grid.set_wall({r, c}, rng.bernoulli(params.wall_prob));
    std::vector<Cell> open;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (grid.passable({r, c})) open.push_back({r, c});
    if (open.size() < 2) continue;
    const Cell start = open[rng.index(open.size())];
    const Cell goal = open[rng.index(open.size())];
    if (start == goal) continue;
    const auto d = distance_field(grid, goal)[grid.index(start)];
    if (d == kUnreachable || d < params.min_dist || d > params.max_dist) continue;
    return make_state(std::move(grid), start, goal);
  }
  throw GenerationError("plan-path generation exhausted 10000 attempts for seed " + std::to_string(seed));
}

bool is_solved(const State& s) { return s.position == s.map->goal; }

Observation observe(const State& s, Role role) {
  Observation obs;
  obs.role_tag = role;
  obs.turn = TurnIndex{s.turn};
  std::ostringstream os;
  os << "plan-path|" << role_name(EnvKind::plan_path, role) << "|t=" << s.turn << '|' << dump(s) << "|prop=";
  if (s.proposal) os << move_symbol(*s.proposal);
  obs.state_encoding = os.str();

  const double scale = std::max(1, s.map->grid.rows() - 1);
  obs.feature_vector = {s.position.row / scale,
                        s.position.col / scale,
                        s.map->goal.row / scale,
                        s.map->goal.col / scale,
                        static_cast<double>(s.d_now) / s.d_init,
                        0.0, 0.0, 0.0, 0.0};
  if (s.proposal) obs.feature_vector[5 + static_cast<int>(*s.proposal)] = 1.0;
  return obs;
}

CandidateMenu legal_menu(const State& s, Role role) {
  if (s.status.done || is_solved(s)) throw ContractViolation("legal_menu called on a terminal plan-path state");
  CandidateMenu menu;
  menu.feature_dim = kFeatureDim;
  menu.features.assign(4 * kFeatureDim, 0.0);
  const auto& grid = s.map->grid;
  const int here = s.map->dist_to_goal[grid.index(s.position)];
  for (std::size_t i = 0; i < 4; ++i) {
    const Move m = kAllMoves[i];
    menu.entries.push_back(MacroAction{i, m, false});
    const Cell next = step(s.position, m);
    const bool legal = grid.passable(next);
    double* row = menu.features.data() + i * kFeatureDim;
    if (role == Role::planner) {
      row[i] = 1.0;
      row[4] = legal ? 1.0 : 0.0;
      row[5] = manhattan(next, s.map->goal) < manhattan(s.position, s.map->goal) ? 1.0 : 0.0;
      row[6] = legal && s.map->dist_to_goal[grid.index(next)] == here - 1 ? 1.0 : 0.0;
    } else {
      double* tool = row + kPlannerFeatures;
      tool[i] = 1.0;
      tool[4] = legal ? 1.0 : 0.0;
      tool[5] = (s.proposal && *s.proposal == m) ? 1.0 : 0.0;
    }
  }
  return menu;
}

namespace {

State execute(const State& s, std::optional<Move> move) {
  State next = s;
  if (!move) {
    next.last_action_legal = false;
    return next;
  }
  const Cell target = step(s.position, *move);
  next.last_action_legal = s.map->grid.passable(target);
  if (next.last_action_legal) {
    next.position = target;
    next.d_now = s.map->dist_to_goal[s.map->grid.index(target)];
    next.potential = -static_cast<double>(next.d_now);
  }
  return next;
}

}  // namespace

State act(const State& s, Role role, const MacroAction& action) {
  if (role == Role::planner) {
    State next = s;
    next.proposal = move_of(action);
    return next;
  }
  return execute(s, move_of(action));
}

State preview(const State& s, const MacroAction& proposal) { return execute(s, move_of(proposal)); }

State finish_turn(State s, std::size_t horizon) {
  s.proposal.reset();
  if (is_solved(s)) {
    s.status = {true, TerminationCause::solved};
  } else if (s.turn + 1 >= horizon) {
    s.status = {true, TerminationCause::horizon};
  }
  ++s.turn;
  return s;
}

std::string dump(const State& s) {
  const auto& grid = s.map->grid;
  std::string out;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const Cell cell{r, c};
      char g = grid.is_wall(cell) ? '#' : '.';
      if (cell == s.map->goal) g = 'G';
      if (cell == s.position) g = (cell == s.map->goal) ? '+' : 'P';
      out.push_back(g);
    }
    if (r + 1 < grid.rows()) out.push_back('\n');
  }
  return out;
}

State load(std::string_view text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ContractViolation("empty plan-path instance");
  const int n_rows = static_cast<int>(rows.size());
  const int n_cols = static_cast<int>(rows[0].size());
  OccupancyGrid grid(n_rows, n_cols);
  std::optional<Cell> player, goal;
  for (int r = 0; r < n_rows; ++r) {
    if (static_cast<int>(rows[r].size()) != n_cols) throw ContractViolation("ragged plan-path instance");
    for (int c = 0; c < n_cols; ++c) {
      switch (rows[r][c]) {
        case '#': grid.set_wall({r, c}, true); break;
        case '.': break;
        case 'P': player = Cell{r, c}; break;
        case 'G': goal = Cell{r, c}; break;
        case '+': player = goal = Cell{r, c}; break;
        default: throw ContractViolation(std::string("unknown plan-path glyph '") + rows[r][c] + "'");
      }
    }
  }
  if (!player || !goal) throw ContractViolation("plan-path instance needs a player and a goal");
  return make_state(std::move(grid), *player, *goal);
}

}  // namespace atgrpo::plan_path
