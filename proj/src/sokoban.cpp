#include "atgrpo/sokoban.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

#include "atgrpo/random.hpp"

namespace atgrpo::sokoban {
namespace {

std::optional<Move> move_of(const MacroAction& a) {
  if (a.malformed) return std::nullopt;
  if (const auto* m = std::get_if<Move>(&a.payload)) return *m;
  return std::nullopt;
}

int nearest_goal_distance(const Layout& layout, Cell box) {
  int best = std::numeric_limits<int>::max();
  for (Cell g : layout.goals) best = std::min(best, manhattan(box, g));
  return best;
}

int nearest_open_box_distance(const State& s, Cell from) {
  int best = std::numeric_limits<int>::max();
  for (Cell b : s.boxes)
    if (!s.layout->is_goal(b)) best = std::min(best, manhattan(from, b));
  return best;
}

// Executes a move. Illegal moves leave the state unchanged apart from the
// legality flag.
State execute(const State& s, std::optional<Move> move) {
  State next = s;
  if (!move || !move_legal(s, *move)) {
    next.last_action_legal = false;
    return next;
  }
  next.last_action_legal = true;
  const Cell target = step(s.player, *move);
  if (s.has_box(target)) {
    const Cell dest = step(target, *move);
    auto it = std::find(next.boxes.begin(), next.boxes.end(), target);
    *it = dest;
    std::sort(next.boxes.begin(), next.boxes.end());
    const auto& layout = *s.layout;
    next.potential += nearest_goal_distance(layout, target) - nearest_goal_distance(layout, dest);
    next.boxes_on_goal += (layout.is_goal(dest) ? 1 : 0) - (layout.is_goal(target) ? 1 : 0);
  }
  next.player = target;
  return next;
}

using SearchKey = std::vector<std::uint8_t>;

SearchKey key_of(const State& s) {
  SearchKey key;
  key.push_back(static_cast<std::uint8_t>(s.layout->walls.index(s.player)));
  for (Cell b : s.boxes) key.push_back(static_cast<std::uint8_t>(s.layout->walls.index(b)));
  return key;
}

// Breadth-first search over (player, boxes). Returns the first move of a
// shortest solution and its length.
std::optional<std::pair<int, std::optional<Move>>> search(const State& start, int max_moves) {
  if (is_solved(start)) return std::make_pair(0, std::optional<Move>{});
  std::map<SearchKey, Move> first_move;
  std::deque<std::pair<State, int>> frontier;
  first_move.emplace(key_of(start), Move::up);
  frontier.emplace_back(start, 0);
  while (!frontier.empty()) {
    auto [cur, depth] = frontier.front();
    frontier.pop_front();
    if (depth >= max_moves) continue;
    const Move origin = depth == 0 ? Move::up : first_move.at(key_of(cur));
    for (Move m : kAllMoves) {
      if (!move_legal(cur, m)) continue;
      State next = execute(cur, m);
      const Move first = depth == 0 ? m : origin;
      if (is_solved(next)) return std::make_pair(depth + 1, std::optional<Move>{first});
      if (all_remaining_deadlocked(next)) continue;
      if (first_move.emplace(key_of(next), first).second) frontier.emplace_back(std::move(next), depth + 1);
    }
  }
  return std::nullopt;
}

}  // namespace

bool State::has_box(Cell c) const { return std::binary_search(boxes.begin(), boxes.end(), c); }

State make_state(OccupancyGrid walls, std::vector<Cell> goals, Cell player, std::vector<Cell> boxes) {
  if (boxes.empty()) throw ContractViolation("sokoban instance needs at least one box");
  if (goals.size() != boxes.size()) throw ContractViolation("sokoban goal count must equal box count");
  auto layout = std::make_shared<Layout>();
  layout->goal_mask.assign(walls.size(), 0);
  for (Cell g : goals) {
    if (!walls.passable(g)) throw ContractViolation("sokoban goal on a wall");
    layout->goal_mask[walls.index(g)] = 1;
  }
  std::sort(boxes.begin(), boxes.end());
  if (std::adjacent_find(boxes.begin(), boxes.end()) != boxes.end()) {
    throw ContractViolation("sokoban boxes overlap");
  }
  for (Cell b : boxes)
    if (!walls.passable(b) || b == player) throw ContractViolation("sokoban box on wall or player");
  if (!walls.passable(player)) throw ContractViolation("sokoban player on a wall");
  std::sort(goals.begin(), goals.end());
  layout->walls = std::move(walls);
  layout->goals = std::move(goals);

  State s;
  s.layout = std::move(layout);
  s.player = player;
  s.boxes = std::move(boxes);
  s.n_boxes = static_cast<int>(s.boxes.size());
  for (Cell b : s.boxes) s.boxes_on_goal += s.layout->is_goal(b) ? 1 : 0;
  s.potential = box_goal_potential(s);
  return s;
}

State generate(std::uint64_t seed, int difficulty) {
  int max_moves = 0;
  switch (difficulty) {
    case 1: max_moves = 4; break;
    case 2: max_moves = 10; break;
    case 3: max_moves = 30; break;
    default:
      throw ConfigError("difficulty", "sokoban difficulty must be 1, 2 or 3 (got " + std::to_string(difficulty) + ")");
  }
  Rng rng(derive_seed(seed, {0x534F4B4FULL, static_cast<std::uint64_t>(difficulty)}));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    OccupancyGrid walls(kSide, kSide);
    std::vector<Cell> inner;
    for (int r = 0; r < kSide; ++r) {
      for (int c = 0; c < kSide; ++c) {
        const bool border = r == 0 || c == 0 || r == kSide - 1 || c == kSide - 1;
        walls.set_wall({r, c}, border);
        if (!border) inner.push_back({r, c});
      }
    }
    const std::size_t extra_walls = rng.index(3);
    for (std::size_t i = 0; i < extra_walls; ++i) walls.set_wall(inner[rng.index(inner.size())], true);
    std::vector<Cell> floor;
    for (Cell c : inner)
      if (walls.passable(c)) floor.push_back(c);

    const int n_boxes = difficulty == 1 ? 1 + static_cast<int>(rng.index(2)) : 2;
    auto draw_distinct = [&](std::size_t n, auto accept) {
      std::vector<Cell> out;
      for (int tries = 0; out.size() < n && tries < 64; ++tries) {
        const Cell c = floor[rng.index(floor.size())];
        if (accept(c) && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
      }
      return out;
    };
    auto goals = draw_distinct(static_cast<std::size_t>(n_boxes), [](Cell) { return true; });
    auto boxes = draw_distinct(static_cast<std::size_t>(n_boxes), [&](Cell c) { return !is_corner(walls, c); });
    if (goals.size() != static_cast<std::size_t>(n_boxes) || boxes.size() != static_cast<std::size_t>(n_boxes)) continue;
    const Cell player = floor[rng.index(floor.size())];
    if (std::find(boxes.begin(), boxes.end(), player) != boxes.end()) continue;

    State s = make_state(walls, goals, player, boxes);
    if (is_solved(s)) continue;
    if (solve_length(s, max_moves)) return s;
  }
  throw GenerationError("sokoban generation exhausted 10000 attempts for seed " + std::to_string(seed));
}

bool is_solved(const State& s) { return s.boxes_on_goal == s.n_boxes; }

double box_goal_potential(const State& s) {
  if (s.boxes.empty()) throw ContractViolation("box_goal_potential needs at least one box");
  if (s.layout->goals.empty()) throw ContractViolation("box_goal_potential needs at least one goal");
  double total = 0.0;
  for (Cell b : s.boxes) total += nearest_goal_distance(*s.layout, b);
  return -total;
}

bool is_corner(const OccupancyGrid& walls, Cell c) {
  if (walls.is_wall(c)) return false;
  const bool vertical = walls.is_wall(step(c, Move::up)) || walls.is_wall(step(c, Move::down));
  const bool horizontal = walls.is_wall(step(c, Move::left)) || walls.is_wall(step(c, Move::right));
  return vertical && horizontal;
}

bool move_legal(const State& s, Move m) {
  const auto& walls = s.layout->walls;
  const Cell target = step(s.player, m);
  if (walls.is_wall(target)) return false;
  if (!s.has_box(target)) return true;
  const Cell dest = step(target, m);
  return walls.passable(dest) && !s.has_box(dest);
}

int corner_deadlock_free(const State& s, Move action) {
  const Cell target = step(s.player, action);
  if (!s.has_box(target) || !move_legal(s, action)) return 1;
  const Cell dest = step(target, action);
  return (is_corner(s.layout->walls, dest) && !s.layout->is_goal(dest)) ? 0 : 1;
}

bool all_remaining_deadlocked(const State& s) {
  bool any_open = false;
  for (Cell b : s.boxes) {
    if (s.layout->is_goal(b)) continue;
    any_open = true;
    if (!is_corner(s.layout->walls, b)) return false;
  }
  return any_open;
}

std::optional<int> solve_length(const State& s, int max_moves) {
  auto found = search(s, max_moves);
  if (!found) return std::nullopt;
  return found->first;
}

std::optional<Move> solve_first_move(const State& s, int max_moves) {
  auto found = search(s, max_moves);
  if (!found) return std::nullopt;
  return found->second;
}

Observation observe(const State& s, Role role) {
  Observation obs;
  obs.role_tag = role;
  obs.turn = TurnIndex{s.turn};
  std::ostringstream os;
  os << "sokoban|" << role_name(EnvKind::sokoban, role) << "|t=" << s.turn << '|' << dump(s) << "|prop=";
  if (s.proposal) os << move_symbol(*s.proposal);
  obs.state_encoding = os.str();

  const double scale = kSide - 1;
  obs.feature_vector = {s.player.row / scale,
                        s.player.col / scale,
                        static_cast<double>(s.boxes_on_goal) / s.n_boxes,
                        s.potential / (2.0 * scale * s.n_boxes),
                        0.0, 0.0, 0.0, 0.0};
  if (s.proposal) obs.feature_vector[4 + static_cast<int>(*s.proposal)] = 1.0;
  return obs;
}

CandidateMenu legal_menu(const State& s, Role role) {
  if (s.status.done || is_solved(s)) throw ContractViolation("legal_menu called on a terminal sokoban state");
  CandidateMenu menu;
  menu.feature_dim = kFeatureDim;
  menu.features.assign(4 * kFeatureDim, 0.0);
  const auto& layout = *s.layout;
  for (std::size_t i = 0; i < 4; ++i) {
    const Move m = kAllMoves[i];
    menu.entries.push_back(MacroAction{i, m, false});
    const bool legal = move_legal(s, m);
    double* row = menu.features.data() + i * kFeatureDim;
    if (role == Role::planner) {
      const Cell target = step(s.player, m);
      const bool pushes = legal && s.has_box(target);
      const State after = execute(s, m);
      row[i] = 1.0;
      row[4] = legal ? 1.0 : 0.0;
      row[5] = pushes ? 1.0 : 0.0;
      row[6] = corner_deadlock_free(s, m);
      row[7] = after.potential >= s.potential ? 1.0 : 0.0;
      row[8] = after.potential > s.potential ? 1.0 : 0.0;
      row[9] = pushes && layout.is_goal(step(target, m)) ? 1.0 : 0.0;
      row[10] = pushes && layout.is_goal(target) ? 1.0 : 0.0;
      row[11] = legal && !pushes && nearest_open_box_distance(s, target) < nearest_open_box_distance(s, s.player) ? 1.0 : 0.0;
    } else {
      double* tool = row + kPlannerFeatures;
      tool[i] = 1.0;
      tool[4] = legal ? 1.0 : 0.0;
      tool[5] = (s.proposal && *s.proposal == m) ? 1.0 : 0.0;
    }
  }
  return menu;
}

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
  } else if (all_remaining_deadlocked(s)) {
    s.status = {true, TerminationCause::dead_end};
  } else if (s.turn + 1 >= horizon) {
    s.status = {true, TerminationCause::horizon};
  }
  ++s.turn;
  return s;
}

std::string dump(const State& s) {
  const auto& layout = *s.layout;
  std::string out;
  for (int r = 0; r < layout.walls.rows(); ++r) {
    for (int c = 0; c < layout.walls.cols(); ++c) {
      const Cell cell{r, c};
      const bool goal = layout.is_goal(cell);
      char g = layout.walls.is_wall(cell) ? '#' : (goal ? 'G' : '.');
      if (s.has_box(cell)) g = goal ? '*' : 'B';
      if (cell == s.player) g = goal ? '+' : 'P';
      out.push_back(g);
    }
    if (r + 1 < layout.walls.rows()) out.push_back('\n');
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
  if (rows.empty()) throw ContractViolation("empty sokoban instance");
  const int n_rows = static_cast<int>(rows.size());
  const int n_cols = static_cast<int>(rows[0].size());
  OccupancyGrid walls(n_rows, n_cols);
  std::vector<Cell> goals, boxes;
  std::optional<Cell> player;
  for (int r = 0; r < n_rows; ++r) {
    if (static_cast<int>(rows[r].size()) != n_cols) throw ContractViolation("ragged sokoban instance");
    for (int c = 0; c < n_cols; ++c) {
      const Cell cell{r, c};
      switch (rows[r][c]) {
        case '#': walls.set_wall(cell, true); break;
        case '.': break;
        case 'G': goals.push_back(cell); break;
        case 'B': boxes.push_back(cell); break;
        case '*': goals.push_back(cell); boxes.push_back(cell); break;
        case 'P': player = cell; break;
        case '+': player = cell; goals.push_back(cell); break;
        default: throw ContractViolation(std::string("unknown sokoban glyph '") + rows[r][c] + "'");
      }
    }
  }
  if (!player) throw ContractViolation("sokoban instance needs a player");
  return make_state(std::move(walls), std::move(goals), *player, std::move(boxes));
}

}  // namespace atgrpo::sokoban
