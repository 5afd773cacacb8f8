#include "atgrpo/sudoku.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atgrpo/random.hpp"

namespace atgrpo::sudoku {
namespace {

int subgrid_of(int size) {
  const int b = static_cast<int>(std::lround(std::sqrt(size)));
  if (b * b != size || size < 1 || size > 9) {
    throw ConfigError("grid_size", "sudoku size must be a perfect square in [1, 9] (got " + std::to_string(size) + ")");
  }
  return b;
}

std::size_t idx(int size, int r, int c) { return static_cast<std::size_t>(r * size + c); }

template <typename Rand>
void shuffle(std::vector<int>& v, Rand& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

bool backtrack(Grid& g, int size) {
  std::size_t best = g.size();
  int best_count = size + 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] != 0) continue;
    const int r = static_cast<int>(i) / size, c = static_cast<int>(i) % size;
    int count = 0;
    for (int v = 1; v <= size; ++v) count += conflicts(g, size, r, c, v) ? 0 : 1;
    if (count < best_count) {
      best_count = count;
      best = i;
    }
  }
  if (best == g.size()) return true;
  if (best_count == 0) return false;
  const int r = static_cast<int>(best) / size, c = static_cast<int>(best) % size;
  for (int v = 1; v <= size; ++v) {
    if (conflicts(g, size, r, c, v)) continue;
    g[best] = v;
    if (backtrack(g, size)) return true;
  }
  g[best] = 0;
  return false;
}

std::vector<int> cell_candidates(const Grid& g, int size, int r, int c) {
  std::vector<int> out;
  for (int v = 1; v <= size; ++v)
    if (!conflicts(g, size, r, c, v)) out.push_back(v);
  return out;
}

// v can go nowhere else in at least one of the cell's units.
bool hidden_single(const Grid& g, int size, int sub, int r, int c, int v) {
  auto only_here = [&](auto cells) {
    for (auto [rr, cc] : cells) {
      if (rr == r && cc == c) continue;
      if (g[idx(size, rr, cc)] == 0 && !conflicts(g, size, rr, cc, v)) return false;
    }
    return true;
  };
  std::vector<std::pair<int, int>> row, col, box;
  for (int k = 0; k < size; ++k) {
    row.emplace_back(r, k);
    col.emplace_back(k, c);
  }
  const int br = r / sub * sub, bc = c / sub * sub;
  for (int dr = 0; dr < sub; ++dr)
    for (int dc = 0; dc < sub; ++dc) box.emplace_back(br + dr, bc + dc);
  return only_here(row) || only_here(col) || only_here(box);
}

State execute(const State& s, const MacroAction& action) {
  State next = s;
  next.grid_prev = s.grid_now;
  if (action.malformed) {
    next.last_exec_ok = false;
    next.last_action_legal = false;
    return next;
  }
  if (std::holds_alternative<SubmitGrid>(action.payload)) {
    next.submitted = true;
    next.last_exec_ok = true;
    next.last_action_legal = true;
    return next;
  }
  const auto* fill = std::get_if<FillStep>(&action.payload);
  if (!fill) {
    next.last_exec_ok = false;
    next.last_action_legal = false;
    return next;
  }
  const bool in_range = fill->row >= 0 && fill->col >= 0 && fill->row < s.size && fill->col < s.size &&
                        fill->value >= 1 && fill->value <= s.size;
  const std::size_t i = in_range ? idx(s.size, fill->row, fill->col) : 0;
  next.last_exec_ok = in_range && s.givens[i] == 0 && s.grid_now[i] == 0;
  next.last_action_legal =
      next.last_exec_ok && !conflicts(s.grid_now, s.size, fill->row, fill->col, fill->value);
  if (next.last_action_legal) next.grid_now[i] = fill->value;
  return next;
}

}  // namespace

bool conflicts(const Grid& g, int size, int row, int col, int value) {
  const int sub = subgrid_of(size);
  for (int k = 0; k < size; ++k) {
    if (k != col && g[idx(size, row, k)] == value) return true;
    if (k != row && g[idx(size, k, col)] == value) return true;
  }
  const int br = row / sub * sub, bc = col / sub * sub;
  for (int r = br; r < br + sub; ++r)
    for (int c = bc; c < bc + sub; ++c)
      if ((r != row || c != col) && g[idx(size, r, c)] == value) return true;
  return false;
}

bool has_duplicates(const Grid& g, int size) {
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const int v = g[idx(size, r, c)];
      if (v != 0 && conflicts(g, size, r, c, v)) return true;
    }
  return false;
}

bool is_solved_grid(const Grid& g, int size) {
  return std::find(g.begin(), g.end(), 0) == g.end() && !has_duplicates(g, size);
}

bool is_solved(const State& s) { return is_solved_grid(s.grid_now, s.size); }

int count_empty(const Grid& g) { return static_cast<int>(std::count(g.begin(), g.end(), 0)); }

std::optional<Grid> solve(const Grid& grid, int size) {
  if (has_duplicates(grid, size)) return std::nullopt;
  Grid g = grid;
  if (backtrack(g, size)) return g;
  return std::nullopt;
}

State make_state(const Grid& grid, int size) {
  const int sub = subgrid_of(size);
  if (grid.size() != static_cast<std::size_t>(size * size)) throw ContractViolation("sudoku grid has wrong cell count");
  for (int v : grid)
    if (v < 0 || v > size) throw ContractViolation("sudoku value out of range");
  State s;
  s.size = size;
  s.subgrid = sub;
  s.grid_now = grid;
  s.grid_prev = grid;
  s.givens.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s.givens[i] = grid[i] != 0 ? 1 : 0;
  return s;
}

State generate(std::uint64_t seed, int difficulty, int size) {
  const int sub = subgrid_of(size);
  if (difficulty < 1 || difficulty > 3) {
    throw ConfigError("difficulty", "sudoku difficulty must be 1, 2 or 3 (got " + std::to_string(difficulty) + ")");
  }
  const int empties_4[] = {4, 8, 10};
  const int empties_9[] = {20, 35, 45};
  const int n_cells = size * size;
  int empties = size == 9 ? empties_9[difficulty - 1] : size == 4 ? empties_4[difficulty - 1]
                                                                  : std::min(n_cells - 1, difficulty * n_cells / 4);
  Rng rng(derive_seed(seed, {0x5355444FULL, static_cast<std::uint64_t>(difficulty), static_cast<std::uint64_t>(size)}));

  for (int attempt = 0; attempt < 10000; ++attempt) {
    // Permuted base pattern: digit relabelling, rows within bands, bands,
    // columns within stacks, stacks.
    std::vector<int> digits(size);
    std::iota(digits.begin(), digits.end(), 1);
    shuffle(digits, rng);
    auto line_order = [&] {
      std::vector<int> groups(sub), order;
      std::iota(groups.begin(), groups.end(), 0);
      shuffle(groups, rng);
      for (int g : groups) {
        std::vector<int> inner(sub);
        std::iota(inner.begin(), inner.end(), 0);
        shuffle(inner, rng);
        for (int i : inner) order.push_back(g * sub + i);
      }
      return order;
    };
    const auto rows = line_order();
    const auto cols = line_order();
    Grid solution(static_cast<std::size_t>(n_cells));
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        const int rr = rows[r], cc = cols[c];
        solution[idx(size, r, c)] = digits[(sub * (rr % sub) + rr / sub + cc) % size];
      }

    std::vector<int> cells(static_cast<std::size_t>(n_cells));
    std::iota(cells.begin(), cells.end(), 0);
    shuffle(cells, rng);
    Grid puzzle = solution;
    for (int k = 0; k < empties; ++k) puzzle[static_cast<std::size_t>(cells[k])] = 0;
    if (solve(puzzle, size)) return make_state(puzzle, size);
  }
  throw GenerationError("sudoku generation exhausted 10000 attempts for seed " + std::to_string(seed));
}

Observation observe(const State& s, Role role) {
  Observation obs;
  obs.role_tag = role;
  obs.turn = TurnIndex{s.turn};
  std::ostringstream os;
  os << "sudoku|" << role_name(EnvKind::sudoku, role) << "|t=" << s.turn << '|' << dump(s) << "|givens=";
  for (auto g : s.givens) os << static_cast<int>(g);
  os << "|submitted=" << s.submitted << "|prop=";
  if (s.proposal) os << describe(*s.proposal);
  obs.state_encoding = os.str();
  const double filled = 1.0 - static_cast<double>(count_empty(s.grid_now)) / static_cast<double>(s.grid_now.size());
  obs.feature_vector = {filled, s.submitted ? 1.0 : 0.0, s.proposal ? 1.0 : 0.0};
  return obs;
}

CandidateMenu legal_menu(const State& s, Role role) {
  if (s.status.done || is_solved(s)) throw ContractViolation("legal_menu called on a terminal sudoku state");
  CandidateMenu menu;
  menu.feature_dim = kFeatureDim;
  const auto* proposed = s.proposal ? std::get_if<FillStep>(&*s.proposal) : nullptr;
  auto push = [&](ActionPayload payload) {
    menu.entries.push_back(MacroAction{menu.entries.size(), std::move(payload), false});
    menu.features.resize(menu.features.size() + kFeatureDim, 0.0);
    return menu.features.data() + (menu.entries.size() - 1) * kFeatureDim;
  };
  for (int r = 0; r < s.size; ++r) {
    for (int c = 0; c < s.size; ++c) {
      if (s.at(r, c) != 0) continue;
      const auto cands = cell_candidates(s.grid_now, s.size, r, c);
      for (int v = 1; v <= s.size; ++v) {
        const FillStep fill{r, c, v};
        double* row = push(fill);
        const bool legal = std::find(cands.begin(), cands.end(), v) != cands.end();
        const bool naked = legal && cands.size() == 1;
        if (role == Role::planner) {
          row[1] = legal ? 1.0 : 0.0;
          row[2] = naked ? 1.0 : 0.0;
          row[3] = legal && hidden_single(s.grid_now, s.size, s.subgrid, r, c, v) ? 1.0 : 0.0;
          row[4] = legal ? 1.0 / static_cast<double>(cands.size()) : 0.0;
        } else {
          double* tool = row + kPlannerFeatures;
          tool[0] = legal ? 1.0 : 0.0;
          tool[1] = (proposed && *proposed == fill) ? 1.0 : 0.0;
          tool[2] = naked ? 1.0 : 0.0;
        }
      }
    }
  }
  if (role == Role::planner) push(SubmitGrid{})[0] = 1.0;
  return menu;
}

State act(const State& s, Role role, const MacroAction& action) {
  if (role == Role::planner) {
    State next = s;
    if (action.malformed) {
      next.proposal.reset();
    } else {
      next.proposal = action.payload;
      if (std::holds_alternative<SubmitGrid>(action.payload)) next.submitted = true;
    }
    return next;
  }
  if (!action.malformed && std::holds_alternative<SubmitGrid>(action.payload)) {
    throw ContractViolation("the sudoku tool cannot submit");
  }
  return execute(s, action);
}

State preview(const State& s, const MacroAction& proposal) { return execute(s, proposal); }

State finish_turn(State s, std::size_t horizon) {
  s.proposal.reset();
  if (is_solved(s)) {
    s.status = {true, TerminationCause::solved};
  } else if (s.submitted) {
    s.status = {true, TerminationCause::dead_end};
  } else if (s.turn + 1 >= horizon) {
    s.status = {true, TerminationCause::horizon};
  }
  ++s.turn;
  return s;
}

std::string dump(const State& s) {
  std::string out;
  for (int r = 0; r < s.size; ++r) {
    for (int c = 0; c < s.size; ++c) {
      const int v = s.at(r, c);
      out.push_back(v == 0 ? '.' : static_cast<char>('0' + v));
    }
    if (r + 1 < s.size) out.push_back('\n');
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
  const int size = static_cast<int>(rows.size());
  Grid grid;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != size) throw ContractViolation("sudoku instance must be square");
    for (char ch : row) {
      if (ch == '.') {
        grid.push_back(0);
      } else if (ch >= '1' && ch <= '9') {
        grid.push_back(ch - '0');
      } else {
        throw ContractViolation(std::string("unknown sudoku glyph '") + ch + "'");
      }
    }
  }
  return make_state(grid, size);
}

}  // namespace atgrpo::sudoku
