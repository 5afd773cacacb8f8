#pragma once

// N x N Sudoku (N = 4 by default, 9 supported). The Reasoner proposes a fill
// step or submits; the Tool executes one fill step per turn.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atgrpo/core.hpp"

namespace atgrpo::sudoku {

using Grid = std::vector<int>;  // row-major, 0 = empty

struct State {
  int size = 4;
  int subgrid = 2;
  Grid grid_prev;  // before the last executed fill
  Grid grid_now;
  std::vector<std::uint8_t> givens;
  bool last_action_legal = true;  // executed fill respected all constraints
  bool last_exec_ok = true;       // executed fill targeted an editable empty cell
  std::optional<ActionPayload> proposal;
  bool submitted = false;
  std::uint32_t turn = 0;
  TerminationFlag status;

  int at(int r, int c) const { return grid_now[static_cast<std::size_t>(r * size + c)]; }
};

// Reasoner block: submit, legal, naked single, hidden single, 1/#candidates.
// Tool block: legal, matches-proposal, naked single.
inline constexpr std::size_t kPlannerFeatures = 5;
inline constexpr std::size_t kToolFeatures = 3;
inline constexpr std::size_t kFeatureDim = kPlannerFeatures + kToolFeatures;
inline constexpr std::size_t kObservationDim = 3;

/// Difficulty sets the number of empty cells (4x4: 4, 8, 10; 9x9: 20, 35, 45).
State generate(std::uint64_t seed, int difficulty, int size = 4);

/// Builds a state whose givens are the non-zero cells of `grid`.
State make_state(const Grid& grid, int size);

/// True iff no empty cell remains and no row, column or box has a repeat.
bool is_solved(const State& s);
bool is_solved_grid(const Grid& grid, int size);
bool has_duplicates(const Grid& grid, int size);
/// Whether writing `value` at (row, col) repeats a value in its row, column
/// or box (the cell itself is ignored).
bool conflicts(const Grid& grid, int size, int row, int col, int value);

/// Backtracking completion of `grid`, if one exists.
std::optional<Grid> solve(const Grid& grid, int size);

int count_empty(const Grid& grid);

Observation observe(const State& s, Role role);
CandidateMenu legal_menu(const State& s, Role role);
State act(const State& s, Role role, const MacroAction& action);
State preview(const State& s, const MacroAction& proposal);
State finish_turn(State s, std::size_t horizon);

std::string dump(const State& s);
State load(std::string_view text);

}  // namespace atgrpo::sudoku
