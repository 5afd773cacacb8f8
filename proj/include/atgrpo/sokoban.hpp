#pragma once

// Box pushing on a small walled grid. Same proposal/execution split as
// Plan-Path: the Planner proposes a move and the Tool's move is executed.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atgrpo/core.hpp"
#include "atgrpo/grid.hpp"

namespace atgrpo::sokoban {

struct Layout {
  OccupancyGrid walls;
  std::vector<Cell> goals;
  std::vector<std::uint8_t> goal_mask;  // indexed by OccupancyGrid::index

  bool is_goal(Cell c) const { return walls.in_bounds(c) && goal_mask[walls.index(c)] != 0; }
};

struct State {
  std::shared_ptr<const Layout> layout;
  Cell player;
  std::vector<Cell> boxes;  // sorted, pairwise distinct
  int n_boxes = 0;
  int boxes_on_goal = 0;
  double potential = 0.0;  // maintained incrementally; see box_goal_potential
  bool last_action_legal = true;
  std::optional<Move> proposal;
  std::uint32_t turn = 0;
  TerminationFlag status;

  bool has_box(Cell c) const;
};

// Planner block: U D L R one-hot, legal, pushes, deadlock-free, potential
// non-decreasing, potential increasing, box onto goal, box off goal, player
// approaches the nearest off-goal box.
// Tool block: U D L R one-hot, legal, matches-proposal.
inline constexpr std::size_t kPlannerFeatures = 12;
inline constexpr std::size_t kToolFeatures = 6;
inline constexpr std::size_t kFeatureDim = kPlannerFeatures + kToolFeatures;
inline constexpr std::size_t kObservationDim = 8;
inline constexpr int kSide = 6;

/// Difficulty 1: one or two boxes, optimal solution <= 4 moves; 2: two boxes,
/// <= 10 moves; 3: two boxes, <= 30 moves.
State generate(std::uint64_t seed, int difficulty);

/// Throws ContractViolation on overlapping or misplaced boxes, or when the
/// goal count differs from the box count.
State make_state(OccupancyGrid walls, std::vector<Cell> goals, Cell player, std::vector<Cell> boxes);

bool is_solved(const State& s);
Observation observe(const State& s, Role role);
CandidateMenu legal_menu(const State& s, Role role);
State act(const State& s, Role role, const MacroAction& action);
State preview(const State& s, const MacroAction& proposal);
State finish_turn(State s, std::size_t horizon);

/// -(sum over boxes of the Manhattan distance to the nearest goal), from
/// scratch. Throws ContractViolation when there are no boxes or no goals.
double box_goal_potential(const State& s);

/// A corner is a non-wall cell with a wall above or below and a wall to the
/// left or right.
bool is_corner(const OccupancyGrid& walls, Cell c);

/// 0 iff `action` pushes a box onto a non-goal corner cell, else 1.
int corner_deadlock_free(const State& s, Move action);

/// True when at least one box is off goal and every off-goal box sits in a
/// corner.
bool all_remaining_deadlocked(const State& s);

/// Whether the move is legal: in bounds, not into a wall, and any push lands
/// on a free floor/goal cell.
bool move_legal(const State& s, Move m);

/// Length of the shortest move sequence solving `s`, or nullopt if none is
/// found within `max_moves`.
std::optional<int> solve_length(const State& s, int max_moves);

/// First move of a shortest solution, if one exists within `max_moves`.
std::optional<Move> solve_first_move(const State& s, int max_moves);

std::string dump(const State& s);
State load(std::string_view text);

}  // namespace atgrpo::sokoban
