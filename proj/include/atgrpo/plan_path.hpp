#pragma once

// Grid path planning. The Planner proposes a move, the Tool executes one; the
// world only changes through the Tool's move.

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "atgrpo/core.hpp"
#include "atgrpo/grid.hpp"

namespace atgrpo::plan_path {

struct Map {
  OccupancyGrid grid;
  Cell goal;
  std::vector<int> dist_to_goal;  // distance_field(grid, goal)
};

struct State {
  std::shared_ptr<const Map> map;
  Cell position;
  int d_now = 0;   // shortest-path distance to goal
  int d_init = 1;  // max(1, initial distance)
  double potential = 0.0;  // -d_now
  bool last_action_legal = true;
  std::optional<Move> proposal;  // Planner's proposal for the current turn
  std::uint32_t turn = 0;
  TerminationFlag status;
};

// Planner block: U D L R one-hot, legal, manhattan-closer, on-shortest-path.
// Tool block:    U D L R one-hot, legal, matches-proposal.
inline constexpr std::size_t kPlannerFeatures = 7;
inline constexpr std::size_t kToolFeatures = 6;
inline constexpr std::size_t kFeatureDim = kPlannerFeatures + kToolFeatures;
inline constexpr std::size_t kObservationDim = 9;

/// Supported difficulties: 1 (5x5), 2 and 3 (10x10). `size_override` > 0
/// replaces the grid side length.
State generate(std::uint64_t seed, int difficulty, int size_override = 0);

/// Builds an initial state from explicit parts. Throws ContractViolation if the
/// goal is unreachable or an endpoint is blocked.
State make_state(OccupancyGrid grid, Cell position, Cell goal);

bool is_solved(const State& s);
Observation observe(const State& s, Role role);
CandidateMenu legal_menu(const State& s, Role role);

/// One role's part of a turn: Planner records its proposal, Tool moves.
State act(const State& s, Role role, const MacroAction& action);
/// The turn as it would play out if the Planner's proposal were executed.
State preview(const State& s, const MacroAction& proposal);
/// Closes the turn: clears the proposal, advances the turn counter and
/// determines termination.
State finish_turn(State s, std::size_t horizon);

std::string dump(const State& s);
State load(std::string_view text);

}  // namespace atgrpo::plan_path
