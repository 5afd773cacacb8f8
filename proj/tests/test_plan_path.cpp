#include <gtest/gtest.h>

#include "atgrpo/environment.hpp"

using namespace atgrpo;

namespace {

MacroAction move_entry(const CandidateMenu& menu, Move m) {
  for (const auto& e : menu.entries)
    if (std::get<Move>(e.payload) == m) return e;
  throw std::logic_error("move not offered");
}

EnvState open_three_by_three() { return plan_path::make_state(OccupancyGrid(3, 3), {0, 0}, {2, 2}); }

StepResult turn(const EnvState& s, Move planner, Move tool, std::size_t horizon = 4) {
  const auto a0 = move_entry(legal_menu(s, Role::planner), planner);
  const auto mid = act(s, Role::planner, a0);
  const auto a1 = move_entry(legal_menu(mid, Role::tool), tool);
  const MacroAction actions[] = {a0, a1};
  return apply(s, actions, horizon);
}

}  // namespace

TEST(PlanPathGenerate, DeterministicInSeedAndDifficulty) {
  EXPECT_EQ(dump_instance(generate(EnvKind::plan_path, 7, 1)), dump_instance(generate(EnvKind::plan_path, 7, 1)));
  EXPECT_NE(dump_instance(generate(EnvKind::plan_path, 7, 1)), dump_instance(generate(EnvKind::plan_path, 8, 1)));
}

TEST(PlanPathGenerate, DifficultyOneIsFiveByFiveAndReachable) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = std::get<plan_path::State>(generate(EnvKind::plan_path, seed, 1));
    ASSERT_EQ(s.map->grid.rows(), 5);
    ASSERT_GE(s.d_now, 2);
    ASSERT_LE(s.d_now, 4);
    ASSERT_EQ(bfs_distance(s.map->grid, s.position, s.map->goal), s.d_now);
    ASSERT_EQ(s.potential, -s.d_now);
    ASSERT_EQ(s.d_init, std::max(1, s.d_now));
  }
}

TEST(PlanPathGenerate, LargerDifficultiesUseTenByTen) {
  const auto s = std::get<plan_path::State>(generate(EnvKind::plan_path, 1, 2));
  EXPECT_EQ(s.map->grid.rows(), 10);
}

TEST(PlanPathObserve, RolesDifferAndRepeatsMatch) {
  const auto s = generate(EnvKind::plan_path, 7, 1);
  EXPECT_FALSE(observe(s, Role::planner) == observe(s, Role::tool));
  EXPECT_EQ(observe(s, Role::planner).state_encoding, observe(s, Role::planner).state_encoding);
  EXPECT_EQ(observe(s, Role::planner).feature_vector.size(), plan_path::kObservationDim);
}

TEST(PlanPathObserve, EncodingChangesAfterATransition) {
  const auto s = generate(EnvKind::plan_path, 7, 1);
  const auto& ps = std::get<plan_path::State>(s);
  Move legal = Move::up;
  for (Move m : kAllMoves)
    if (ps.map->grid.passable(step(ps.position, m))) legal = m;
  const auto next = turn(s, legal, legal).next;
  EXPECT_FALSE(observe(s, Role::planner) == observe(next, Role::planner));
}

TEST(PlanPathMenu, FourMovesInFixedOrder) {
  const auto s = generate(EnvKind::plan_path, 3, 1);
  for (Role role : {Role::planner, Role::tool}) {
    const auto menu = legal_menu(s, role);
    ASSERT_EQ(menu.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(std::get<Move>(menu.entries[i].payload), kAllMoves[i]);
      EXPECT_EQ(menu.entries[i].menu_index, i);
    }
    EXPECT_EQ(menu.feature_dim, plan_path::kFeatureDim);
  }
}

TEST(PlanPathMenu, TerminalStateHasNoMenu) {
  auto s = turn(plan_path::make_state(OccupancyGrid(3, 3), {0, 0}, {0, 1}), Move::right, Move::right).next;
  EXPECT_TRUE(is_solved(s));
  EXPECT_THROW(legal_menu(s, Role::planner), ContractViolation);
}

TEST(PlanPathApply, MoveIntoWallIsANoOpWithFlag) {
  OccupancyGrid g(3, 3);
  g.set_wall({0, 1}, true);
  const EnvState s = plan_path::make_state(g, {0, 0}, {2, 2});
  const auto r = turn(s, Move::down, Move::right);
  const auto& n = std::get<plan_path::State>(r.next);
  EXPECT_EQ(n.position, (Cell{0, 0}));
  EXPECT_FALSE(n.last_action_legal);
  EXPECT_FALSE(r.term.done);
}

TEST(PlanPathApply, OnlyTheToolMoves) {
  const auto r = turn(open_three_by_three(), Move::right, Move::down);
  EXPECT_EQ(std::get<plan_path::State>(r.next).position, (Cell{1, 0}));
}

TEST(PlanPathApply, HorizonAtLastTurn) {
  EnvState s = open_three_by_three();
  StepResult r{s, {}};
  for (int t = 0; t < 2; ++t) {
    EXPECT_FALSE(r.term.done);
    r = turn(r.next, Move::up, Move::up, 2);
  }
  EXPECT_TRUE(r.term.done);
  EXPECT_EQ(r.term.cause, TerminationCause::horizon);
}

TEST(PlanPathApply, ReachingGoalSolves) {
  const EnvState s = plan_path::make_state(OccupancyGrid(3, 3), {0, 0}, {0, 1});
  const auto r = turn(s, Move::right, Move::right);
  EXPECT_TRUE(r.term.done);
  EXPECT_EQ(r.term.cause, TerminationCause::solved);
  EXPECT_TRUE(is_solved(r.next));
}

TEST(PlanPathApply, RejectsActionsNotOffered) {
  const auto s = open_three_by_three();
  const MacroAction forged{0, Move::right, false};
  const MacroAction actions[] = {forged, forged};
  EXPECT_THROW(apply(s, actions, 4), ContractViolation);
}

TEST(PlanPathApply, WallsNeverChange) {
  const auto s = generate(EnvKind::plan_path, 5, 2);
  auto r = turn(s, Move::left, Move::left);
  EXPECT_EQ(std::get<plan_path::State>(r.next).map->grid, std::get<plan_path::State>(s).map->grid);
}

TEST(PlanPathDump, RoundTrips) {
  const auto s = generate(EnvKind::plan_path, 12, 2);
  const auto text = dump_instance(s);
  EXPECT_EQ(dump_instance(load_instance(EnvKind::plan_path, text)), text);
}

TEST(PlanPathSpeculate, PlannerCandidateIsExecutedAsProposed) {
  const auto s = open_three_by_three();
  const auto menu = legal_menu(s, Role::planner);
  const auto r = speculate(s, Role::planner, move_entry(menu, Move::right), 4);
  EXPECT_EQ(std::get<plan_path::State>(r.next).position, (Cell{0, 1}));
}
