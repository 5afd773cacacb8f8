#include <gtest/gtest.h>

#include "atgrpo/grid.hpp"
#include "atgrpo/random.hpp"
#include "oracles.hpp"

using namespace atgrpo;

namespace {

OccupancyGrid random_grid(Rng& rng, int side, double wall_p) {
  OccupancyGrid g(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) g.set_wall({r, c}, rng.bernoulli(wall_p));
  return g;
}

}  // namespace

TEST(BfsDistance, EmptyThreeByThreeCorners) {
  const OccupancyGrid g(3, 3);
  EXPECT_EQ(bfs_distance(g, {0, 0}, {2, 2}), 4);
  EXPECT_EQ(bfs_distance(g, {1, 1}, {1, 1}), 0);
}

TEST(BfsDistance, WalledOffGoalIsUnreachable) {
  OccupancyGrid g(3, 3);
  g.set_wall({1, 2}, true);
  g.set_wall({2, 1}, true);
  EXPECT_EQ(bfs_distance(g, {0, 0}, {2, 2}), std::nullopt);
}

TEST(BfsDistance, ImpassableEndpointThrows) {
  OccupancyGrid g(3, 3);
  g.set_wall({0, 0}, true);
  EXPECT_THROW(bfs_distance(g, {0, 0}, {2, 2}), ContractViolation);
  EXPECT_THROW(bfs_distance(g, {1, 1}, {5, 5}), ContractViolation);
}

TEST(BfsDistance, MatchesFloydWarshallOnRandomGrids) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int side = trial % 2 ? 5 : 8;
    const auto g = random_grid(rng, side, 0.25);
    const auto ref = oracle::all_pairs(g);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        if (g.is_wall({r, c})) continue;
        const auto field = distance_field(g, {r, c});
        for (int r2 = 0; r2 < side; ++r2)
          for (int c2 = 0; c2 < side; ++c2) {
            if (g.is_wall({r2, c2})) continue;
            const int expected = ref[g.index({r2, c2})][g.index({r, c})];
            ASSERT_EQ(field[g.index({r2, c2})], expected);
            const auto d = bfs_distance(g, {r2, c2}, {r, c});
            ASSERT_EQ(d.value_or(kUnreachable), expected);
          }
      }
  }
}

TEST(SpNext, ThreeByThreeExamples) {
  OccupancyGrid g(3, 3);
  EXPECT_EQ(sp_next(g, {0, 0}, {2, 2}, Move::right), 1);
  EXPECT_EQ(sp_next(g, {0, 0}, {2, 2}, Move::up), 0);    // off the grid
  EXPECT_EQ(sp_next(g, {1, 1}, {2, 2}, Move::left), 0);  // distance grows
  g.set_wall({0, 1}, true);
  EXPECT_EQ(sp_next(g, {0, 0}, {2, 2}, Move::right), 0);  // into a wall
  EXPECT_EQ(sp_next(g, {0, 0}, {2, 2}, Move::down), 1);
}

TEST(SpNext, ImpliesDistanceDropsByOneOnAllFiveByFiveStates) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_grid(rng, 5, 0.2);
    for (int gr = 0; gr < 5; ++gr)
      for (int gc = 0; gc < 5; ++gc) {
        const Cell goal{gr, gc};
        if (g.is_wall(goal)) continue;
        const auto field = distance_field(g, goal);
        for (int r = 0; r < 5; ++r)
          for (int c = 0; c < 5; ++c) {
            const Cell pos{r, c};
            if (g.is_wall(pos) || field[g.index(pos)] == kUnreachable) continue;
            for (Move m : kAllMoves) {
              const Cell next = step(pos, m);
              const bool drops = g.passable(next) && field[g.index(next)] == field[g.index(pos)] - 1;
              ASSERT_EQ(sp_next(g, pos, goal, m), drops ? 1 : 0);
            }
          }
      }
  }
}
