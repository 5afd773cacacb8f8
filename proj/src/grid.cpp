#include "atgrpo/grid.hpp"

#include <cstdlib>
#include <deque>
#include <string>

namespace atgrpo {

Cell step(Cell c, Move m) {
  switch (m) {
    case Move::up: return {c.row - 1, c.col};
    case Move::down: return {c.row + 1, c.col};
    case Move::left: return {c.row, c.col - 1};
    case Move::right: return {c.row, c.col + 1};
  }
  return c;
}

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

std::vector<int> distance_field(const OccupancyGrid& grid, Cell target) {
  std::vector<int> dist(grid.size(), kUnreachable);
  if (!grid.passable(target)) return dist;
  std::deque<Cell> frontier{target};
  dist[grid.index(target)] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    const int d = dist[grid.index(c)];
    for (Move m : kAllMoves) {
      const Cell n = step(c, m);
      if (grid.passable(n) && dist[grid.index(n)] == kUnreachable) {
        dist[grid.index(n)] = d + 1;
        frontier.push_back(n);
      }
    }
  }
  return dist;
}

std::optional<int> bfs_distance(const OccupancyGrid& grid, Cell from, Cell to) {
  for (Cell c : {from, to}) {
    if (!grid.passable(c)) {
      throw ContractViolation("bfs endpoint (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                              ") is not a passable in-bounds cell");
    }
  }
  const int d = distance_field(grid, to)[grid.index(from)];
  if (d == kUnreachable) return std::nullopt;
  return d;
}

int sp_next(const OccupancyGrid& grid, Cell position, Cell goal, Move action) {
  const Cell next = step(position, action);
  if (!grid.passable(next)) return 0;
  const auto field = distance_field(grid, goal);
  const int before = field[grid.index(position)];
  const int after = field[grid.index(next)];
  return (before != kUnreachable && after != kUnreachable && after == before - 1) ? 1 : 0;
}

}  // namespace atgrpo
