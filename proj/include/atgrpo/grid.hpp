#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "atgrpo/core.hpp"

namespace atgrpo {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

Cell step(Cell c, Move m);
int manhattan(Cell a, Cell b);

/// Walls/passable matrix. Cells outside the matrix count as walls.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int rows, int cols) : rows_(rows), cols_(cols), walls_(static_cast<std::size_t>(rows * cols), 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool in_bounds(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < rows_ && c.col < cols_; }
  bool is_wall(Cell c) const { return !in_bounds(c) || walls_[index(c)] != 0; }
  bool passable(Cell c) const { return !is_wall(c); }
  void set_wall(Cell c, bool wall) { walls_[index(c)] = wall ? 1 : 0; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row * cols_ + c.col); }
  std::size_t size() const { return walls_.size(); }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> walls_;
};

inline constexpr int kUnreachable = -1;

/// Shortest 4-neighbour path length, nullopt when `to` is not reachable.
/// Throws ContractViolation if either endpoint is out of bounds or a wall.
std::optional<int> bfs_distance(const OccupancyGrid& grid, Cell from, Cell to);

/// Distance from every cell to `target` (kUnreachable for walls and cells in
/// other components). One BFS; indexed by OccupancyGrid::index.
std::vector<int> distance_field(const OccupancyGrid& grid, Cell target);

/// 1 iff `action` is a legal move from `position` and lands one step closer
/// to `goal` along a shortest path.
int sp_next(const OccupancyGrid& grid, Cell position, Cell goal, Move action);

}  // namespace atgrpo
