#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "skewfit/geometry.hpp"
#include "skewfit/rng.hpp"

namespace skewfit {

// ---------------------------------------------------------------------------
// Four Rooms point-mass oracle

enum class ReachMode {
  /// Nearest free point to the noisy goal.
  Projection,
  /// Straight-line move from the start that halts at the first wall.
  StopAtWall,
};

struct FourRoomsConfig {
  double side = 11.0;
  /// Wall rectangles. Interiors are blocked; edges are free space.
  std::vector<Box2> walls = default_walls(11.0);
  double noise_sigma = 0.0605;
  Point2 start{8.5, 2.5};
  Box2 start_room{{6.0, 0.0}, {11.0, 5.0}};
  ReachMode mode = ReachMode::Projection;

  /// Unit-thick walls on both midlines with a unit doorway centered on each
  /// half-wall. For side 11 this leaves 104 free cells on the 11x11 grid.
  static std::vector<Box2> default_walls(double side);
};

class FourRooms {
 public:
  explicit FourRooms(FourRoomsConfig config = {});

  const FourRoomsConfig& config() const { return config_; }
  const Box2& world() const { return world_; }

  bool is_free(const Point2& p) const;
  /// Nearest point of free space (Euclidean). Identity on free points.
  Point2 project(const Point2& p) const;
  /// Applies goal noise and the configured reach semantics.
  Point2 reach(const Point2& goal, std::uint64_t seed) const;
  Point2 reach(const Point2& goal, Rng& rng) const;

  /// Cells of `grid` whose center lies in free space.
  std::vector<std::size_t> valid_cells(const GridSpec& grid) const;

 private:
  Point2 stop_at_wall(const Point2& target) const;
  Point2 nudge_off_edge(const Point2& p, int edge) const;

  FourRoomsConfig config_;
  Box2 world_;
  // Walls followed by four slabs that fence off everything outside the world.
  std::vector<Box2> obstacles_;
};

// ---------------------------------------------------------------------------
// Discrete labyrinth

struct Cell {
  int col = 0;
  int row = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Moves in row-major text coordinates: North decreases the row.
enum class Action : int { North = 0, South = 1, East = 2, West = 3 };
inline constexpr int kActionCount = 4;

struct StepResult {
  Cell next;
  double reward = 0.0;
  bool done = false;
};

class Labyrinth {
 public:
  /// Parses '#' wall, '.' free, 'S' start (exactly one). Rows must be equal
  /// length. Throws InvalidInput on malformed maps or unreachable free cells.
  static Labyrinth parse(std::string_view text, std::size_t horizon);
  static Labyrinth load(const std::filesystem::path& path, std::size_t horizon);
  /// 15x15 single-corridor spiral, horizon 60.
  static Labyrinth spiral15();
  /// Wall-free grid.
  static Labyrinth open_grid(int width, int height, Cell start, std::size_t horizon);

  int width() const { return width_; }
  int height() const { return height_; }
  Cell start() const { return start_; }
  std::size_t horizon() const { return horizon_; }
  bool in_grid(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  bool is_free(Cell c) const { return in_grid(c) && free_[flat(c)]; }

  /// Free cells in row-major order.
  const std::vector<Cell>& valid_cells() const { return valid_; }
  /// Dense index of a free cell within valid_cells().
  std::size_t index_of(Cell c) const;

  /// Deterministic transition. `t` is the zero-based step number within the episode.
  StepResult step(Cell state, int action, Cell goal, std::size_t t) const;
  Cell move(Cell state, int action) const;

  /// Continuous coordinates: cell (col, row) occupies [col, col+1) x [row, row+1).
  Box2 bounds() const { return {{0.0, 0.0}, {double(width_), double(height_)}}; }
  static Point2 center(Cell c) { return {c.col + 0.5, c.row + 0.5}; }
  /// Nearest free cell center to p; ties go to the lowest row-major index.
  Cell nearest_valid(const Point2& p) const;

  std::string to_text() const;

 private:
  Labyrinth(int width, int height, std::vector<bool> free, Cell start, std::size_t horizon);
  std::size_t flat(Cell c) const { return static_cast<std::size_t>(c.row * width_ + c.col); }

  int width_ = 0;
  int height_ = 0;
  std::vector<bool> free_;
  Cell start_;
  std::size_t horizon_ = 0;
  std::vector<Cell> valid_;
  std::vector<int> dense_index_;
};

/// reward = -Euclidean distance between cell centers.
double goal_reward(Cell at, Cell goal);

}  // namespace skewfit
