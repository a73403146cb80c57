#include "skewfit/metrics.hpp"

#include <cmath>
#include <vector>

#include "skewfit/error.hpp"

namespace skewfit {

namespace {

std::vector<std::size_t> cell_counts(std::span<const Point2> states, const GridSpec& grid) {
  std::vector<std::size_t> counts(grid.cell_count(), 0);
  for (const auto& s : states) {
    if (!grid.bounds.contains(s)) throw Error(ErrorCode::OutOfBounds, "state outside entropy grid");
    ++counts[grid.cell_of(s)];
  }
  return counts;
}

}  // namespace

GridSpec entropy_grid(const Box2& world, std::size_t resolution) {
  return GridSpec{world, resolution, resolution};
}

double count_entropy(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Error(ErrorCode::InvalidInput, "no observations");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double grid_entropy(std::span<const Point2> states, const GridSpec& grid) {
  if (states.empty()) throw Error(ErrorCode::InvalidInput, "empty state list");
  const auto counts = cell_counts(states, grid);
  return count_entropy(counts);
}

std::size_t occupied_cells(std::span<const Point2> states, const GridSpec& grid) {
  std::size_t n = 0;
  for (auto c : cell_counts(states, grid)) n += c > 0 ? 1 : 0;
  return n;
}

}  // namespace skewfit
