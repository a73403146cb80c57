#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "skewfit/geometry.hpp"

namespace skewfit {

/// One row of an entropy/coverage curve.
struct EntropyReport {
  std::size_t iteration = 0;
  double entropy_nats = 0.0;
  std::size_t cells_visited = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double z_alpha = 0.0;
};

/// The 11x11 discretization of a square world used for every entropy curve.
GridSpec entropy_grid(const Box2& world, std::size_t resolution = 11);

/// Plug-in entropy (nats) of cell-occupancy frequencies. Throws InvalidInput on
/// an empty list and OutOfBounds for points outside the grid.
double grid_entropy(std::span<const Point2> states, const GridSpec& grid);

/// Number of distinct grid cells holding at least one state.
std::size_t occupied_cells(std::span<const Point2> states, const GridSpec& grid);

/// Entropy of an explicit count vector; zero counts contribute nothing.
double count_entropy(std::span<const std::size_t> counts);

}  // namespace skewfit
