#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "skewfit/error.hpp"
#include "skewfit/metrics.hpp"
#include "skewfit/rng.hpp"

using namespace skewfit;

TEST_CASE("grid_entropy") {
  const GridSpec grid = entropy_grid(Box2{{0.0, 0.0}, {11.0, 11.0}});
  CHECK(grid.cell_count() == 121);

  SUBCASE("single cell") {
    const std::vector<Point2> s(50, Point2{3.3, 4.4});
    CHECK(grid_entropy(s, grid) == 0.0);
    CHECK(occupied_cells(s, grid) == 1);
  }
  SUBCASE("one state per cell") {
    std::vector<Point2> s;
    for (std::size_t k = 0; k < grid.cell_count(); ++k) s.push_back(grid.cell_center(k));
    CHECK(grid_entropy(s, grid) == doctest::Approx(std::log(121.0)).epsilon(1e-14));
    CHECK(occupied_cells(s, grid) == 121);
  }
  SUBCASE("two cells evenly") {
    const std::vector<Point2> s{{0.5, 0.5}, {0.5, 0.5}, {10.5, 10.5}, {10.5, 10.5}};
    CHECK(grid_entropy(s, grid) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("errors") {
    try {
      (void)grid_entropy(std::vector<Point2>{}, grid);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidInput);
    }
    try {
      (void)grid_entropy(std::vector<Point2>{{11.5, 2.0}}, grid);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfBounds);
    }
  }
  SUBCASE("invariant to reordering") {
    Rng rng = make_rng(41);
    std::vector<Point2> s;
    for (int i = 0; i < 300; ++i) s.push_back({11.0 * uniform01(rng), 11.0 * uniform01(rng) * uniform01(rng)});
    const double h = grid_entropy(s, grid);
    std::shuffle(s.begin(), s.end(), rng);
    CHECK(grid_entropy(s, grid) == doctest::Approx(h).epsilon(1e-14));
    std::reverse(s.begin(), s.end());
    CHECK(grid_entropy(s, grid) == doctest::Approx(h).epsilon(1e-14));
  }
}

TEST_CASE("count_entropy") {
  const std::vector<std::size_t> counts{3, 0, 1};
  CHECK(count_entropy(counts) == doctest::Approx(-(0.75 * std::log(0.75) + 0.25 * std::log(0.25))));
  CHECK(count_entropy(std::vector<std::size_t>{0, 7}) == 0.0);
}
