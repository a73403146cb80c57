#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "skewfit/environments.hpp"
#include "skewfit/error.hpp"
#include "skewfit/metrics.hpp"

using namespace skewfit;

namespace {

FourRooms noiseless(ReachMode mode = ReachMode::Projection) {
  FourRoomsConfig cfg;
  cfg.noise_sigma = 1e-300;
  cfg.mode = mode;
  return FourRooms(cfg);
}

// Closest free lattice point at 1e-3 spacing within a window around p.
double brute_force_distance(const FourRooms& env, const Point2& p, double radius) {
  const double step = 1e-3;
  const int n = static_cast<int>(2.0 * radius / step);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Point2 c{p.x - radius + i * step, p.y - radius + j * step};
      if (!env.is_free(c)) continue;
      best = std::min(best, distance(c, p));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("default layout") {
  const FourRooms env;
  CHECK(env.is_free({8.5, 2.5}));
  CHECK(env.is_free({2.5, 8.5}));
  CHECK_FALSE(env.is_free({5.5, 5.5}));
  CHECK_FALSE(env.is_free({5.5, 1.0}));
  CHECK(env.is_free({5.5, 2.5}));   // lower doorway in the vertical wall
  CHECK(env.is_free({5.5, 8.5}));
  CHECK(env.is_free({2.5, 5.5}));
  CHECK(env.is_free({8.5, 5.5}));
  CHECK(env.is_free({5.0, 1.0}));   // wall edges are free
  CHECK_FALSE(env.is_free({-0.1, 3.0}));
  CHECK_FALSE(env.is_free({3.0, 11.1}));
}

TEST_CASE("valid cells of the 11x11 discretization") {
  const FourRooms env;
  const auto grid = entropy_grid(env.world());
  CHECK(env.valid_cells(grid).size() == 104);

  FourRoomsConfig open;
  open.walls.clear();
  CHECK(FourRooms(open).valid_cells(grid).size() == 121);
}

TEST_CASE("configuration errors") {
  FourRoomsConfig cfg;
  cfg.noise_sigma = 0.0;
  CHECK_THROWS_AS(FourRooms{cfg}, Error);
  cfg = {};
  cfg.start = {5.5, 5.5};
  CHECK_THROWS_AS(FourRooms{cfg}, Error);
  cfg = {};
  // Closing the lower doorway of the vertical wall and both right doorways
  // seals off the bottom-right room.
  cfg.walls.push_back({{5.0, 2.0}, {6.0, 3.0}});
  cfg.walls.push_back({{8.0, 5.0}, {9.0, 6.0}});
  CHECK_THROWS_AS(FourRooms{cfg}, Error);
}

TEST_CASE("projection is the identity on free space") {
  const FourRooms env = noiseless();
  for (const Point2 p : {Point2{1.0, 1.0}, Point2{8.5, 2.5}, Point2{3.3, 9.7}, Point2{5.5, 2.5}, Point2{0.0, 0.0}}) {
    CHECK(env.project(p) == p);
    if (p.x > 0.0) CHECK(env.reach(p, 3) == p);
  }
}

TEST_CASE("projection matches a brute-force grid oracle") {
  const FourRooms env;
  const std::vector<Point2> cases{{5.4, 1.0},  {5.7, 4.2},  {5.52, 5.47}, {5.5, 5.5},
                                  {2.02, 5.3}, {8.9, 5.6},  {-0.3, 4.0},  {11.4, 11.2},
                                  {5.1, 2.05}, {5.95, 7.99}};
  for (const auto& p : cases) {
    const Point2 q = env.project(p);
    CHECK(env.is_free(q));
    const double oracle = brute_force_distance(env, p, 0.8);
    CHECK(distance(p, q) <= oracle + 1e-8);
    CHECK(distance(p, q) >= oracle - 1.5e-3);
  }
}

TEST_CASE("goal at a doorway center") {
  const FourRooms env;
  const Point2 door{5.5, 2.5};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Point2 r = env.reach(door, seed);
    CHECK(env.is_free(r));
    CHECK(distance(r, door) < 6.0 * env.config().noise_sigma);
  }
}

TEST_CASE("reach is deterministic given a seed") {
  const FourRooms env;
  CHECK(env.reach({3.0, 3.0}, 11) == env.reach({3.0, 3.0}, 11));
  CHECK_FALSE(env.reach({3.0, 3.0}, 11) == env.reach({3.0, 3.0}, 12));
}

TEST_CASE("every reached state lies in free space") {
  for (auto mode : {ReachMode::Projection, ReachMode::StopAtWall}) {
    FourRoomsConfig cfg;
    cfg.mode = mode;
    const FourRooms env(cfg);
    Rng rng = make_rng(99, int(mode));
    std::size_t violations = 0;
    for (int i = 0; i < 100000; ++i) {
      const Point2 g{11.0 * uniform01(rng), 11.0 * uniform01(rng)};
      violations += !env.is_free(env.reach(g, rng));
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("noise rarely carries the agent out of the start room") {
  const FourRooms env;
  const Box2 room = env.config().start_room;
  Rng rng = make_rng(5);
  std::size_t escaped = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Point2 g{room.lo.x + room.width() * uniform01(rng), room.lo.y + room.height() * uniform01(rng)};
    if (!env.is_free(g)) continue;
    escaped += !room.contains(env.reach(g, rng));
  }
  CHECK(double(escaped) / n < 0.01);
}

TEST_CASE("stop-at-wall mode halts at the first wall") {
  const FourRooms env = noiseless(ReachMode::StopAtWall);
  // From the start (8.5, 2.5) toward (2.5, 0.5) the path meets the vertical
  // wall at x = 6, below the doorway.
  const Point2 r = env.reach({2.5, 0.5}, 1);
  CHECK(r.x == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(r.y == doctest::Approx(2.5 - 2.5 / 3.0).epsilon(1e-6));
  CHECK(env.is_free(r));
  // Within the start room the goal is reached exactly.
  CHECK(env.reach({9.5, 1.5}, 1) == Point2{9.5, 1.5});
}

TEST_CASE("labyrinth step") {
  const auto lab = Labyrinth::parse(
      "S..\n"
      ".#.\n"
      "...\n",
      10);
  CHECK(lab.valid_cells().size() == 8);
  const Cell goal{2, 2};

  SUBCASE("move into a wall leaves the state unchanged") {
    const auto r = lab.step({1, 0}, int(Action::South), goal, 0);
    CHECK(r.next == Cell{1, 0});
    CHECK(r.reward == doctest::Approx(-std::sqrt(5.0)));
    CHECK_FALSE(r.done);
    CHECK(lab.step({0, 0}, int(Action::West), goal, 0).next == Cell{0, 0});
  }
  SUBCASE("step onto the goal") {
    const auto r = lab.step({2, 1}, int(Action::South), goal, 0);
    CHECK(r.next == goal);
    CHECK(r.reward == 0.0);
    CHECK(r.done);
  }
  SUBCASE("adjacent to goal, wrong direction") {
    const auto r = lab.step({2, 1}, int(Action::North), goal, 0);
    CHECK(r.next == Cell{2, 0});
    CHECK(r.reward == doctest::Approx(-2.0));
    const auto w = lab.step({1, 2}, int(Action::West), goal, 0);
    CHECK(w.next == Cell{0, 2});
    CHECK(w.reward == doctest::Approx(-2.0));
  }
  SUBCASE("horizon ends the episode") {
    CHECK(lab.step({0, 0}, int(Action::East), goal, 9).done);
    CHECK_FALSE(lab.step({0, 0}, int(Action::East), goal, 8).done);
  }
  SUBCASE("invalid action") {
    try {
      (void)lab.step({0, 0}, 4, goal, 0);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidInput);
    }
    CHECK_THROWS_AS((void)lab.step({0, 0}, -1, goal, 0), Error);
  }
}

TEST_CASE("labyrinth dynamics are deterministic and rewards are nonpositive") {
  const auto lab = Labyrinth::spiral15();
  for (const auto& s : lab.valid_cells())
    for (int a = 0; a < kActionCount; ++a) {
      CHECK(lab.move(s, a) == lab.move(s, a));
      CHECK(lab.is_free(lab.move(s, a)));
    }
  for (const auto& s : lab.valid_cells())
    for (const auto& g : lab.valid_cells()) {
      const double r = goal_reward(s, g);
      CHECK(r <= 0.0);
      CHECK((r == 0.0) == (s == g));
    }
}

TEST_CASE("labyrinth maps") {
  SUBCASE("built-in spiral") {
    const auto lab = Labyrinth::spiral15();
    CHECK(lab.width() == 15);
    CHECK(lab.height() == 15);
    CHECK(lab.horizon() == 60);
    CHECK(lab.start() == Cell{1, 1});
    CHECK(lab.valid_cells().size() == 97);
    CHECK(Labyrinth::parse(lab.to_text(), 60).to_text() == lab.to_text());
  }
  SUBCASE("map file matches the built-in spiral") {
    const auto lab = Labyrinth::load(std::string(SKEWFIT_SOURCE_DIR) + "/maps/spiral15.txt", 60);
    CHECK(lab.to_text() == Labyrinth::spiral15().to_text());
  }
  SUBCASE("wall-free grid") {
    const auto lab = Labyrinth::open_grid(4, 3, {0, 0}, 10);
    CHECK(lab.valid_cells().size() == 12);
    CHECK(lab.index_of({3, 2}) == 11);
  }
  SUBCASE("enclosed pocket is rejected") {
    CHECK_THROWS_AS(Labyrinth::parse("S.#.\n..#.\n####\n", 5), Error);
  }
  SUBCASE("malformed maps") {
    CHECK_THROWS_AS(Labyrinth::parse("", 5), Error);
    CHECK_THROWS_AS(Labyrinth::parse("S..\n..\n", 5), Error);
    CHECK_THROWS_AS(Labyrinth::parse("...\n...\n", 5), Error);
    CHECK_THROWS_AS(Labyrinth::parse("S.S\n...\n", 5), Error);
    CHECK_THROWS_AS(Labyrinth::parse("S.x\n...\n", 5), Error);
    CHECK_THROWS_AS(Labyrinth::load("/nonexistent/map.txt", 5), Error);
  }
  SUBCASE("nearest valid cell") {
    const auto lab = Labyrinth::spiral15();
    CHECK(lab.nearest_valid({1.5, 1.5}) == Cell{1, 1});
    CHECK(lab.is_free(lab.nearest_valid({7.5, 2.5})));
    CHECK(lab.nearest_valid({100.0, 100.0}) == Cell{13, 13});
  }
}
