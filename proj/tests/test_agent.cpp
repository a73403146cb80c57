#include <doctest.h>

#include <array>
#include <cmath>
#include <queue>

#include "skewfit/agent.hpp"
#include "skewfit/error.hpp"

using namespace skewfit;

namespace {

std::vector<std::vector<int>> bfs_distances(const Labyrinth& env) {
  const auto n = env.valid_cells().size();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (std::size_t src = 0; src < n; ++src) {
    std::queue<Cell> frontier;
    frontier.push(env.valid_cells()[src]);
    dist[src][src] = 0;
    while (!frontier.empty()) {
      const Cell c = frontier.front();
      frontier.pop();
      for (int a = 0; a < kActionCount; ++a) {
        const Cell next = env.move(c, a);
        auto& d = dist[src][env.index_of(next)];
        if (d < 0) {
          d = dist[src][env.index_of(c)] + 1;
          frontier.push(next);
        }
      }
    }
  }
  return dist;
}

}  // namespace

TEST_CASE("select_action") {
  SUBCASE("epsilon 1 is uniform") {
    const GoalQTable table(2, 0.1, 0.9, 1.0);
    Rng rng = make_rng(3);
    std::array<double, 4> freq{};
    for (int i = 0; i < 10000; ++i) freq[std::size_t(select_action(table, 0, 1, rng))] += 1e-4;
    for (double f : freq) CHECK(std::abs(f - 0.25) < 0.02);
  }
  SUBCASE("epsilon 0 picks the unique maximum") {
    GoalQTable table(2, 0.1, 0.9, 0.0);
    table.at(0, 1, 2) = 0.5;
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(select_action(table, 0, 1, seed) == 2);
  }
  SUBCASE("ties go to the lower index") {
    GoalQTable table(2, 0.1, 0.9, 0.0);
    table.at(0, 1, 1) = 1.0;
    table.at(0, 1, 3) = 1.0;
    CHECK(select_action(table, 0, 1, 7) == 1);
    CHECK(select_action(GoalQTable(2, 0.1, 0.9, 0.0), 1, 0, 7) == 0);
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(GoalQTable(2, -0.1, 0.9, 0.1), Error);
    CHECK_THROWS_AS(GoalQTable(2, 0.1, 1.0, 0.1), Error);
    CHECK_THROWS_AS(GoalQTable(2, 0.1, 0.9, 1.5), Error);
  }
}

TEST_CASE("relabel") {
  const auto env = Labyrinth::spiral15();
  const Transition t{{1, 1}, int(Action::East), {2, 1}, {5, 1}, -3.0, false};
  const std::vector<Cell> future{{3, 1}, {4, 1}};
  const SkewedEmpirical skewed{{{8.5, 1.5}}, {1.0}, 1.0};

  SUBCASE("category frequencies") {
    Rng rng = make_rng(21);
    std::array<double, 3> freq{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) freq[std::size_t(relabel(t, future, skewed, env, rng).source)] += 1.0 / n;
    CHECK(std::abs(freq[0] - 0.5) < 0.01);
    CHECK(std::abs(freq[1] - 0.3) < 0.01);
    CHECK(std::abs(freq[2] - 0.2) < 0.01);
  }
  SUBCASE("empty future list") {
    Rng rng = make_rng(22);
    std::array<double, 3> freq{};
    const int n = 20000;
    for (int i = 0; i < n; ++i) freq[std::size_t(relabel(t, {}, skewed, env, rng).source)] += 1.0 / n;
    CHECK(std::abs(freq[0] - 0.5) < 0.015);
    CHECK(freq[1] == 0.0);
    CHECK(std::abs(freq[2] - 0.5) < 0.015);
  }
  SUBCASE("each branch returns its own goal") {
    Rng rng = make_rng(23);
    for (int i = 0; i < 2000; ++i) {
      const auto d = relabel(t, future, skewed, env, rng);
      switch (d.source) {
        case RelabelSource::Skewed: CHECK(d.goal == Cell{8, 1}); break;
        case RelabelSource::Future: CHECK((d.goal == future[0] || d.goal == future[1])); break;
        case RelabelSource::Original: CHECK(d.goal == t.goal); break;
      }
    }
  }
  SUBCASE("skewed atoms inside walls snap to free cells") {
    Rng rng = make_rng(24);
    const SkewedEmpirical in_walls{{{0.5, 0.5}, {7.5, 2.5}, {14.5, 7.0}, {6.2, 6.6}}, {0.25, 0.25, 0.25, 0.25}, 4.0};
    for (int i = 0; i < 5000; ++i) CHECK(env.is_free(relabel(t, future, in_walls, env, rng).goal));
  }
  SUBCASE("empty skewed distribution") {
    CHECK_THROWS_AS((void)relabel(t, future, SkewedEmpirical{}, env, std::uint64_t{1}), Error);
  }
}

TEST_CASE("with_goal rewrites reward and termination") {
  const Transition t{{1, 1}, int(Action::East), {2, 1}, {5, 1}, -3.0, false};
  const auto reached = with_goal(t, {2, 1});
  CHECK(reached.reward == 0.0);
  CHECK(reached.done);
  const auto far = with_goal(t, {2, 4});
  CHECK(far.reward == doctest::Approx(-3.0));
  CHECK_FALSE(far.done);
}

TEST_CASE("q_update") {
  const auto env = Labyrinth::open_grid(2, 1, {0, 0}, 5);
  SUBCASE("terminal transition with unit learning rate") {
    GoalQTable table(2, 1.0, 0.9, 0.1);
    table.at(1, 1, 0) = 7.0;
    const Transition t{{0, 0}, int(Action::East), {1, 0}, {1, 0}, 0.0, true};
    CHECK(q_update(table, env, t) == 0.0);
    const Transition u{{0, 0}, int(Action::West), {0, 0}, {0, 0}, -0.25, true};
    CHECK(q_update(table, env, u) == -0.25);
    CHECK(table.at(0, 0, int(Action::West)) == -0.25);
  }
  SUBCASE("zero learning rate leaves the table unchanged") {
    GoalQTable table(2, 0.0, 0.9, 0.1);
    table.at(0, 1, int(Action::East)) = 3.5;
    const Transition t{{0, 0}, int(Action::East), {1, 0}, {1, 0}, 0.0, true};
    CHECK(q_update(table, env, t) == 3.5);
    CHECK(table.at(0, 1, int(Action::East)) == 3.5);
  }
  SUBCASE("sweeps match a value-iteration oracle") {
    const double gamma = 0.9;
    GoalQTable table(2, 1.0, gamma, 0.1);
    std::vector<double> oracle(table.values().begin(), table.values().end());
    auto idx = [](std::size_t s, std::size_t g, int a) { return (s * 2 + g) * 4 + std::size_t(a); };
    for (int sweep = 0; sweep < 3; ++sweep) {
      const GoalQTable snapshot = table;
      std::vector<double> next(oracle.size());
      for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t g = 0; g < 2; ++g)
          for (int a = 0; a < kActionCount; ++a) {
            const Cell sc = env.valid_cells()[s], gc = env.valid_cells()[g];
            const Cell nc = env.move(sc, a);
            const auto ns = env.index_of(nc);
            const double r = -distance(Labyrinth::center(nc), Labyrinth::center(gc));
            double best = oracle[idx(ns, g, 0)];
            for (int b = 1; b < kActionCount; ++b) best = std::max(best, oracle[idx(ns, g, b)]);
            next[idx(s, g, a)] = r + (nc == gc ? 0.0 : gamma * best);

            GoalQTable scratch = snapshot;
            const Transition t{sc, a, nc, gc, r, nc == gc};
            table.at(s, g, a) = q_update(scratch, env, t);
          }
      oracle = next;
      for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(table.values()[i] == doctest::Approx(oracle[i]).epsilon(1e-14));
    }
    // s=0, g=1, East after three sweeps: reward 0 on arrival.
    CHECK(table.at(0, 1, int(Action::East)) == 0.0);
    // s=0, g=1, West: -1 now, then the best continuation from s=0 is 0.
    CHECK(table.at(0, 1, int(Action::West)) == doctest::Approx(-1.0));
  }
  SUBCASE("partial learning rate") {
    GoalQTable table(2, 0.25, 0.5, 0.1);
    table.at(0, 1, int(Action::West)) = 2.0;
    table.at(0, 1, int(Action::North)) = -4.0;
    const Transition t{{0, 0}, int(Action::West), {0, 0}, {1, 0}, -1.0, false};
    // 0.75 * 2 + 0.25 * (-1 + 0.5 * 2)
    CHECK(q_update(table, env, t) == doctest::Approx(1.5));
  }
}

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buffer(3);
  auto episode = std::make_shared<const std::vector<Cell>>(std::vector<Cell>{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}});
  for (int i = 0; i < 5; ++i) buffer.push({Transition{{i, 0}, 0, {i + 1, 0}, {0, 0}, 0.0, false}, episode, std::size_t(i)});
  CHECK(buffer.size() == 3);
  CHECK(buffer.capacity() == 3);
  CHECK(buffer[0].transition.state == Cell{2, 0});
  CHECK(buffer[1].transition.state == Cell{3, 0});
  CHECK(buffer[2].transition.state == Cell{4, 0});
  CHECK(buffer[0].future_states().size() == 3);
  CHECK(buffer[2].future_states().size() == 1);
  CHECK(buffer[2].future_states()[0] == Cell{5, 0});
  CHECK_THROWS_AS(ReplayBuffer(0), Error);
}

TEST_CASE("train_joint") {
  const auto env = Labyrinth::spiral15();
  SUBCASE("zero epochs") {
    const auto r = train_joint(env, JointConfig::for_labyrinth(env, -1.0), 0, 1);
    CHECK(r.reports.empty());
    CHECK(r.coverage.empty());
    for (double v : r.table.values()) CHECK(v == 0.0);
  }
  SUBCASE("a goal fixed at the start keeps coverage near the start") {
    auto cfg = JointConfig::for_labyrinth(env, -1.0);
    cfg.goal_mode = GoalMode::FixedCell;
    cfg.fixed_goal = env.start();
    const auto r = train_joint(env, cfg, 40, 2);
    REQUIRE(r.coverage.size() == 40);
    CHECK(r.coverage.back().fraction_of_valid < 0.25);
    CHECK(r.coverage[30].cells_visited == r.coverage.back().cells_visited);
  }
  SUBCASE("coverage is cumulative and the table stays bounded") {
    const auto cfg = JointConfig::for_labyrinth(env, -1.0);
    const auto r = train_joint(env, cfg, 30, 3);
    for (std::size_t i = 1; i < r.coverage.size(); ++i)
      CHECK(r.coverage[i].cells_visited >= r.coverage[i - 1].cells_visited);
    double r_max = 0.0;
    for (const auto& a : env.valid_cells())
      for (const auto& b : env.valid_cells()) r_max = std::max(r_max, -goal_reward(a, b));
    for (double v : r.table.values()) {
      CHECK(std::isfinite(v));
      CHECK(std::abs(v) <= r_max / (1.0 - cfg.discount));
    }
    CHECK(r.reports.size() == 30);
    CHECK(r.reports.back().alpha == -1.0);
  }
  SUBCASE("deterministic given a seed") {
    const auto cfg = JointConfig::for_labyrinth(env, -1.0);
    const auto a = train_joint(env, cfg, 5, 9);
    const auto b = train_joint(env, cfg, 5, 9);
    CHECK(std::equal(a.table.values().begin(), a.table.values().end(), b.table.values().begin()));
    CHECK(a.coverage.back().cells_visited == b.coverage.back().cells_visited);
  }
  SUBCASE("fixed goal must be free") {
    auto cfg = JointConfig::for_labyrinth(env, -1.0);
    cfg.goal_mode = GoalMode::FixedCell;
    cfg.fixed_goal = {0, 0};
    CHECK_THROWS_AS(train_joint(env, cfg, 1, 1), Error);
  }
}

TEST_CASE("greedy policy on an open grid is near shortest-path optimal") {
  const auto env = Labyrinth::open_grid(7, 7, {3, 3}, 30);
  auto cfg = JointConfig::for_labyrinth(env, 0.0);
  cfg.goal_mode = GoalMode::UniformValid;
  const auto result = train_joint(env, cfg, 2000, 5);
  const auto dist = bfs_distances(env);
  const auto& cells = env.valid_cells();
  const auto s = env.index_of(env.start());
  std::size_t failures = 0;
  for (std::size_t g = 0; g < cells.size(); ++g) {
    const auto steps = greedy_steps_to_goal(result.table, env, env.start(), cells[g], 60);
    if (!steps || *steps > std::size_t(2 * dist[s][g])) ++failures;
  }
  CHECK(failures == 0);
}
