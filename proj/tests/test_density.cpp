#include <doctest.h>

#include <cmath>
#include <numeric>

#include "skewfit/density.hpp"
#include "skewfit/error.hpp"

using namespace skewfit;

namespace {

const Box2 kUnit{{0.0, 0.0}, {1.0, 1.0}};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected skewfit::Error");
  return ErrorCode::InvalidInput;
}

// Midpoint-rule integral of exp(log_density) over the model's bounds.
double integrate(const DensityModel& m, std::size_t n) {
  const Box2& b = model_bounds(m);
  const double dx = b.width() / double(n), dy = b.height() / double(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      total += std::exp(log_density(m, {b.lo.x + (i + 0.5) * dx, b.lo.y + (j + 0.5) * dy})) * dx * dy;
  return total;
}

// Simpson's rule for the mass of N(c, h^2) on [lo, hi]; independent of erfc.
double gaussian_mass_1d(double c, double h, double lo, double hi) {
  const int n = 2000;
  const double step = (hi - lo) / n;
  auto f = [&](double x) { return std::exp(-(x - c) * (x - c) / (2 * h * h)) / (std::sqrt(2 * M_PI) * h); };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * step) * (i % 2 ? 4 : 2);
  return s * step / 3.0;
}

}  // namespace

TEST_CASE("histogram fit: one sample per corner cell gives equal masses") {
  const GridSpec grid{kUnit, 2, 2};
  const std::vector<Point2> s{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  const auto m = fit_histogram(s, std::vector<double>(4, 1.0), grid, 0.0);
  for (double mass : m.cell_mass()) CHECK(mass == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("histogram fit: weights (3, 1) on two cells") {
  const GridSpec grid{kUnit, 2, 1};
  const std::vector<Point2> s{{0.2, 0.5}, {0.7, 0.5}};
  const auto m = fit_histogram(s, std::vector<double>{3.0, 1.0}, grid, 0.0);
  CHECK(m.cell_mass()[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(m.cell_mass()[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("histogram fit: floor 0.1 spread over 10 cells") {
  const GridSpec grid{{{0.0, 0.0}, {10.0, 1.0}}, 10, 1};
  const std::vector<Point2> s(7, Point2{3.5, 0.5});
  const auto m = fit_histogram(s, std::vector<double>(7, 1.0), grid, 0.1);
  for (std::size_t c = 0; c < 10; ++c) CHECK(m.cell_mass()[c] == doctest::Approx(c == 3 ? 0.91 : 0.01).epsilon(1e-12));
}

TEST_CASE("fit_weighted error paths") {
  DensityConfig cfg;
  cfg.grid = GridSpec{kUnit, 2, 2};
  const std::vector<Point2> none;
  const std::vector<double> no_w;
  CHECK(code_of([&] { (void)fit_weighted(none, no_w, cfg); }) == ErrorCode::InvalidInput);
  const std::vector<Point2> two{{0.1, 0.1}, {0.9, 0.9}};
  CHECK(code_of([&] { (void)fit_weighted(two, std::vector<double>{0.0, 0.0}, cfg); }) == ErrorCode::InvalidInput);
  const std::vector<Point2> outside{{1.5, 0.5}};
  CHECK(code_of([&] { (void)fit_weighted(outside, std::vector<double>{1.0}, cfg); }) == ErrorCode::OutOfBounds);
  cfg.family = DensityFamily::Kde;
  CHECK(code_of([&] { (void)fit_weighted(outside, std::vector<double>{1.0}, cfg); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { (void)fit_weighted(two, std::vector<double>{0.0, 0.0}, cfg); }) == ErrorCode::InvalidInput);
}

TEST_CASE("log_density of histograms") {
  const DensityModel uniform = GridHistogramModel::uniform(GridSpec{kUnit, 2, 2});
  for (double x : {0.1, 0.5, 0.9})
    for (double y : {0.0, 0.3, 1.0}) CHECK(log_density(uniform, {x, y}) == doctest::Approx(0.0));

  // Two cells of area 0.5 each.
  const DensityModel m = GridHistogramModel(GridSpec{kUnit, 2, 1}, {0.75, 0.25}, 0.0);
  CHECK(log_density(m, {0.3, 0.3}) == doctest::Approx(std::log(1.5)));
  CHECK(log_density(m, {0.3, 0.3}) == doctest::Approx(0.4055).epsilon(1e-4));
  CHECK(code_of([&] { (void)log_density(m, {-0.1, 0.5}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("cell boundaries belong to the lower-index cell") {
  const GridSpec grid{{{0.0, 0.0}, {4.0, 4.0}}, 4, 4};
  CHECK(grid.cell_of({1.0, 0.5}) == 0);
  CHECK(grid.cell_of({1.0 + 1e-12, 0.5}) == 1);
  CHECK(grid.cell_of({0.0, 0.0}) == 0);
  CHECK(grid.cell_of({4.0, 4.0}) == 15);
  CHECK(grid.cell_of({2.5, 2.0}) == 1 * 4 + 2);
}

TEST_CASE("KDE log_density at a single center matches the closed form") {
  const Box2 box{{0.0, 0.0}, {2.0, 3.0}};
  const double h = 0.25, lambda = 1e-3;
  const Point2 c{0.3, 2.9};  // close to two edges so truncation matters
  const auto m = fit_kde(std::vector<Point2>{c}, std::vector<double>{1.0}, box, h, lambda);
  const double k0 = 1.0 / (2 * M_PI * h * h);
  const double zk = gaussian_mass_1d(c.x, h, box.lo.x, box.hi.x) * gaussian_mass_1d(c.y, h, box.lo.y, box.hi.y);
  const double expected = std::log((1 - lambda) * k0 / zk + lambda / box.area());
  CHECK(m.log_density(c) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("sampling concentrates on a dominant cell") {
  const GridSpec grid{kUnit, 10, 10};
  std::vector<double> mass(100, 0.002 / 99.0);
  mass[42] = 0.998;
  const DensityModel m = GridHistogramModel(grid, mass, 0.0);
  const auto draws = sample(m, 10000, 5);
  std::size_t inside = 0;
  for (const auto& p : draws) inside += grid.cell_of(p) == 42;
  CHECK(inside >= 9900);
}

TEST_CASE("uniform histogram sampling passes a chi-square test") {
  const GridSpec grid{kUnit, 4, 4};
  const DensityModel m = GridHistogramModel::uniform(grid);
  const auto draws = sample(m, 100000, 11);
  std::vector<double> counts(16, 0.0);
  for (const auto& p : draws) counts[grid.cell_of(p)] += 1.0;
  const double expected = 100000.0 / 16.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.999 quantile of chi-square with 15 degrees of freedom.
  CHECK(chi2 < 37.6973);
}

TEST_CASE("sampling is reproducible by seed") {
  const DensityModel h = GridHistogramModel::uniform(GridSpec{kUnit, 3, 3});
  CHECK(sample(h, 50, 99) == sample(h, 50, 99));
  CHECK(sample(h, 50, 99) != sample(h, 50, 100));
  const DensityModel k = fit_kde(std::vector<Point2>{{0.5, 0.5}, {0.1, 0.9}}, std::vector<double>{1, 2}, kUnit, 0.1, 0.01);
  CHECK(sample(k, 50, 3) == sample(k, 50, 3));
  CHECK_THROWS_AS((void)sample(h, 0, 1), Error);
}

TEST_CASE("densities integrate to one and respect their floors") {
  const Box2 box{{0.0, 0.0}, {11.0, 11.0}};
  Rng rng = make_rng(2024);
  std::vector<Point2> pts;
  std::vector<double> w;
  for (int i = 0; i < 40; ++i) {
    pts.push_back({uniform01(rng) * 11.0, uniform01(rng) * 11.0});
    w.push_back(uniform01(rng));
  }
  pts.push_back({0.0, 11.0});  // a corner center exercises truncation
  w.push_back(1.0);

  SUBCASE("histogram") {
    const DensityModel m = fit_histogram(pts, w, GridSpec{box, 11, 11}, 1e-3);
    CHECK(integrate(m, 440) == doctest::Approx(1.0).epsilon(1e-3));
    const double floor_density = 1e-3 / 121.0;  // per-cell floor mass over unit cell area
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j)
        CHECK(std::exp(log_density(m, {i * 0.11, j * 0.11})) >= floor_density * (1 - 1e-12));
  }
  SUBCASE("kde") {
    const DensityModel m = fit_kde(pts, w, box, 0.25, 1e-3);
    CHECK(integrate(m, 600) == doctest::Approx(1.0).epsilon(1e-3));
    const double floor_density = 1e-3 / box.area();
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) CHECK(std::exp(log_density(m, {i * 0.11, j * 0.11})) >= floor_density);
  }
}

TEST_CASE("property: floor-free histogram fit equals the normalized weighted histogram") {
  Rng rng = make_rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nx = 1 + uniform_index(rng, 6), ny = 1 + uniform_index(rng, 6);
    const GridSpec grid{{{-1.0, 2.0}, {3.0, 5.0}}, nx, ny};
    const std::size_t n = 1 + uniform_index(rng, 60);
    std::vector<Point2> pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back({-1.0 + 4.0 * uniform01(rng), 2.0 + 3.0 * uniform01(rng)});
      w.push_back(0.1 + uniform01(rng));
    }
    const auto m = fit_histogram(pts, w, grid, 0.0);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Box2 cell = grid.cell_box(c);
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (pts[i].x > cell.lo.x && pts[i].x <= cell.hi.x && pts[i].y > cell.lo.y && pts[i].y <= cell.hi.y) mass += w[i];
      CHECK(m.cell_mass()[c] == doctest::Approx(mass / total).epsilon(1e-12));
    }
  }
}

TEST_CASE("fitting 1e5 samples of a known histogram recovers it") {
  const GridSpec grid{kUnit, 5, 5};
  Rng rng = make_rng(3);
  std::vector<double> mass(25);
  for (double& m : mass) m = 0.2 + uniform01(rng);
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= total;
  const DensityModel truth = GridHistogramModel(grid, mass, 0.0);
  const auto draws = sample(truth, 100000, 8);
  const auto fit = fit_histogram(draws, std::vector<double>(draws.size(), 1.0), grid, 0.0);
  double l1 = 0.0;
  for (std::size_t c = 0; c < 25; ++c) l1 += std::abs(fit.cell_mass()[c] - mass[c]);
  CHECK(l1 < 0.02);
}

TEST_CASE("models survive a JSON checkpoint") {
  const DensityModel h = fit_histogram(std::vector<Point2>{{0.2, 0.2}, {0.8, 0.6}}, std::vector<double>{1.0, 3.0},
                                       GridSpec{kUnit, 3, 2}, 1e-3);
  const DensityModel k = fit_kde(std::vector<Point2>{{0.2, 0.2}, {0.8, 0.6}}, std::vector<double>{1.0, 3.0}, kUnit, 0.2, 0.01);
  for (const auto& m : {h, k}) {
    const auto back = density_from_json(nlohmann::json::parse(to_json(m).dump()));
    for (double x : {0.05, 0.5, 0.95})
      CHECK(log_density(back, {x, 0.4}) == doctest::Approx(log_density(m, {x, 0.4})).epsilon(1e-14));
  }
  CHECK_THROWS_AS((void)density_from_json(nlohmann::json{{"family", "vae"}, {"bounds", {0, 0, 1, 1}}}), Error);
}
