#include "skewfit/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "skewfit/error.hpp"

namespace skewfit {

namespace {

constexpr double kTwoPi = 6.283185307179586;

void check_weights(std::span<const Point2> samples, std::span<const double> weights) {
  if (samples.empty()) throw Error(ErrorCode::InvalidInput, "empty sample list");
  if (weights.size() != samples.size())
    throw Error(ErrorCode::InvalidInput, "weights and samples differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw Error(ErrorCode::InvalidInput, "weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidInput, "weights sum to zero");
}

void check_inside(const Box2& bounds, const Point2& p) {
  if (!bounds.contains(p))
    throw Error(ErrorCode::OutOfBounds,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside bounds");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Standard normal truncated to [a, b]. Rejection is fine here: the kernel
// center always lies inside bounds, so acceptance is at least 1/4 in 2D.
double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  for (;;) {
    const double v = mean + sd * standard_normal(rng);
    if (v >= lo && v <= hi) return v;
  }
}

Point2 uniform_in(Rng& rng, const Box2& box) {
  return {box.lo.x + uniform01(rng) * box.width(), box.lo.y + uniform01(rng) * box.height()};
}

}  // namespace

// ---------------------------------------------------------------------------
// GridHistogramModel

GridHistogramModel::GridHistogramModel(GridSpec grid, std::vector<double> cell_mass, double floor)
    : grid_(grid), cell_mass_(std::move(cell_mass)), floor_(floor), cells_(cell_mass_) {
  if (grid_.nx == 0 || grid_.ny == 0 || !(grid_.bounds.area() > 0.0))
    throw Error(ErrorCode::InvalidInput, "histogram grid must have positive resolution and area");
  if (cell_mass_.size() != grid_.cell_count())
    throw Error(ErrorCode::InvalidInput, "cell mass count does not match grid");
  if (!(floor_ >= 0.0 && floor_ < 1.0))
    throw Error(ErrorCode::InvalidInput, "floor must lie in [0, 1)");
  const double total = std::accumulate(cell_mass_.begin(), cell_mass_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidInput, "cell masses must sum to 1");
  const double min_mass = floor_ / static_cast<double>(cell_mass_.size());
  for (double m : cell_mass_) {
    if (!(m >= 0.0) || m < min_mass * (1.0 - 1e-12))
      throw Error(ErrorCode::InvalidInput, "cell mass below floor");
  }
}

GridHistogramModel GridHistogramModel::uniform(const GridSpec& grid, double floor) {
  const auto k = grid.cell_count();
  return GridHistogramModel(grid, std::vector<double>(k, 1.0 / static_cast<double>(k)), floor);
}

double GridHistogramModel::log_density(const Point2& p) const {
  check_inside(grid_.bounds, p);
  return std::log(cell_mass_[grid_.cell_of(p)] / grid_.cell_area());
}

void GridHistogramModel::sample_into(Rng& rng, std::size_t n, std::vector<Point2>& out) const {
  out.reserve(out.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cell = cells_(rng);
    out.push_back(uniform_in(rng, grid_.cell_box(cell)));
  }
}

// ---------------------------------------------------------------------------
// KdeModel

KdeModel::KdeModel(Box2 bounds, std::vector<Point2> centers, std::vector<double> center_weights,
                   double bandwidth, double uniform_mix)
    : bounds_(bounds),
      centers_(std::move(centers)),
      weights_(std::move(center_weights)),
      bandwidth_(bandwidth),
      uniform_mix_(uniform_mix),
      picker_(weights_) {
  if (centers_.empty() || centers_.size() != weights_.size())
    throw Error(ErrorCode::InvalidInput, "KDE needs one weight per center");
  if (!(bandwidth_ > 0.0)) throw Error(ErrorCode::InvalidInput, "bandwidth must be positive");
  if (!(uniform_mix_ > 0.0 && uniform_mix_ < 1.0))
    throw Error(ErrorCode::InvalidInput, "uniform_mix must lie in (0, 1)");
  if (!(bounds_.area() > 0.0)) throw Error(ErrorCode::InvalidInput, "bounds must have area");
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidInput, "center weights must sum to 1");
  scaled_weights_.reserve(centers_.size());
  const double norm = kTwoPi * bandwidth_ * bandwidth_;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    check_inside(bounds_, centers_[i]);
    if (!(weights_[i] >= 0.0)) throw Error(ErrorCode::InvalidInput, "negative center weight");
    scaled_weights_.push_back(weights_[i] / (kernel_mass_inside(centers_[i]) * norm));
  }
}

double KdeModel::kernel_mass_inside(const Point2& c) const {
  const double h = bandwidth_;
  const double mx = normal_cdf((bounds_.hi.x - c.x) / h) - normal_cdf((bounds_.lo.x - c.x) / h);
  const double my = normal_cdf((bounds_.hi.y - c.y) / h) - normal_cdf((bounds_.lo.y - c.y) / h);
  return mx * my;
}

double KdeModel::density(const Point2& p) const {
  check_inside(bounds_, p);
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  double kernel_sum = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    const double dx = p.x - centers_[i].x;
    const double dy = p.y - centers_[i].y;
    kernel_sum += scaled_weights_[i] * std::exp(-(dx * dx + dy * dy) * inv_two_h2);
  }
  return (1.0 - uniform_mix_) * kernel_sum + uniform_mix_ / bounds_.area();
}

double KdeModel::log_density(const Point2& p) const { return std::log(density(p)); }

void KdeModel::sample_into(Rng& rng, std::size_t n, std::vector<Point2>& out) const {
  out.reserve(out.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    if (uniform01(rng) < uniform_mix_) {
      out.push_back(uniform_in(rng, bounds_));
      continue;
    }
    const Point2& c = centers_[picker_(rng)];
    const double x = truncated_normal(rng, c.x, bandwidth_, bounds_.lo.x, bounds_.hi.x);
    const double y = truncated_normal(rng, c.y, bandwidth_, bounds_.lo.y, bounds_.hi.y);
    out.push_back({x, y});
  }
}

// ---------------------------------------------------------------------------
// Fitting

GridHistogramModel fit_histogram(std::span<const Point2> samples, std::span<const double> weights,
                                 const GridSpec& grid, double floor) {
  check_weights(samples, weights);
  std::vector<double> counts(grid.cell_count(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_inside(grid.bounds, samples[i]);
    counts[grid.cell_of(samples[i])] += weights[i];
    total += weights[i];
  }
  const double uniform_share = floor / static_cast<double>(counts.size());
  for (double& c : counts) c = (1.0 - floor) * (c / total) + uniform_share;
  // Absorb rounding so the masses sum to 1 to machine precision.
  const double sum = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (double& c : counts) c /= sum;
  return GridHistogramModel(grid, std::move(counts), floor);
}

KdeModel fit_kde(std::span<const Point2> samples, std::span<const double> weights,
                 const Box2& bounds, double bandwidth, double uniform_mix) {
  check_weights(samples, weights);
  for (const auto& s : samples) check_inside(bounds, s);

  // Coincident samples (common after resampling) collapse into one center.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].x != samples[b].x) return samples[a].x < samples[b].x;
    if (samples[a].y != samples[b].y) return samples[a].y < samples[b].y;
    return a < b;
  });
  std::vector<Point2> centers;
  std::vector<double> masses;
  double total = 0.0;
  for (auto idx : order) {
    total += weights[idx];
    if (!centers.empty() && centers.back() == samples[idx]) {
      masses.back() += weights[idx];
    } else {
      centers.push_back(samples[idx]);
      masses.push_back(weights[idx]);
    }
  }
  // Zero-weight centers contribute nothing.
  std::vector<Point2> kept_centers;
  std::vector<double> kept_masses;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (masses[i] > 0.0) {
      kept_centers.push_back(centers[i]);
      kept_masses.push_back(masses[i] / total);
    }
  }
  return KdeModel(bounds, std::move(kept_centers), std::move(kept_masses), bandwidth, uniform_mix);
}

DensityModel fit_weighted(std::span<const Point2> samples, std::span<const double> weights,
                          const DensityConfig& config) {
  switch (config.family) {
    case DensityFamily::Histogram:
      return fit_histogram(samples, weights, config.grid, config.floor);
    case DensityFamily::Kde:
      return fit_kde(samples, weights, config.grid.bounds, config.bandwidth, config.uniform_mix);
  }
  throw Error(ErrorCode::InvalidInput, "unknown density family");
}

// ---------------------------------------------------------------------------
// Variant dispatch

double log_density(const DensityModel& model, const Point2& p) {
  return std::visit([&](const auto& m) { return m.log_density(p); }, model);
}

const Box2& model_bounds(const DensityModel& model) {
  return std::visit([](const auto& m) -> const Box2& { return m.bounds(); }, model);
}

void sample_into(const DensityModel& model, Rng& rng, std::size_t n, std::vector<Point2>& out) {
  std::visit([&](const auto& m) { m.sample_into(rng, n, out); }, model);
}

std::vector<Point2> sample(const DensityModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "sample count must be at least 1");
  auto rng = make_rng(seed);
  std::vector<Point2> out;
  sample_into(model, rng, n, out);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json box_json(const Box2& b) { return {b.lo.x, b.lo.y, b.hi.x, b.hi.y}; }

Box2 box_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::InvalidInput, "bounds must be [x0,y0,x1,y1]");
  return {{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
}

}  // namespace

nlohmann::json to_json(const DensityModel& model) {
  if (const auto* h = std::get_if<GridHistogramModel>(&model)) {
    return {{"family", "histogram"},
            {"bounds", box_json(h->bounds())},
            {"resolution", {h->grid().nx, h->grid().ny}},
            {"cell_mass", std::vector<double>(h->cell_mass().begin(), h->cell_mass().end())},
            {"floor", h->floor()}};
  }
  const auto& k = std::get<KdeModel>(model);
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : k.centers()) centers.push_back({c.x, c.y});
  return {{"family", "kde"},
          {"bounds", box_json(k.bounds())},
          {"centers", std::move(centers)},
          {"center_weights", std::vector<double>(k.center_weights().begin(), k.center_weights().end())},
          {"bandwidth", k.bandwidth()},
          {"uniform_mix", k.uniform_mix()}};
}

DensityModel density_from_json(const nlohmann::json& doc) {
  try {
    const auto family = doc.at("family").get<std::string>();
    const Box2 bounds = box_from(doc.at("bounds"));
    if (family == "histogram") {
      const auto& res = doc.at("resolution");
      GridSpec grid{bounds, res.at(0).get<std::size_t>(), res.at(1).get<std::size_t>()};
      return GridHistogramModel(grid, doc.at("cell_mass").get<std::vector<double>>(),
                                doc.at("floor").get<double>());
    }
    if (family == "kde") {
      std::vector<Point2> centers;
      for (const auto& c : doc.at("centers")) centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
      return KdeModel(bounds, std::move(centers), doc.at("center_weights").get<std::vector<double>>(),
                      doc.at("bandwidth").get<double>(), doc.at("uniform_mix").get<double>());
    }
    throw Error(ErrorCode::InvalidInput, "unknown density family '" + family + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed density document: ") + e.what());
  }
}

}  // namespace skewfit
