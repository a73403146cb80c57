#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "skewfit/geometry.hpp"
#include "skewfit/rng.hpp"

namespace skewfit {

enum class DensityFamily { Histogram, Kde };

struct DensityConfig {
  DensityFamily family = DensityFamily::Histogram;
  /// Histogram partition; the KDE uses only grid.bounds.
  GridSpec grid{{{0.0, 0.0}, {1.0, 1.0}}, 1, 1};
  /// Total histogram mass spread uniformly across cells (epsilon_floor).
  double floor = 1e-3;
  /// Gaussian kernel standard deviation, in state units.
  double bandwidth = 0.25;
  /// Mass of the uniform-over-bounds mixture component.
  double uniform_mix = 1e-3;
};

/// Piecewise-constant density on a regular grid. Each cell mass is at least
/// floor / cell_count, so log_density is finite everywhere in bounds.
class GridHistogramModel {
 public:
  GridHistogramModel(GridSpec grid, std::vector<double> cell_mass, double floor);

  static GridHistogramModel uniform(const GridSpec& grid, double floor = 0.0);

  const GridSpec& grid() const { return grid_; }
  const Box2& bounds() const { return grid_.bounds; }
  std::span<const double> cell_mass() const { return cell_mass_; }
  double floor() const { return floor_; }

  double log_density(const Point2& p) const;
  void sample_into(Rng& rng, std::size_t n, std::vector<Point2>& out) const;

 private:
  GridSpec grid_;
  std::vector<double> cell_mass_;
  double floor_;
  Categorical cells_;
};

/// Gaussian kernel mixture, each kernel truncated to bounds and renormalized,
/// then mixed with a uniform density of weight uniform_mix.
class KdeModel {
 public:
  KdeModel(Box2 bounds, std::vector<Point2> centers, std::vector<double> center_weights,
           double bandwidth, double uniform_mix);

  const Box2& bounds() const { return bounds_; }
  std::span<const Point2> centers() const { return centers_; }
  std::span<const double> center_weights() const { return weights_; }
  double bandwidth() const { return bandwidth_; }
  double uniform_mix() const { return uniform_mix_; }

  double density(const Point2& p) const;
  double log_density(const Point2& p) const;
  void sample_into(Rng& rng, std::size_t n, std::vector<Point2>& out) const;

  /// Probability mass of an untruncated kernel centered at c that lies inside bounds.
  double kernel_mass_inside(const Point2& c) const;

 private:
  Box2 bounds_;
  std::vector<Point2> centers_;
  std::vector<double> weights_;
  std::vector<double> scaled_weights_;  // weight / truncation mass / (2 pi h^2)
  double bandwidth_;
  double uniform_mix_;
  Categorical picker_;
};

using DensityModel = std::variant<GridHistogramModel, KdeModel>;

/// Weighted maximum likelihood within the configured family.
DensityModel fit_weighted(std::span<const Point2> samples, std::span<const double> weights,
                          const DensityConfig& config);
GridHistogramModel fit_histogram(std::span<const Point2> samples, std::span<const double> weights,
                                 const GridSpec& grid, double floor);
KdeModel fit_kde(std::span<const Point2> samples, std::span<const double> weights,
                 const Box2& bounds, double bandwidth, double uniform_mix);

double log_density(const DensityModel& model, const Point2& p);
const Box2& model_bounds(const DensityModel& model);
std::vector<Point2> sample(const DensityModel& model, std::size_t n, std::uint64_t seed);
void sample_into(const DensityModel& model, Rng& rng, std::size_t n, std::vector<Point2>& out);

nlohmann::json to_json(const DensityModel& model);
DensityModel density_from_json(const nlohmann::json& doc);

}  // namespace skewfit
