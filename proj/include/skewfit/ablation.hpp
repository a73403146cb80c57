#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skewfit/environments.hpp"
#include "skewfit/geometry.hpp"
#include "skewfit/rng.hpp"

namespace skewfit {

enum class GradientEstimator { IS, SIR, MLE };

const char* to_string(GradientEstimator method);

struct AblationConfig {
  std::size_t dataset_size = 2000;
  /// Share of points outside the common room.
  double rare_fraction = 0.05;
  std::size_t batch_size = 32;
  std::size_t draws = 1000;
  /// Floor of the density model that supplies the skew weights.
  double floor = 1e-3;
};

/// Points uniform over free space: (1 - rare_fraction) inside the start room,
/// the rest in the other three rooms.
std::vector<Point2> imbalanced_dataset(const FourRooms& env, const AblationConfig& config, Rng& rng);

struct VarianceRow {
  double alpha = 0.0;
  GradientEstimator method = GradientEstimator::MLE;
  double variance = 0.0;
};

/// Minibatch-gradient variance of the histogram log-likelihood objective,
/// per parameter across `config.draws` minibatches, averaged over parameters.
///
/// The skew weights come from a floored histogram fit to the dataset. The
/// gradient is taken at that model's logits. IS draws a uniform minibatch and
/// weights each term by its self-normalized importance ratio; SIR draws the
/// minibatch from the skewed empirical distribution and leaves terms
/// unweighted; MLE is the unweighted uniform minibatch and ignores alpha.
std::vector<VarianceRow> variance_ablation(std::span<const Point2> dataset, const GridSpec& grid,
                                           std::span<const double> alpha_list,
                                           std::span<const GradientEstimator> methods,
                                           const AblationConfig& config, std::uint64_t seed);

}  // namespace skewfit
