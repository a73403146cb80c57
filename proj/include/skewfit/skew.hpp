#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "skewfit/density.hpp"
#include "skewfit/geometry.hpp"
#include "skewfit/metrics.hpp"

namespace skewfit {

enum class GoalSource { FromModel, FromSkewedEmpirical };

struct SkewConfig {
  double alpha = -1.0;
  std::size_t n_collect = 500;
  /// SIR output count; 0 means "same as n_collect".
  std::size_t resample_size = 0;
  GoalSource goal_source = GoalSource::FromSkewedEmpirical;
  /// Family and geometry of the goal model refit each iteration.
  DensityConfig density;
  /// Discretization for the entropy column of each report.
  GridSpec metric_grid{{{0.0, 0.0}, {11.0, 11.0}}, 11, 11};

  std::size_t effective_resample_size() const { return resample_size == 0 ? n_collect : resample_size; }
  /// Throws InvalidInput when alpha is outside [-10, 0] or a count is zero.
  void validate() const;
};

/// Weighted atoms with normalizer z_alpha = sum of unnormalized weights.
struct SkewedEmpirical {
  std::vector<Point2> atoms;
  std::vector<double> probs;
  double z_alpha = 0.0;

  bool empty() const { return atoms.empty(); }
};

/// weight_i = exp(alpha * log q(s_i)).
std::vector<double> skew_weights(const DensityModel& model, std::span<const Point2> samples, double alpha);
/// alpha * log q(s_i), for callers that normalize in log space.
std::vector<double> skew_log_weights(const DensityModel& model, std::span<const Point2> samples, double alpha);

SkewedEmpirical build_skewed_empirical(std::span<const Point2> samples, std::span<const double> weights);
/// Same distribution from log-weights, normalized after subtracting the max.
/// z_alpha is reconstructed as exp(max) * sum(exp(lw - max)) and may overflow
/// to +inf for extreme alpha; probs stay exact.
SkewedEmpirical build_skewed_empirical_from_log(std::span<const Point2> samples,
                                                std::span<const double> log_weights);

std::vector<Point2> sir_resample(const SkewedEmpirical& dist, std::size_t m, std::uint64_t seed);
std::vector<Point2> sir_resample(const SkewedEmpirical& dist, std::size_t m, Rng& rng);

/// Gradient of sum_i w_i log q(s_i) with respect to the per-cell logits of a
/// softmax-parameterized histogram on `grid`.
std::vector<double> is_weighted_loglik_grad(const GridSpec& grid, std::span<const double> logits,
                                            std::span<const Point2> samples,
                                            std::span<const double> weights);

/// Maps a commanded goal to the state the agent ends in. The second argument
/// is a per-episode seed derived from the iteration seed and the goal index.
using Collector = std::function<Point2(const Point2& goal, std::uint64_t episode_seed)>;

struct IterationResult {
  DensityModel model;
  SkewedEmpirical skewed;
  EntropyReport report;
  std::vector<Point2> collected;
};

/// One pass of sample goals -> collect -> skew -> resample -> refit.
/// `previous` is the last iteration's skewed empirical; when empty (first
/// iteration) goals come from the model regardless of goal_source.
/// At alpha == 0 the skew is the identity and the model is fit directly on the
/// collected states.
IterationResult skewfit_iteration(const DensityModel& model, const SkewedEmpirical& previous,
                                  const Collector& collector, const SkewConfig& config,
                                  std::uint64_t seed, std::size_t iteration = 0);

struct SkewFitRun {
  std::vector<EntropyReport> reports;
  /// (iteration, model) pairs captured every checkpoint_every iterations, plus the last.
  std::vector<std::pair<std::size_t, DensityModel>> checkpoints;
  std::optional<DensityModel> final_model;
  SkewedEmpirical final_skewed;
};

SkewFitRun run_skewfit(const DensityModel& initial_model, const Collector& collector,
                       const SkewConfig& config, std::size_t iterations, std::uint64_t seed,
                       std::size_t checkpoint_every = 0);

}  // namespace skewfit
