#include "skewfit/skew.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "skewfit/error.hpp"

namespace skewfit {

void SkewConfig::validate() const {
  if (!(alpha >= -10.0 && alpha <= 0.0))
    throw Error(ErrorCode::InvalidInput, "alpha must lie in [-10, 0]");
  if (n_collect == 0) throw Error(ErrorCode::InvalidInput, "n_collect must be at least 1");
}

std::vector<double> skew_log_weights(const DensityModel& model, std::span<const Point2> samples,
                                     double alpha) {
  if (alpha > 0.0) throw Error(ErrorCode::InvalidInput, "alpha must be <= 0");
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(alpha * log_density(model, s));
  return out;
}

std::vector<double> skew_weights(const DensityModel& model, std::span<const Point2> samples,
                                 double alpha) {
  auto w = skew_log_weights(model, samples, alpha);
  for (double& v : w) v = std::exp(v);
  return w;
}

SkewedEmpirical build_skewed_empirical(std::span<const Point2> samples, std::span<const double> weights) {
  if (samples.empty()) throw Error(ErrorCode::InvalidInput, "empty sample list");
  if (samples.size() != weights.size())
    throw Error(ErrorCode::InvalidInput, "weights and samples differ in length");
  double z = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::InvalidInput, "weights must be finite and nonnegative");
    z += w;
  }
  if (!(z > 0.0)) throw Error(ErrorCode::InvalidInput, "zero total weight");
  SkewedEmpirical out;
  out.atoms.assign(samples.begin(), samples.end());
  out.probs.reserve(weights.size());
  for (double w : weights) out.probs.push_back(w / z);
  out.z_alpha = z;
  return out;
}

SkewedEmpirical build_skewed_empirical_from_log(std::span<const Point2> samples,
                                                std::span<const double> log_weights) {
  if (samples.empty()) throw Error(ErrorCode::InvalidInput, "empty sample list");
  if (samples.size() != log_weights.size())
    throw Error(ErrorCode::InvalidInput, "weights and samples differ in length");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw Error(ErrorCode::InvalidInput, "non-finite log weight");
  SkewedEmpirical out;
  out.atoms.assign(samples.begin(), samples.end());
  out.probs.reserve(log_weights.size());
  double shifted_sum = 0.0;
  for (double lw : log_weights) {
    const double v = std::exp(lw - top);
    out.probs.push_back(v);
    shifted_sum += v;
  }
  for (double& p : out.probs) p /= shifted_sum;
  out.z_alpha = std::exp(top) * shifted_sum;
  return out;
}

std::vector<Point2> sir_resample(const SkewedEmpirical& dist, std::size_t m, Rng& rng) {
  if (m == 0) throw Error(ErrorCode::InvalidInput, "resample size must be at least 1");
  if (dist.empty()) throw Error(ErrorCode::InvalidInput, "empty skewed distribution");
  const Categorical pick(dist.probs);
  std::vector<Point2> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(dist.atoms[pick(rng)]);
  return out;
}

std::vector<Point2> sir_resample(const SkewedEmpirical& dist, std::size_t m, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return sir_resample(dist, m, rng);
}

std::vector<double> is_weighted_loglik_grad(const GridSpec& grid, std::span<const double> logits,
                                            std::span<const Point2> samples,
                                            std::span<const double> weights) {
  if (logits.size() != grid.cell_count())
    throw Error(ErrorCode::InvalidInput, "one logit per cell required");
  if (samples.size() != weights.size())
    throw Error(ErrorCode::InvalidInput, "weights and samples differ in length");
  // d/dtheta_k log softmax(theta)_c = [c == k] - pi_k; the cell-area term is constant.
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> pi(logits.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    pi[k] = std::exp(logits[k] - top);
    norm += pi[k];
  }
  std::vector<double> grad(logits.size(), 0.0);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!grid.bounds.contains(samples[i])) throw Error(ErrorCode::OutOfBounds, "sample outside grid");
    grad[grid.cell_of(samples[i])] += weights[i];
    total_weight += weights[i];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) grad[k] -= total_weight * pi[k] / norm;
  return grad;
}

IterationResult skewfit_iteration(const DensityModel& model, const SkewedEmpirical& previous,
                                  const Collector& collector, const SkewConfig& config,
                                  std::uint64_t seed, std::size_t iteration) {
  config.validate();
  auto goal_rng = make_rng(seed, 0);

  std::vector<Point2> goals;
  if (config.goal_source == GoalSource::FromSkewedEmpirical && !previous.empty()) {
    goals = sir_resample(previous, config.n_collect, goal_rng);
  } else {
    sample_into(model, goal_rng, config.n_collect, goals);
  }

  std::vector<Point2> collected;
  collected.reserve(goals.size());
  for (std::size_t i = 0; i < goals.size(); ++i) {
    try {
      collected.push_back(collector(goals[i], mix_seed(seed, 1000 + i)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::CollectorError, "goal " + std::to_string(i) + ": " + e.what());
    }
  }

  IterationResult result{model, {}, {}, {}};
  if (config.alpha == 0.0) {
    const std::vector<double> ones(collected.size(), 1.0);
    result.skewed = build_skewed_empirical(collected, ones);
    result.model = fit_weighted(collected, ones, config.density);
  } else {
    const auto log_w = skew_log_weights(model, collected, config.alpha);
    result.skewed = build_skewed_empirical_from_log(collected, log_w);
    auto resample_rng = make_rng(seed, 1);
    const auto resampled = sir_resample(result.skewed, config.effective_resample_size(), resample_rng);
    const std::vector<double> ones(resampled.size(), 1.0);
    result.model = fit_weighted(resampled, ones, config.density);
  }

  result.report.iteration = iteration;
  result.report.alpha = config.alpha;
  result.report.seed = seed;
  result.report.z_alpha = result.skewed.z_alpha;
  result.report.entropy_nats = grid_entropy(collected, config.metric_grid);
  result.report.cells_visited = occupied_cells(collected, config.metric_grid);
  result.collected = std::move(collected);
  return result;
}

SkewFitRun run_skewfit(const DensityModel& initial_model, const Collector& collector,
                       const SkewConfig& config, std::size_t iterations, std::uint64_t seed,
                       std::size_t checkpoint_every) {
  config.validate();
  SkewFitRun run;
  DensityModel model = initial_model;
  SkewedEmpirical skewed;
  for (std::size_t t = 0; t < iterations; ++t) {
    auto step = skewfit_iteration(model, skewed, collector, config, mix_seed(seed, t), t);
    step.report.seed = seed;
    run.reports.push_back(step.report);
    model = std::move(step.model);
    skewed = std::move(step.skewed);
    const bool last = t + 1 == iterations;
    if (last || (checkpoint_every > 0 && (t + 1) % checkpoint_every == 0))
      run.checkpoints.emplace_back(t + 1, model);
  }
  if (iterations > 0) run.final_model = model;
  run.final_skewed = std::move(skewed);
  return run;
}

}  // namespace skewfit
