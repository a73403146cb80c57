#include "skewfit/ablation.hpp"

#include <cmath>

#include "skewfit/density.hpp"
#include "skewfit/error.hpp"
#include "skewfit/skew.hpp"

namespace skewfit {

const char* to_string(GradientEstimator method) {
  switch (method) {
    case GradientEstimator::IS: return "IS";
    case GradientEstimator::SIR: return "SIR";
    case GradientEstimator::MLE: return "MLE";
  }
  return "?";
}

std::vector<Point2> imbalanced_dataset(const FourRooms& env, const AblationConfig& config, Rng& rng) {
  if (config.dataset_size == 0) throw Error(ErrorCode::InvalidInput, "dataset_size must be positive");
  if (!(config.rare_fraction >= 0.0 && config.rare_fraction < 1.0))
    throw Error(ErrorCode::InvalidInput, "rare_fraction must lie in [0, 1)");
  const Box2& room = env.config().start_room;
  const Box2& world = env.world();
  const auto rare = static_cast<std::size_t>(std::llround(config.rare_fraction * double(config.dataset_size)));
  std::vector<Point2> out;
  out.reserve(config.dataset_size);
  while (out.size() < config.dataset_size - rare) {
    const Point2 p{room.lo.x + uniform01(rng) * room.width(), room.lo.y + uniform01(rng) * room.height()};
    if (env.is_free(p)) out.push_back(p);
  }
  while (out.size() < config.dataset_size) {
    const Point2 p{world.lo.x + uniform01(rng) * world.width(), world.lo.y + uniform01(rng) * world.height()};
    if (env.is_free(p) && !room.contains(p)) out.push_back(p);
  }
  return out;
}

namespace {

double mean_parameter_variance(const std::vector<std::vector<double>>& grads) {
  const std::size_t draws = grads.size();
  const std::size_t dims = grads.front().size();
  double total = 0.0;
  for (std::size_t k = 0; k < dims; ++k) {
    double mean = 0.0;
    for (const auto& g : grads) mean += g[k];
    mean /= double(draws);
    double ss = 0.0;
    for (const auto& g : grads) ss += (g[k] - mean) * (g[k] - mean);
    total += ss / double(draws - 1);
  }
  return total / double(dims);
}

}  // namespace

std::vector<VarianceRow> variance_ablation(std::span<const Point2> dataset, const GridSpec& grid,
                                           std::span<const double> alpha_list,
                                           std::span<const GradientEstimator> methods,
                                           const AblationConfig& config, std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorCode::InvalidInput, "empty dataset");
  if (config.draws < 2 || config.batch_size == 0)
    throw Error(ErrorCode::InvalidInput, "need at least two draws and a positive batch size");
  const std::vector<double> ones(dataset.size(), 1.0);
  const DensityModel q = fit_histogram(dataset, ones, grid, config.floor);
  const auto& hist = std::get<GridHistogramModel>(q);
  std::vector<double> logits;
  for (double m : hist.cell_mass()) logits.push_back(std::log(m));

  std::vector<VarianceRow> rows;
  for (std::size_t ai = 0; ai < alpha_list.size(); ++ai) {
    const double alpha = alpha_list[ai];
    const auto log_w = skew_log_weights(q, dataset, alpha);
    const SkewedEmpirical skewed = build_skewed_empirical_from_log(dataset, log_w);
    // Self-normalized importance ratio of p_skewed to the uniform empirical.
    std::vector<double> ratio(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) ratio[i] = skewed.probs[i] * double(dataset.size());

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto method = methods[mi];
      auto rng = make_rng(seed, 1 + ai * 16 + static_cast<std::size_t>(method));
      const Categorical skew_pick(skewed.probs);
      std::vector<std::vector<double>> grads;
      grads.reserve(config.draws);
      std::vector<Point2> batch(config.batch_size);
      std::vector<double> w(config.batch_size);
      for (std::size_t d = 0; d < config.draws; ++d) {
        for (std::size_t b = 0; b < config.batch_size; ++b) {
          std::size_t idx;
          if (method == GradientEstimator::SIR) {
            idx = skew_pick(rng);
            w[b] = 1.0;
          } else {
            idx = uniform_index(rng, dataset.size());
            w[b] = method == GradientEstimator::IS ? ratio[idx] : 1.0;
          }
          batch[b] = dataset[idx];
        }
        auto g = is_weighted_loglik_grad(grid, logits, batch, w);
        for (double& v : g) v /= double(config.batch_size);
        grads.push_back(std::move(g));
      }
      rows.push_back({alpha, method, mean_parameter_variance(grads)});
    }
  }
  return rows;
}

}  // namespace skewfit
