#include "skewfit/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "skewfit/error.hpp"

namespace skewfit::theory {

DiscreteDist::DiscreteDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(ErrorCode::InvalidInput, "distribution needs at least one atom");
  double total = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "probabilities must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidInput, "probabilities must sum to 1");
}

DiscreteDist DiscreteDist::from_weights(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidInput, "weights sum to zero");
  std::vector<double> p;
  p.reserve(weights.size());
  for (double w : weights) p.push_back(w / total);
  // One more pass pulls the sum inside the 1e-12 tolerance for long vectors.
  const double again = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= again;
  return DiscreteDist(std::move(p));
}

DiscreteDist DiscreteDist::uniform(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidInput, "distribution needs at least one atom");
  return DiscreteDist(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

double entropy(const DiscreteDist& p) {
  double h = 0.0;
  for (double v : p.probs())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double total_variation(const DiscreteDist& p, const DiscreteDist& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidInput, "size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

DiscreteDist exact_skew(const DiscreteDist& p, std::span<const double> q_weights, double alpha) {
  if (p.size() != q_weights.size()) throw Error(ErrorCode::InvalidInput, "size mismatch");
  std::vector<double> log_w(p.size(), -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q_weights[i] > 0.0))
      throw Error(ErrorCode::AbsoluteContinuityViolation, "q vanishes where p has mass (atom " + std::to_string(i) + ")");
    log_w[i] = std::log(p[i]) + alpha * std::log(q_weights[i]);
    top = std::max(top, log_w[i]);
  }
  std::vector<double> w(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) w[i] = std::exp(log_w[i] - top);
  return DiscreteDist::from_weights(w);
}

DiscreteDist exact_skew(const DiscreteDist& p, const DiscreteDist& q, double alpha) {
  return exact_skew(p, q.probs(), alpha);
}

double cov_log_densities(const DiscreteDist& p, const DiscreteDist& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidInput, "size mismatch");
  double mean_lp = 0.0, mean_lq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) throw Error(ErrorCode::AbsoluteContinuityViolation, "q vanishes where p has mass");
    mean_lp += p[i] * std::log(p[i]);
    mean_lq += p[i] * std::log(q[i]);
  }
  double cov = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    cov += p[i] * (std::log(p[i]) - mean_lp) * (std::log(q[i]) - mean_lq);
  }
  return cov;
}

DerivativeReport verify_entropy_derivative(const DiscreteDist& p, const DiscreteDist& q, double h) {
  if (!(h > 0.0 && h <= 1e-3)) throw Error(ErrorCode::InvalidInput, "step must lie in (0, 1e-3]");
  DerivativeReport r;
  r.step = h;
  const double up = entropy(exact_skew(p, q, h));
  const double down = entropy(exact_skew(p, q, -h));
  r.finite_difference = (up - down) / (2.0 * h);
  r.negative_covariance = -cov_log_densities(p, q);
  r.abs_error = std::abs(r.finite_difference - r.negative_covariance);
  r.tolerance = std::max(1e-6, 10.0 * h * h);
  r.pass = r.abs_error <= r.tolerance;
  return r;
}

EntropyGainReport verify_lemma_32(const DiscreteDist& p, const DiscreteDist& q,
                                  std::span<const double> alpha_grid) {
  EntropyGainReport r;
  r.covariance = cov_log_densities(p, q);
  if (!(r.covariance > 0.0))
    throw Error(ErrorCode::PreconditionUnmet, "Cov_p[log p, log q] = " + std::to_string(r.covariance) + " is not positive");
  r.alpha_grid.assign(alpha_grid.begin(), alpha_grid.end());
  for (double a : r.alpha_grid)
    if (!(a >= -1.0 && a < 0.0)) throw Error(ErrorCode::InvalidInput, "alpha grid values must lie in [-1, 0)");
  std::sort(r.alpha_grid.begin(), r.alpha_grid.end());
  r.base_entropy = entropy(p);
  for (double a : r.alpha_grid) {
    const double h = entropy(exact_skew(p, q, a));
    r.skewed_entropy.push_back(h);
    r.increased.push_back(h > r.base_entropy);
  }
  // Walk from the grid point nearest zero outward while entropy keeps rising.
  for (std::size_t i = r.alpha_grid.size(); i-- > 0;) {
    if (!r.increased[i]) break;
    r.verified_a = r.alpha_grid[i];
  }
  r.pass = r.verified_a.has_value();
  return r;
}

SimpleCaseResult iterate_simple_case(const DiscreteDist& p0, double gamma, std::size_t max_iters, double tol) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidInput, "gamma must lie in [0, 1)");
  for (double v : p0.probs())
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidInput, "p0 needs full support");
  const auto uniform = DiscreteDist::uniform(p0.size());
  SimpleCaseResult r;
  r.sequence.push_back(p0);
  r.entropies.push_back(entropy(p0));
  if (total_variation(p0, uniform) < tol) r.iterations_to_converge = 0;
  for (std::size_t t = 1; t <= max_iters && !r.iterations_to_converge; ++t) {
    const auto& prev = r.sequence.back();
    std::vector<double> log_w(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) log_w[i] = gamma * std::log(prev[i]);
    const double top = *std::max_element(log_w.begin(), log_w.end());
    for (double& v : log_w) v = std::exp(v - top);
    r.sequence.push_back(DiscreteDist::from_weights(log_w));
    r.entropies.push_back(entropy(r.sequence.back()));
    const double drop = r.entropies[t - 1] - r.entropies[t];
    r.worst_entropy_drop = std::max(r.worst_entropy_drop, drop);
    if (drop > 1e-12) r.entropy_nondecreasing = false;
    if (total_variation(r.sequence.back(), uniform) < tol) r.iterations_to_converge = t;
  }
  return r;
}

DiscreteDist random_dist(std::size_t k, Rng& rng) {
  // Dirichlet(1,...,1) is normalized i.i.d. Exp(1).
  std::vector<double> w(k);
  for (double& v : w) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    v = -std::log(u);
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v = std::max(v / total, 1e-6);
  return DiscreteDist::from_weights(w);
}

nlohmann::json to_json(const DerivativeReport& r) {
  return {{"step", r.step},
          {"finite_difference", r.finite_difference},
          {"negative_covariance", r.negative_covariance},
          {"abs_error", r.abs_error},
          {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

nlohmann::json to_json(const EntropyGainReport& r) {
  nlohmann::json j{{"covariance", r.covariance},
                   {"base_entropy", r.base_entropy},
                   {"alpha_grid", r.alpha_grid},
                   {"skewed_entropy", r.skewed_entropy},
                   {"increased", r.increased},
                   {"pass", r.pass}};
  j["verified_a"] = r.verified_a ? nlohmann::json(*r.verified_a) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const SimpleCaseResult& r) {
  nlohmann::json j{{"entropies", r.entropies},
                   {"entropy_nondecreasing", r.entropy_nondecreasing},
                   {"worst_entropy_drop", r.worst_entropy_drop},
                   {"steps", r.sequence.size() - 1}};
  j["iterations_to_converge"] = r.iterations_to_converge ? nlohmann::json(*r.iterations_to_converge) : nlohmann::json(nullptr);
  return j;
}

}  // namespace skewfit::theory
