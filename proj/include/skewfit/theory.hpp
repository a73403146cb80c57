#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "skewfit/rng.hpp"

namespace skewfit::theory {

/// Probability vector over k atoms.
class DiscreteDist {
 public:
  /// Throws InvalidInput unless entries are nonnegative and sum to 1 within 1e-12.
  explicit DiscreteDist(std::vector<double> probs);
  /// Normalizes arbitrary nonnegative weights.
  static DiscreteDist from_weights(std::span<const double> weights);
  static DiscreteDist uniform(std::size_t k);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

double entropy(const DiscreteDist& p);
double total_variation(const DiscreteDist& p, const DiscreteDist& q);

/// p_i q_i^alpha / Z. Throws AbsoluteContinuityViolation if q_i = 0 where p_i > 0.
DiscreteDist exact_skew(const DiscreteDist& p, const DiscreteDist& q, double alpha);
/// Same, with q given as unnormalized positive weights.
DiscreteDist exact_skew(const DiscreteDist& p, std::span<const double> q_weights, double alpha);

/// Cov_{x~p}[log p(x), log q(x)].
double cov_log_densities(const DiscreteDist& p, const DiscreteDist& q);

struct DerivativeReport {
  double step = 0.0;
  double finite_difference = 0.0;
  double negative_covariance = 0.0;
  double abs_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Central difference of alpha -> H(exact_skew(p, q, alpha)) at 0 against
/// -Cov_p[log p, log q]; passes within max(1e-6, 10 h^2).
DerivativeReport verify_entropy_derivative(const DiscreteDist& p, const DiscreteDist& q, double h);

struct EntropyGainReport {
  double covariance = 0.0;
  double base_entropy = 0.0;
  std::vector<double> alpha_grid;      // sorted toward zero last
  std::vector<double> skewed_entropy;  // aligned with alpha_grid
  std::vector<bool> increased;
  /// Most negative grid value a such that every grid point in [a, 0) raised entropy.
  std::optional<double> verified_a;
  bool pass = false;
};

/// Requires Cov_p[log p, log q] > 0, otherwise throws PreconditionUnmet.
/// Grid values must lie in [-1, 0).
EntropyGainReport verify_lemma_32(const DiscreteDist& p, const DiscreteDist& q,
                                  std::span<const double> alpha_grid);

struct SimpleCaseResult {
  std::vector<DiscreteDist> sequence;  // p0, p1, ...
  std::vector<double> entropies;
  std::optional<std::size_t> iterations_to_converge;
  bool entropy_nondecreasing = true;
  double worst_entropy_drop = 0.0;
};

/// p_{t+1} proportional to p_t^gamma, gamma in [0, 1); stops once the total
/// variation distance to uniform drops below tol.
SimpleCaseResult iterate_simple_case(const DiscreteDist& p0, double gamma, std::size_t max_iters, double tol);

/// Dirichlet(1, ..., 1) draw, floored at 1e-6 and renormalized.
DiscreteDist random_dist(std::size_t k, Rng& rng);

nlohmann::json to_json(const DerivativeReport& r);
nlohmann::json to_json(const EntropyGainReport& r);
nlohmann::json to_json(const SimpleCaseResult& r);

}  // namespace skewfit::theory
