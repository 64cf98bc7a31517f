#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "npmle/gauss.hpp"
#include "npmle/types.hpp"

namespace npmle {

/// Per-atom log terms log w_j + log phi_d(x - a_j).  Everything else about a
/// location mixture (density, posterior, score) derives from this vector.
Eigen::VectorXd atom_log_terms(const MixingMeasure& g, const Eigen::Ref<const Point>& x);

/// log of the mixture density f_G(x) = sum_j w_j phi_d(x - a_j).
/// Finite for every finite x, and exp(result) <= (2*pi)^(-d/2).
double log_density(const MixingMeasure& g, const Eigen::Ref<const Point>& x);

struct MixtureEval {
  double log_density;
  Eigen::VectorXd responsibilities;  // posterior over atoms given x, sums to 1
};

/// Density and atom posterior in one pass over the log terms.
MixtureEval evaluate(const MixingMeasure& g, const Eigen::Ref<const Point>& x);

/// Score of the mixture density, grad f_G(x) / f_G(x), which for a location
/// mixture equals the posterior mean of (a_j - x).
Point score(const MixingMeasure& g, const Eigen::Ref<const Point>& x);

/// Mean log-likelihood (1/n) sum_i log f_G(X_i), accumulated in index order.
double log_likelihood(const MixingMeasure& g, const Dataset& data);

/// Additive noise specification: identity, a scalar multiple of the identity,
/// or one SPD covariance per draw.
struct NoiseSpec {
  double variance = 1.0;
  std::vector<Eigen::MatrixXd> per_point;  // when non-empty, overrides variance

  static NoiseSpec identity() { return NoiseSpec{}; }
  static NoiseSpec scaled(double variance) { return NoiseSpec{variance, {}}; }
  static NoiseSpec per_point_cov(std::vector<Eigen::MatrixXd> covs) {
    return NoiseSpec{1.0, std::move(covs)};
  }
};

struct Sample {
  Dataset data;                          // theta_i + noise
  Eigen::MatrixXd latents;               // d x n, the drawn theta_i
  std::vector<Eigen::Index> components;  // atom index behind each draw
};

/// Draws n observations X_i = theta_i + Z_i with theta_i ~ G.  Fully
/// deterministic given the seed.
Sample sample(const MixingMeasure& g, Eigen::Index n, const NoiseSpec& noise,
              std::uint64_t seed);

/// Finite mixture of full-covariance Gaussians.  This is the reference family
/// for heteroscedastic targets, where each component carries its own SPD
/// covariance; factorizations are cached at construction.
class GaussianMixtureFull {
 public:
  GaussianMixtureFull(Eigen::MatrixXd means, std::vector<Eigen::MatrixXd> covs,
                      Eigen::VectorXd weights);

  int dim() const { return static_cast<int>(means_.rows()); }
  Eigen::Index size() const { return means_.cols(); }
  const Eigen::MatrixXd& means() const { return means_; }

  Eigen::VectorXd component_log_terms(const Eigen::Ref<const Point>& x) const;
  double log_density(const Eigen::Ref<const Point>& x) const;
  /// grad f / f = sum_j r_j(x) Sigma_j^{-1} (mu_j - x).
  Point score(const Eigen::Ref<const Point>& x) const;
  /// Posterior mean of the component means given x.
  Point posterior_mean(const Eigen::Ref<const Point>& x) const;

 private:
  Eigen::MatrixXd means_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts_;
  Eigen::VectorXd log_weights_;
  Eigen::VectorXd log_norm_;  // -d/2 log 2pi - 1/2 log det Sigma_j
};

/// The rescaled density x -> scale^(-d) f(x / scale) of a unit-variance
/// mixture f, i.e. the law of scale * Y when Y ~ f.
struct ScaledMixture {
  MixingMeasure base;
  double scale = 1.0;

  int dim() const { return base.dim(); }
  double log_density(const Eigen::Ref<const Point>& x) const {
    return npmle::log_density(base, x / scale) - base.dim() * std::log(scale);
  }
  Point score(const Eigen::Ref<const Point>& x) const {
    return npmle::score(base, x / scale) / scale;
  }
};

}  // namespace npmle
