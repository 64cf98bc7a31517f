#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "npmle/mixture.hpp"
#include "npmle/solver.hpp"
#include "npmle/types.hpp"

namespace npmle {

struct DenoiseResult {
  Eigen::MatrixXd estimates;  // d x n, one denoised point per observation
  std::optional<Eigen::MatrixXd> oracle;
  std::optional<double> risk_vs_oracle;
  std::optional<double> risk_vs_truth;
  double rho_used = 0.0;
};

/// (2*pi)^(-d/2) / n: the fitted-value floor attained by the likelihood
/// maximizer on exemplar support, and the canonical truncation level.
double tweedie_floor(int dim, Eigen::Index n);

/// Posterior-mean denoising under the fitted prior: each X_i moves by the
/// density score, theta_i = X_i + grad f(X_i) / max(f(X_i), rho).  With
/// rho = 0 the ratio is untruncated; whenever f(X_i) >= rho the truncated and
/// untruncated estimates are computed by the identical expression, so
/// enabling a floor the fit already clears changes nothing, bit for bit.
DenoiseResult tweedie_denoise(const MixingMeasure& fit, const Dataset& data,
                              double rho = 0.0);

/// Posterior means under a known (or reference) prior; the risk-optimal
/// separable rule when the prior is the empirical measure of the latents.
Eigen::MatrixXd oracle_bayes(const MixingMeasure& truth, const Dataset& data);

/// Empirical measure of a point set: exact duplicates merge, weights are
/// occurrence counts over n, atom order follows first appearance.
MixingMeasure empirical_measure(const Eigen::MatrixXd& points);

/// Known noise structure for the heteroscedastic path.  sigma_min scales the
/// whole problem; per-observation covariances, when given, must dominate
/// sigma_min^2 I.
struct HeteroModel {
  double sigma_min = 1.0;
  std::optional<double> sigma_max;
  std::vector<Eigen::MatrixXd> per_point_cov;  // empty means sigma_min^2 I throughout
};

struct HeteroDenoise {
  ScaledMixture density;  // estimate of the observation density on the original scale
  FitResult fit;          // the underlying fit on the rescaled data
  DenoiseResult result;
};

/// Rescales the data by 1/sigma_min, fits the location-mixture likelihood
/// maximizer there, maps the density back through the scale, and denoises on
/// the original scale.  When the latent means are supplied alongside
/// per-observation covariances, the exact oracle target (score of the finite
/// mixture of N(theta_i, Sigma_i)) is filled into result.oracle together
/// with the risk against it.
HeteroDenoise hetero_fit_and_denoise(const Dataset& data, const HeteroModel& model,
                                     const SupportStrategy& support,
                                     const SolverConfig& cfg,
                                     const Eigen::MatrixXd* latent_means = nullptr);

/// Best separable rule when each observation has its own Gaussian law
/// N(theta_j, Sigma_j): the posterior mean of theta under the uniform mixture
/// over observations, evaluated at each data point.
Eigen::MatrixXd best_separable_oracle(const Eigen::MatrixXd& latent_means,
                                      const std::vector<Eigen::MatrixXd>& latent_covs,
                                      const Dataset& data);

/// Mean squared distance between the estimates and a reference point set.
double denoising_risk(const DenoiseResult& result, const Eigen::MatrixXd& reference);

}  // namespace npmle
