#include "npmle/denoise.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "npmle/gauss.hpp"
#include "npmle/metrics.hpp"

namespace npmle {

double tweedie_floor(int dim, Eigen::Index n) {
  require(dim >= 1, "tweedie_floor: dimension must be at least 1");
  require(n >= 1, "tweedie_floor: need at least one observation");
  return unit_normal_peak(dim) / double(n);
}

DenoiseResult tweedie_denoise(const MixingMeasure& fit, const Dataset& data, double rho) {
  require(fit.dim() == data.dim(), "tweedie_denoise: mixture and data dimensions differ");
  require(rho >= 0.0 && std::isfinite(rho), "tweedie_denoise: rho must be finite and >= 0");

  const double log_rho = rho > 0.0 ? std::log(rho) : -std::numeric_limits<double>::infinity();
  DenoiseResult out;
  out.rho_used = rho;
  out.estimates.resize(data.dim(), data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Point x = data.point(i);
    const MixtureEval e = evaluate(fit, x);
    const Point grad_over_f = fit.atoms() * e.responsibilities - x;
    // grad f / max(f, rho) = score * min(1, f / rho); the factor is exactly
    // 1.0 whenever the fitted value clears the floor.
    const double damp = e.log_density >= log_rho ? 1.0 : std::exp(e.log_density - log_rho);
    out.estimates.col(i) = x + damp * grad_over_f;
  }
  return out;
}

Eigen::MatrixXd oracle_bayes(const MixingMeasure& truth, const Dataset& data) {
  require(truth.dim() == data.dim(), "oracle_bayes: mixture and data dimensions differ");
  Eigen::MatrixXd est(data.dim(), data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const MixtureEval e = evaluate(truth, data.point(i));
    est.col(i) = truth.atoms() * e.responsibilities;
  }
  return est;
}

MixingMeasure empirical_measure(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.cols();
  require(n >= 1, "empirical_measure: need at least one point");
  std::map<std::vector<double>, Eigen::Index> first_index;
  std::vector<Eigen::Index> order;
  std::vector<Eigen::Index> counts;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> key(points.col(i).data(), points.col(i).data() + points.rows());
    auto [it, inserted] = first_index.try_emplace(key, Eigen::Index(order.size()));
    if (inserted) {
      order.push_back(i);
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it->second)];
    }
  }
  Eigen::MatrixXd atoms(points.rows(), static_cast<Eigen::Index>(order.size()));
  Eigen::VectorXd weights(static_cast<Eigen::Index>(order.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    atoms.col(static_cast<Eigen::Index>(k)) = points.col(order[k]);
    weights(static_cast<Eigen::Index>(k)) = double(counts[k]) / double(n);
  }
  return MixingMeasure(std::move(atoms), std::move(weights));
}

HeteroDenoise hetero_fit_and_denoise(const Dataset& data, const HeteroModel& model,
                                     const SupportStrategy& support,
                                     const SolverConfig& cfg,
                                     const Eigen::MatrixXd* latent_means) {
  require_config(model.sigma_min > 0.0 && std::isfinite(model.sigma_min),
                 "hetero: sigma_min must be positive and finite");
  const double s = model.sigma_min;
  const Eigen::Index n = data.size();
  const int d = data.dim();

  if (!model.per_point_cov.empty()) {
    require(static_cast<Eigen::Index>(model.per_point_cov.size()) == n,
            "hetero: one covariance per observation");
    for (const auto& cov : model.per_point_cov) {
      require(cov.rows() == d && cov.cols() == d, "hetero: covariance has wrong shape");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
      require(es.info() == Eigen::Success && es.eigenvalues().minCoeff() >=
                  s * s * (1.0 - 1e-9),
              "hetero: every covariance must dominate sigma_min^2 I");
    }
  }
  if (latent_means != nullptr) {
    require(latent_means->rows() == d && latent_means->cols() == n,
            "hetero: latent means must be d x n");
  }

  const Dataset scaled(data.points() / s);
  FitResult fit = fit_npmle(scaled, support, cfg);

  // Denoise on the rescaled problem, then map back: x = s * y pushes the
  // estimate s * T(y) = s * (y + score(y)).
  DenoiseResult inner = tweedie_denoise(fit.mixture, scaled, 0.0);
  DenoiseResult result;
  result.rho_used = 0.0;
  result.estimates = s * inner.estimates;

  if (latent_means != nullptr && !model.per_point_cov.empty()) {
    // Exact oracle target: the score of (1/n) sum_i N(theta_i, Sigma_i),
    // which is the data density when the latents are exactly these.
    GaussianMixtureFull reference(*latent_means, model.per_point_cov,
                                  Eigen::VectorXd::Constant(n, 1.0 / double(n)));
    Eigen::MatrixXd target(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point x = data.point(i);
      target.col(i) = x + reference.score(x);
    }
    result.risk_vs_oracle = mean_squared_error(result.estimates, target);
    result.oracle = std::move(target);
  }

  ScaledMixture density{fit.mixture, s};
  return HeteroDenoise{std::move(density), std::move(fit), std::move(result)};
}

Eigen::MatrixXd best_separable_oracle(const Eigen::MatrixXd& latent_means,
                                      const std::vector<Eigen::MatrixXd>& latent_covs,
                                      const Dataset& data) {
  require(latent_means.rows() == data.dim(),
          "best_separable_oracle: latent dimension must match data");
  require(static_cast<Eigen::Index>(latent_covs.size()) == latent_means.cols(),
          "best_separable_oracle: one covariance per latent");
  const Eigen::Index k = latent_means.cols();
  GaussianMixtureFull mix(latent_means, latent_covs,
                          Eigen::VectorXd::Constant(k, 1.0 / double(k)));
  Eigen::MatrixXd est(data.dim(), data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    est.col(i) = mix.posterior_mean(data.point(i));
  }
  return est;
}

double denoising_risk(const DenoiseResult& result, const Eigen::MatrixXd& reference) {
  return mean_squared_error(result.estimates, reference);
}

}  // namespace npmle
