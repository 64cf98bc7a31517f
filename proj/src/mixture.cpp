#include "npmle/mixture.hpp"

#include <cmath>

#include "npmle/rng.hpp"

namespace npmle {

Eigen::VectorXd atom_log_terms(const MixingMeasure& g, const Eigen::Ref<const Point>& x) {
  require(x.size() == g.dim(), "log terms: point dimension must match mixture dimension");
  const double c = -0.5 * g.dim() * kLogTwoPi;
  Eigen::VectorXd t =
      (g.atoms().colwise() - x).colwise().squaredNorm().transpose() * -0.5;
  t.array() += c;
  t += g.log_weights();
  return t;
}

double log_density(const MixingMeasure& g, const Eigen::Ref<const Point>& x) {
  return log_sum_exp(atom_log_terms(g, x));
}

MixtureEval evaluate(const MixingMeasure& g, const Eigen::Ref<const Point>& x) {
  Eigen::VectorXd t = atom_log_terms(g, x);
  MixtureEval out;
  out.log_density = log_sum_exp(t);
  softmax_in_place(t);
  out.responsibilities = std::move(t);
  return out;
}

Point score(const MixingMeasure& g, const Eigen::Ref<const Point>& x) {
  const MixtureEval e = evaluate(g, x);
  return g.atoms() * e.responsibilities - x;
}

double log_likelihood(const MixingMeasure& g, const Dataset& data) {
  require(data.dim() == g.dim(), "log-likelihood: dataset and mixture dimensions differ");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    acc += log_density(g, data.point(i));
  }
  return acc / static_cast<double>(data.size());
}

namespace {

std::vector<Eigen::LLT<Eigen::MatrixXd>> factor_all(const std::vector<Eigen::MatrixXd>& covs,
                                                    int dim, const char* who) {
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  llts.reserve(covs.size());
  for (std::size_t j = 0; j < covs.size(); ++j) {
    const Eigen::MatrixXd& s = covs[j];
    if (s.rows() != dim || s.cols() != dim)
      throw ContractError(std::string(who) + ": covariance has wrong shape");
    if (!all_finite(s) || !s.isApprox(s.transpose(), 1e-10))
      throw ContractError(std::string(who) + ": covariance must be finite and symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
      throw NumericError(std::string(who) + ": covariance " + std::to_string(j) +
                         " is not positive definite");
    llts.push_back(std::move(llt));
  }
  return llts;
}

}  // namespace

Sample sample(const MixingMeasure& g, Eigen::Index n, const NoiseSpec& noise,
              std::uint64_t seed) {
  require(n >= 1, "sample: need at least one draw");
  const int d = g.dim();
  const bool full = !noise.per_point.empty();
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  if (full) {
    if (static_cast<Eigen::Index>(noise.per_point.size()) != n)
      throw ConfigError("sample: per-point covariance count must equal n");
    llts = factor_all(noise.per_point, d, "sample");
  } else if (!(noise.variance > 0.0) || !std::isfinite(noise.variance)) {
    throw ConfigError("sample: noise variance must be positive and finite");
  }
  const double sd = full ? 1.0 : std::sqrt(noise.variance);

  // Cumulative weights for inverse-CDF component draws.
  Eigen::VectorXd cum(g.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    acc += g.weights()(j);
    cum(j) = acc;
  }
  cum(g.size() - 1) = 1.0;

  Rng rng(seed);
  Eigen::MatrixXd pts(d, n);
  Eigen::MatrixXd latents(d, n);
  std::vector<Eigen::Index> components(static_cast<std::size_t>(n));
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    Eigen::Index j = 0;
    while (j + 1 < g.size() && u > cum(j)) ++j;
    components[static_cast<std::size_t>(i)] = j;
    latents.col(i) = g.atom(j);
    for (int k = 0; k < d; ++k) z(k) = rng.normal();
    if (full) {
      pts.col(i) = latents.col(i) + llts[static_cast<std::size_t>(i)].matrixL() * z;
    } else {
      pts.col(i) = latents.col(i) + sd * z;
    }
  }
  return Sample{Dataset(std::move(pts)), std::move(latents), std::move(components)};
}

GaussianMixtureFull::GaussianMixtureFull(Eigen::MatrixXd means,
                                         std::vector<Eigen::MatrixXd> covs,
                                         Eigen::VectorXd weights)
    : means_(std::move(means)) {
  const int d = static_cast<int>(means_.rows());
  require(means_.cols() >= 1, "full mixture: need at least one component");
  require(all_finite(means_), "full mixture: means must be finite");
  require(static_cast<Eigen::Index>(covs.size()) == means_.cols(),
          "full mixture: one covariance per component");
  require(weights.size() == means_.cols(), "full mixture: one weight per component");
  require(weights.allFinite() && (weights.array() >= 0.0).all() &&
              std::abs(weights.sum() - 1.0) <= 1e-12,
          "full mixture: weights must be a probability vector");
  llts_ = factor_all(covs, d, "full mixture");
  log_weights_ = weights.array().log();
  log_norm_.resize(means_.cols());
  for (Eigen::Index j = 0; j < means_.cols(); ++j) {
    const auto& L = llts_[static_cast<std::size_t>(j)].matrixLLT();
    double half_log_det = 0.0;
    for (int k = 0; k < d; ++k) half_log_det += std::log(L(k, k));
    log_norm_(j) = -0.5 * d * kLogTwoPi - half_log_det;
  }
}

Eigen::VectorXd GaussianMixtureFull::component_log_terms(
    const Eigen::Ref<const Point>& x) const {
  require(x.size() == dim(), "full mixture: point dimension mismatch");
  Eigen::VectorXd t(size());
  for (Eigen::Index j = 0; j < size(); ++j) {
    const Eigen::VectorXd r = x - means_.col(j);
    const Eigen::VectorXd y = llts_[static_cast<std::size_t>(j)].matrixL().solve(r);
    t(j) = log_weights_(j) + log_norm_(j) - 0.5 * y.squaredNorm();
  }
  return t;
}

double GaussianMixtureFull::log_density(const Eigen::Ref<const Point>& x) const {
  return log_sum_exp(component_log_terms(x));
}

Point GaussianMixtureFull::score(const Eigen::Ref<const Point>& x) const {
  Eigen::VectorXd r = component_log_terms(x);
  softmax_in_place(r);
  Point s = Point::Zero(dim());
  for (Eigen::Index j = 0; j < size(); ++j) {
    if (r(j) == 0.0) continue;
    s += r(j) * llts_[static_cast<std::size_t>(j)].solve(means_.col(j) - x);
  }
  return s;
}

Point GaussianMixtureFull::posterior_mean(const Eigen::Ref<const Point>& x) const {
  Eigen::VectorXd r = component_log_terms(x);
  softmax_in_place(r);
  return means_ * r;
}

}  // namespace npmle
