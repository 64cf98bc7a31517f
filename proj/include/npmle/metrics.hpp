#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "npmle/types.hpp"

namespace npmle {

enum class IntegrationMethod { Quadrature, MonteCarlo };

struct HellingerEstimate {
  double value_sq = 0.0;  // squared Hellinger distance, in [0, 2]
  IntegrationMethod method = IntegrationMethod::Quadrature;
  std::optional<double> std_error;  // Monte Carlo only
  Eigen::Index n_eval = 0;          // integrand evaluations or samples used
};

/// Gauss-Legendre nodes and weights on [a, b].
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
QuadratureRule gauss_legendre(int n, double a, double b);

/// Squared Hellinger distance between the Gaussian location mixtures induced
/// by f and g.  Quadrature integrates sqrt(f g) on a tensor Gauss-Legendre
/// grid over the joint atom bounding box padded by 8 units (d <= 2 only);
/// budget is the node count per axis, defaulting to 512 in d=1 and 256 in
/// d=2.  Monte Carlo averages sqrt(g/f) under draws from f, with budget
/// samples (default 100000) and a reported standard error.
HellingerEstimate hellinger_squared(const MixingMeasure& f, const MixingMeasure& g,
                                    IntegrationMethod method = IntegrationMethod::Quadrature,
                                    Eigen::Index budget = 0, std::uint64_t seed = 0);

/// Closed form for two unit-variance single-atom densities at centers a, b:
/// 2 (1 - exp(-|a-b|^2 / 8)).
double hellinger_squared_between_atoms(const Point& a, const Point& b);

/// Total variation distance (1/2) integral |f - g|, by the same quadrature
/// scheme, or by Monte Carlo as the mean of (1 - g/f)_+ under f.  An upper
/// bound on the error of any event probability, hence the _upper suffix.
double total_variation_upper(const MixingMeasure& f, const MixingMeasure& g,
                             IntegrationMethod method = IntegrationMethod::Quadrature,
                             Eigen::Index budget = 0, std::uint64_t seed = 0);

/// (1/n) sum_i |a_i - b_i|^2 over paired columns, accumulated in index order.
double mean_squared_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Callable form used wherever a density is not a plain location mixture
/// (rescaled fits, full-covariance references).
using LogDensityFn = std::function<double(const Point&)>;

/// Tensor-product Gauss-Legendre integral of sqrt(f g) over the box
/// [lo, hi]; d <= 2.  The building block behind the quadrature path.
double bhattacharyya_quadrature(const LogDensityFn& log_f, const LogDensityFn& log_g,
                                const Point& lo, const Point& hi, int nodes_per_axis);

/// Same grid, integrating |f - g| / 2.
double total_variation_quadrature(const LogDensityFn& log_f, const LogDensityFn& log_g,
                                  const Point& lo, const Point& hi, int nodes_per_axis);

/// Joint atom bounding box of two mixtures, padded on every side.
std::pair<Point, Point> joint_atom_box(const MixingMeasure& f, const MixingMeasure& g,
                                       double pad = 8.0);

}  // namespace npmle
