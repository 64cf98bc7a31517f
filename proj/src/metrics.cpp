#include "npmle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "npmle/gauss.hpp"
#include "npmle/mixture.hpp"
#include "npmle/rng.hpp"

namespace npmle {

namespace {

constexpr Eigen::Index kDefaultNodes1d = 512;
constexpr Eigen::Index kDefaultNodes2d = 256;
constexpr Eigen::Index kDefaultMcSamples = 100'000;

void check_same_dim(const MixingMeasure& f, const MixingMeasure& g, const char* who) {
  if (f.dim() != g.dim()) {
    throw ContractError(std::string(who) + ": mixtures must share a dimension");
  }
}

int quadrature_nodes(int dim, Eigen::Index budget) {
  if (budget > 0) return static_cast<int>(budget);
  return static_cast<int>(dim == 1 ? kDefaultNodes1d : kDefaultNodes2d);
}

/// Applies fn(point, quadrature weight) over the tensor grid.
template <typename Fn>
void for_each_node(const Point& lo, const Point& hi, int nodes, Fn&& fn) {
  const int d = static_cast<int>(lo.size());
  require_config(d == 1 || d == 2,
                 "quadrature: tensor grids cover dimensions 1 and 2 only; use "
                 "IntegrationMethod::MonteCarlo for higher dimensions");
  if (d == 1) {
    const QuadratureRule r = gauss_legendre(nodes, lo(0), hi(0));
    Point x(1);
    for (int i = 0; i < nodes; ++i) {
      x(0) = r.nodes(i);
      fn(x, r.weights(i));
    }
  } else {
    const QuadratureRule rx = gauss_legendre(nodes, lo(0), hi(0));
    const QuadratureRule ry = gauss_legendre(nodes, lo(1), hi(1));
    Point x(2);
    for (int i = 0; i < nodes; ++i) {
      x(0) = rx.nodes(i);
      for (int j = 0; j < nodes; ++j) {
        x(1) = ry.nodes(j);
        fn(x, rx.weights(i) * ry.weights(j));
      }
    }
  }
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  require(n >= 2, "gauss_legendre: need at least two nodes");
  require(std::isfinite(a) && std::isfinite(b) && a < b,
          "gauss_legendre: need a finite nonempty interval");
  QuadratureRule out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  // Nodes are roots of P_n found by Newton from the Chebyshev-like initial
  // guess; symmetric pairs are filled together.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // One Legendre evaluation at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const double mid = 0.5 * (a + b);
    const double halfwidth = 0.5 * (b - a);
    out.nodes(i) = mid - halfwidth * x;
    out.nodes(n - 1 - i) = mid + halfwidth * x;
    out.weights(i) = w * halfwidth;
    out.weights(n - 1 - i) = w * halfwidth;
  }
  return out;
}

std::pair<Point, Point> joint_atom_box(const MixingMeasure& f, const MixingMeasure& g,
                                       double pad) {
  check_same_dim(f, g, "joint_atom_box");
  Point lo = f.atoms().rowwise().minCoeff().cwiseMin(g.atoms().rowwise().minCoeff());
  Point hi = f.atoms().rowwise().maxCoeff().cwiseMax(g.atoms().rowwise().maxCoeff());
  lo.array() -= pad;
  hi.array() += pad;
  return {std::move(lo), std::move(hi)};
}

double bhattacharyya_quadrature(const LogDensityFn& log_f, const LogDensityFn& log_g,
                                const Point& lo, const Point& hi, int nodes_per_axis) {
  double acc = 0.0;
  for_each_node(lo, hi, nodes_per_axis, [&](const Point& x, double w) {
    acc += w * std::exp(0.5 * (log_f(x) + log_g(x)));
  });
  return acc;
}

double total_variation_quadrature(const LogDensityFn& log_f, const LogDensityFn& log_g,
                                  const Point& lo, const Point& hi, int nodes_per_axis) {
  double acc = 0.0;
  for_each_node(lo, hi, nodes_per_axis, [&](const Point& x, double w) {
    acc += w * std::abs(std::exp(log_f(x)) - std::exp(log_g(x)));
  });
  return 0.5 * acc;
}

double hellinger_squared_between_atoms(const Point& a, const Point& b) {
  require(a.size() == b.size(), "hellinger: atoms must share a dimension");
  const double r2 = (a - b).squaredNorm();
  return 2.0 * (1.0 - std::exp(-r2 / 8.0));
}

HellingerEstimate hellinger_squared(const MixingMeasure& f, const MixingMeasure& g,
                                    IntegrationMethod method, Eigen::Index budget,
                                    std::uint64_t seed) {
  check_same_dim(f, g, "hellinger_squared");
  HellingerEstimate out;
  out.method = method;

  if (method == IntegrationMethod::Quadrature) {
    const int nodes = quadrature_nodes(f.dim(), budget);
    const auto [lo, hi] = joint_atom_box(f, g);
    const double bc = bhattacharyya_quadrature(
        [&](const Point& x) { return log_density(f, x); },
        [&](const Point& x) { return log_density(g, x); }, lo, hi, nodes);
    out.value_sq = std::clamp(2.0 - 2.0 * bc, 0.0, 2.0);
    out.n_eval = f.dim() == 1 ? nodes : Eigen::Index(nodes) * nodes;
    return out;
  }

  const Eigen::Index samples = budget > 0 ? budget : kDefaultMcSamples;
  const Sample draws = sample(f, samples, NoiseSpec::identity(), seed);
  double acc = 0.0, acc2 = 0.0;
  for (Eigen::Index i = 0; i < samples; ++i) {
    const Point x = draws.data.point(i);
    const double ratio = std::exp(0.5 * (log_density(g, x) - log_density(f, x)));
    acc += ratio;
    acc2 += ratio * ratio;
  }
  const double mean = acc / double(samples);
  const double var = std::max(0.0, acc2 / double(samples) - mean * mean);
  out.value_sq = std::clamp(2.0 - 2.0 * mean, 0.0, 2.0);
  out.std_error = 2.0 * std::sqrt(var / double(samples));
  out.n_eval = samples;
  return out;
}

double total_variation_upper(const MixingMeasure& f, const MixingMeasure& g,
                             IntegrationMethod method, Eigen::Index budget,
                             std::uint64_t seed) {
  check_same_dim(f, g, "total_variation_upper");
  if (method == IntegrationMethod::Quadrature) {
    const int nodes = quadrature_nodes(f.dim(), budget);
    const auto [lo, hi] = joint_atom_box(f, g);
    const double tv = total_variation_quadrature(
        [&](const Point& x) { return log_density(f, x); },
        [&](const Point& x) { return log_density(g, x); }, lo, hi, nodes);
    return std::clamp(tv, 0.0, 1.0);
  }
  const Eigen::Index samples = budget > 0 ? budget : kDefaultMcSamples;
  const Sample draws = sample(f, samples, NoiseSpec::identity(), seed);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < samples; ++i) {
    const Point x = draws.data.point(i);
    const double ratio = std::exp(log_density(g, x) - log_density(f, x));
    acc += std::max(0.0, 1.0 - ratio);
  }
  return std::clamp(acc / double(samples), 0.0, 1.0);
}

double mean_squared_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "mean_squared_error: point sets must have matching shapes");
  require(a.cols() >= 1, "mean_squared_error: need at least one point");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    acc += (a.col(i) - b.col(i)).squaredNorm();
  }
  return acc / double(a.cols());
}

}  // namespace npmle
