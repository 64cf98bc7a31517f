#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>

namespace npmle {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// log of the unit-covariance d-variate normal density at squared radius q.
inline double log_unit_normal(double sq_norm, int dim) {
  return -0.5 * (dim * kLogTwoPi + sq_norm);
}

/// (2*pi)^(-d/2), the density ceiling of any unit-covariance location mixture.
inline double unit_normal_peak(int dim) {
  return std::exp(-0.5 * dim * kLogTwoPi);
}

/// log(sum_j exp(v_j)) with a max shift.  -inf entries contribute nothing;
/// an all-(-inf) input yields -inf.
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  const double m = v.derived().maxCoeff();
  if (!std::isfinite(m)) {
    return m > 0 ? std::numeric_limits<double>::infinity()
                 : -std::numeric_limits<double>::infinity();
  }
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += std::exp(v.derived()(j) - m);
  return m + std::log(s);
}

/// Overwrites v with softmax(v) using the same shift; -inf entries become 0.
inline void softmax_in_place(Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    v(j) = std::exp(v(j) - m);
    s += v(j);
  }
  v /= s;
}

}  // namespace npmle
