#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "npmle/errors.hpp"

namespace npmle {

using Point = Eigen::VectorXd;

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

/// Finite discrete probability measure on R^d: atoms as columns, nonnegative
/// weights summing to one (within 1e-12).  Immutable after construction; the
/// log-weights are cached because density evaluation is the hot path.
class MixingMeasure {
 public:
  MixingMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    require(atoms_.rows() >= 1, "mixing measure: dimension must be at least 1");
    require(atoms_.cols() >= 1, "mixing measure: need at least one atom");
    require(weights_.size() == atoms_.cols(),
            "mixing measure: weight count must match atom count");
    require(all_finite(atoms_), "mixing measure: atoms must be finite");
    require(weights_.allFinite() && (weights_.array() >= 0.0).all(),
            "mixing measure: weights must be finite and nonnegative");
    require(std::abs(weights_.sum() - 1.0) <= 1e-12,
            "mixing measure: weights must sum to one");
    log_weights_ = weights_.array().log();  // log 0 = -inf is intended
  }

  static MixingMeasure dirac(const Point& location) {
    Eigen::MatrixXd a(location.size(), 1);
    a.col(0) = location;
    return MixingMeasure(std::move(a), Eigen::VectorXd::Ones(1));
  }

  static MixingMeasure uniform_on(Eigen::MatrixXd atoms) {
    const Eigen::Index m = atoms.cols();
    require(m >= 1, "mixing measure: need at least one atom");
    return MixingMeasure(std::move(atoms), Eigen::VectorXd::Constant(m, 1.0 / double(m)));
  }

  int dim() const { return static_cast<int>(atoms_.rows()); }
  Eigen::Index size() const { return atoms_.cols(); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& log_weights() const { return log_weights_; }
  Point atom(Eigen::Index j) const { return atoms_.col(j); }

 private:
  Eigen::MatrixXd atoms_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd log_weights_;
};

/// n observations in R^d, one per column.
class Dataset {
 public:
  explicit Dataset(Eigen::MatrixXd points) : points_(std::move(points)) {
    require(points_.rows() >= 1, "dataset: dimension must be at least 1");
    require(points_.cols() >= 1, "dataset: need at least one observation");
    require(all_finite(points_), "dataset: observations must be finite");
  }

  /// Builds from a rows-are-observations matrix (the CSV orientation).
  static Dataset from_rows(const Eigen::MatrixXd& rows) { return Dataset(rows.transpose()); }

  int dim() const { return static_cast<int>(points_.rows()); }
  Eigen::Index size() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  Point point(Eigen::Index i) const { return points_.col(i); }

 private:
  Eigen::MatrixXd points_;
};

}  // namespace npmle
