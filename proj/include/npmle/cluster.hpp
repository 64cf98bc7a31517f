#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "npmle/mixture.hpp"
#include "npmle/types.hpp"

namespace npmle {

struct KMeansResult {
  Eigen::MatrixXd centers;  // d x k
  std::vector<int> labels;  // cluster index per observation
  double within_ss = 0.0;   // sum of squared distances to assigned centers
};

/// Lloyd's algorithm with seeded random-point initializations; the best of
/// `restarts` runs by within-cluster sum of squares wins.  Each run iterates
/// to a fixed assignment or 300 sweeps; a cluster that empties is reseeded at
/// the point currently farthest from its assigned center.
KMeansResult kmeans(const Dataset& data, int k, int restarts, std::uint64_t seed);

/// Gap-statistic choice of the cluster count: compares log within-SS against
/// uniform reference draws over the data's bounding box and returns the
/// smallest k with Gap(k) >= Gap(k+1) - s_{k+1}, falling back to k_max when
/// no k qualifies.  Identical points (zero spread) yield 1.
int gap_statistic(const Dataset& data, int k_max, int b_refs, std::uint64_t seed);

/// Adjusted Rand index between two labelings of the same items; 1 for
/// identical partitions, 0 in expectation under independence.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Hard cluster assignment under a fitted mixture: the atom with the largest
/// posterior responsibility, lowest index on ties.
std::vector<int> eb_cluster_assign(const MixingMeasure& fit, const Dataset& data);

}  // namespace npmle
