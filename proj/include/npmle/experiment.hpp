#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "npmle/scenarios.hpp"
#include "npmle/solver.hpp"

namespace npmle {

/// Which estimators a run evaluates.  Oracle-Bayes clustering additionally
/// needs a finite sampling mixture, so it is skipped for the shape scenarios.
struct Methods {
  bool empirical_bayes = true;
  bool oracle_bayes = true;
  bool kmeans_oracle_k = true;
  bool kmeans_gap = true;

  static Methods all() { return {}; }
  static Methods denoising_only() { return {true, true, false, false}; }
};

struct MetricCell {
  double mean = 0.0;
  double std_error = 0.0;
  Eigen::Index count = 0;
};

struct ExperimentReport {
  ScenarioKind scenario;
  std::uint64_t seed = 0;
  Eigen::Index n_replicates = 0;
  std::vector<Eigen::Index> n_list;

  struct Row {
    Eigen::Index n;
    Eigen::Index replicate;
    std::string metric;
    double value;
  };
  /// Long format, ordered by (n, replicate, metric name).
  std::vector<Row> rows;
  /// Mean and standard error per sample size and metric, reduced in sorted
  /// key order.
  std::map<Eigen::Index, std::map<std::string, MetricCell>> aggregated;
};

/// Runs the scenario across sample sizes and replicates: per replicate the
/// data are drawn with a seed derived from (seed, n, r), the mixture is
/// fitted, and every requested estimator is scored against the latents.
/// Replicates are independent and may run on several threads; outputs are
/// identical for any thread count.
ExperimentReport run_experiment(const ScenarioSpec& spec,
                                const std::vector<Eigen::Index>& n_list,
                                Eigen::Index n_replicates, const Methods& methods,
                                std::uint64_t seed, const SolverConfig& solver_cfg = {},
                                int threads = 1);

/// Desk-scale defaults: 50 replicates at n in {300, 600, 900}.
std::vector<Eigen::Index> default_n_list();
inline constexpr Eigen::Index kDefaultReplicates = 50;

/// The published protocol: 1000 replicates at n in {300, 600, ..., 2100}.
std::vector<Eigen::Index> full_n_list();
inline constexpr Eigen::Index kFullReplicates = 1000;

}  // namespace npmle
