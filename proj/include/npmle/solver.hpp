#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "npmle/mixture.hpp"
#include "npmle/types.hpp"

namespace npmle {

/// How the finite candidate support {a_1, ..., a_m} is chosen.
struct SupportStrategy {
  enum class Kind { Exemplar, Grid, Subsample, Binned };

  Kind kind = Kind::Exemplar;
  int points_per_dim = 0;                    // Grid
  Eigen::Index subsample_m = 0;              // Subsample
  std::uint64_t seed = 0;                    // Subsample
  int bins_per_dim = 0;                      // Binned
  Eigen::Index max_tensor_points = 1'000'000;  // cap on points_per_dim^d / bins^d

  static SupportStrategy exemplar() { return {}; }
  static SupportStrategy grid(int points_per_dim) {
    SupportStrategy s;
    s.kind = Kind::Grid;
    s.points_per_dim = points_per_dim;
    return s;
  }
  static SupportStrategy subsample(Eigen::Index m, std::uint64_t seed) {
    SupportStrategy s;
    s.kind = Kind::Subsample;
    s.subsample_m = m;
    s.seed = seed;
    return s;
  }
  static SupportStrategy binned(int bins_per_dim) {
    SupportStrategy s;
    s.kind = Kind::Binned;
    s.bins_per_dim = bins_per_dim;
    return s;
  }
};

enum class SolveMethod { EM, FrankWolfe, EMThenFW };

struct SolverConfig {
  SolveMethod method = SolveMethod::EMThenFW;
  Eigen::Index max_iters = 50'000;
  /// Certificate gap per unit of observation weight at which to stop.
  double gap_tol = 1e-6;
  /// Weights strictly below this are zeroed at the end and the rest
  /// renormalized; defaults to 1e-10 / m when unset.
  std::optional<double> prune_tol;
  /// Reserved for stochastic variants; every method here is deterministic.
  std::uint64_t seed = 0;
  /// EM sweeps run before the vertex phase under EMThenFW.
  Eigen::Index em_warmup = 200;
  /// In the vertex phase, insert one EM sweep after this many consecutive
  /// vertex steps (0 disables).  The sweep is monotone and only changes how
  /// fast the same optimum is reached; alternating 1:1 measured an order of
  /// magnitude fewer iterations than vertex steps alone on exemplar supports.
  Eigen::Index em_refresh_every = 1;
  /// The n-by-m kernel is held in memory up to this many entries and
  /// recomputed column-by-column beyond it.
  Eigen::Index kernel_entry_limit = 50'000'000;
  int threads = 1;
};

/// Candidate atoms plus the observation side the solver works against.
/// For Binned, the observations are replaced by the occupied bin centers and
/// obs_weights carries the bin counts (summing to n); otherwise the
/// observations pass through with unit weights.
struct SupportBuild {
  Eigen::MatrixXd atoms;  // d x m
  Dataset pseudo_obs;
  Eigen::VectorXd obs_weights;
  std::vector<Eigen::Index> bin_counts;  // Binned only, aligned with pseudo_obs
};

SupportBuild build_support(const Dataset& data, const SupportStrategy& strategy);

struct FitResult {
  MixingMeasure mixture;
  /// log f-hat at each observation passed to solve, recomputed after pruning.
  Eigen::VectorXd fitted_log_densities;
  /// Certificate gap of the returned mixture over its own support.
  double duality_gap = 0.0;
  Eigen::Index iterations = 0;
  /// Mean log-likelihood per unit observation weight: the starting point,
  /// every iteration up to 1024, every 64th beyond that, and the final
  /// iterate.  Nondecreasing along the run.
  std::vector<double> loglik_trace;
  /// Observation multiplicities when the support came from binning.
  std::vector<Eigen::Index> weights_multiplicity;
};

/// Maximizes sum_i c_i log(sum_j w_j phi_d(X_i - a_j)) over the weight
/// simplex for the fixed atom set, to within cfg.gap_tol on the certificate
/// max_j sum_i c_i A_ij / (Aw)_i <= sum_i c_i.  Runs that exhaust max_iters
/// return normally with the achieved gap; callers decide whether to care.
FitResult solve(const Dataset& obs, const Eigen::MatrixXd& atoms,
                const Eigen::VectorXd& obs_weights, const SolverConfig& cfg);

/// Certificate gap max_j [sum_i c_i A_ij / (Aw)_i] / (sum_i c_i) - 1 of the
/// given weights over the given atoms; nonnegative up to roundoff, and zero
/// exactly at the optimum.
double duality_gap(const Dataset& obs, const Eigen::MatrixXd& atoms,
                   const Eigen::VectorXd& obs_weights, const Eigen::VectorXd& weights);

/// build_support followed by solve.
FitResult fit_npmle(const Dataset& data, const SupportStrategy& strategy,
                    const SolverConfig& cfg);

}  // namespace npmle
