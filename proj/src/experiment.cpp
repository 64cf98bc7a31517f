#include "npmle/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "npmle/cluster.hpp"
#include "npmle/denoise.hpp"
#include "npmle/metrics.hpp"
#include "npmle/parallel.hpp"
#include "npmle/rng.hpp"

namespace npmle {

namespace {

constexpr int kKMeansRestarts = 10;
constexpr int kGapKMax = 10;
constexpr int kGapRefs = 10;

/// Cluster-center estimate of each latent: the center of the cluster the
/// observation landed in.
Eigen::MatrixXd center_estimates(const KMeansResult& km, Eigen::Index n, int d) {
  Eigen::MatrixXd est(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    est.col(i) = km.centers.col(km.labels[static_cast<std::size_t>(i)]);
  }
  return est;
}

using ReplicateMetrics = std::vector<std::pair<std::string, double>>;

ReplicateMetrics run_replicate(const ScenarioSpec& base, Eigen::Index n,
                               Eigen::Index replicate, const Methods& methods,
                               std::uint64_t master_seed, const SolverConfig& solver_cfg) {
  ScenarioSpec spec = base;
  spec.n = n;
  spec.seed = derive_seed(master_seed, static_cast<std::uint64_t>(n),
                          static_cast<std::uint64_t>(replicate));
  const GeneratedScenario gen = generate(spec);
  const Eigen::Index nn = gen.data.size();
  const int d = gen.data.dim();

  ReplicateMetrics out;
  std::optional<Eigen::MatrixXd> oracle_est;
  if (methods.oracle_bayes) {
    // The oracle sees the realized latents, not the sampling law.
    oracle_est = oracle_bayes(empirical_measure(gen.latents), gen.data);
    out.emplace_back("mse_oracle_vs_truth", mean_squared_error(*oracle_est, gen.latents));
  }

  if (methods.empirical_bayes) {
    const FitResult fit = fit_npmle(gen.data, SupportStrategy::exemplar(), solver_cfg);
    const DenoiseResult den = tweedie_denoise(fit.mixture, gen.data, 0.0);
    out.emplace_back("mse_eb_vs_truth", mean_squared_error(den.estimates, gen.latents));
    if (oracle_est) {
      out.emplace_back("mse_eb_vs_oracle", mean_squared_error(den.estimates, *oracle_est));
    }
    out.emplace_back(
        "ari_eb", adjusted_rand_index(eb_cluster_assign(fit.mixture, gen.data), gen.labels));
  }

  if (methods.oracle_bayes && gen.sampling_mixture) {
    out.emplace_back("ari_oracle_bayes",
                     adjusted_rand_index(
                         eb_cluster_assign(*gen.sampling_mixture, gen.data), gen.labels));
  }

  if (methods.kmeans_oracle_k) {
    const int k = true_component_count(spec);
    const KMeansResult km = kmeans(gen.data, k, kKMeansRestarts,
                                   derive_seed(spec.seed, 0x6f7261636c655fULL));
    out.emplace_back("mse_kmeans_oracle_k",
                     mean_squared_error(center_estimates(km, nn, d), gen.latents));
    out.emplace_back("ari_kmeans_oracle_k", adjusted_rand_index(km.labels, gen.labels));
  }

  if (methods.kmeans_gap) {
    const std::uint64_t gseed = derive_seed(spec.seed, 0x6761705fULL);
    const int k = gap_statistic(gen.data, std::min<Eigen::Index>(kGapKMax, nn), kGapRefs,
                                gseed);
    const KMeansResult km =
        kmeans(gen.data, k, kKMeansRestarts, derive_seed(gseed, 0x66697453ULL));
    out.emplace_back("mse_kmeans_gap",
                     mean_squared_error(center_estimates(km, nn, d), gen.latents));
    out.emplace_back("ari_kmeans_gap", adjusted_rand_index(km.labels, gen.labels));
  }

  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ScenarioSpec& spec,
                                const std::vector<Eigen::Index>& n_list,
                                Eigen::Index n_replicates, const Methods& methods,
                                std::uint64_t seed, const SolverConfig& solver_cfg,
                                int threads) {
  require(n_replicates >= 1, "run_experiment: need at least one replicate");
  std::vector<Eigen::Index> sizes = n_list.empty() ? std::vector<Eigen::Index>{spec.n} : n_list;
  for (const Eigen::Index n : sizes) {
    require(n >= 1, "run_experiment: sample sizes must be positive");
  }

  ExperimentReport report;
  report.scenario = spec.kind;
  report.seed = seed;
  report.n_replicates = n_replicates;
  report.n_list = sizes;

  for (const Eigen::Index n : sizes) {
    // Replicates are independent; each stores into its own slot, and the
    // report is assembled in replicate order afterwards.
    std::vector<ReplicateMetrics> cells(static_cast<std::size_t>(n_replicates));
    parallel_for(n_replicates, threads, [&](Eigen::Index lo, Eigen::Index hi) {
      for (Eigen::Index r = lo; r < hi; ++r) {
        cells[static_cast<std::size_t>(r)] =
            run_replicate(spec, n, r, methods, seed, solver_cfg);
      }
    });
    for (Eigen::Index r = 0; r < n_replicates; ++r) {
      for (const auto& [metric, value] : cells[static_cast<std::size_t>(r)]) {
        report.rows.push_back({n, r, metric, value});
      }
    }
  }

  // Reduce in sorted key order: n ascending, metrics alphabetical, replicate
  // contributions in replicate order.
  for (const Eigen::Index n : sizes) {
    std::map<std::string, std::vector<double>> by_metric;
    for (const auto& row : report.rows) {
      if (row.n == n) by_metric[row.metric].push_back(row.value);
    }
    for (const auto& [metric, values] : by_metric) {
      MetricCell cell;
      cell.count = static_cast<Eigen::Index>(values.size());
      double acc = 0.0;
      for (const double v : values) acc += v;
      cell.mean = acc / double(values.size());
      double var = 0.0;
      for (const double v : values) var += (v - cell.mean) * (v - cell.mean);
      if (values.size() > 1) {
        var /= double(values.size() - 1);
        cell.std_error = std::sqrt(var / double(values.size()));
      }
      report.aggregated[n][metric] = cell;
    }
  }
  return report;
}

std::vector<Eigen::Index> default_n_list() { return {300, 600, 900}; }

std::vector<Eigen::Index> full_n_list() {
  std::vector<Eigen::Index> out;
  for (Eigen::Index n = 300; n <= 2100; n += 300) out.push_back(n);
  return out;
}

}  // namespace npmle
