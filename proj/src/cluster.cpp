#include "npmle/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "npmle/rng.hpp"

namespace npmle {

namespace {

constexpr int kLloydMaxSweeps = 300;
constexpr int kGapKmeansRestarts = 10;

/// Distinct initial centers drawn as data points, by partial Fisher-Yates.
Eigen::MatrixXd random_point_init(const Dataset& data, int k, Rng& rng) {
  const Eigen::Index n = data.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd centers(data.dim(), k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index pick =
        c + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - c)));
    std::swap(idx[static_cast<std::size_t>(c)], idx[static_cast<std::size_t>(pick)]);
    centers.col(c) = data.point(idx[static_cast<std::size_t>(c)]);
  }
  return centers;
}

int nearest_center(const Eigen::MatrixXd& centers, const Point& x) {
  int best = 0;
  double best_d = (x - centers.col(0)).squaredNorm();
  for (int c = 1; c < centers.cols(); ++c) {
    const double dd = (x - centers.col(c)).squaredNorm();
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  return best;
}

KMeansResult lloyd(const Dataset& data, int k, Rng& rng) {
  const Eigen::Index n = data.size();
  const int d = data.dim();
  KMeansResult res;
  res.centers = random_point_init(data, k, rng);
  res.labels.assign(static_cast<std::size_t>(n), -1);

  for (int sweep = 0; sweep < kLloydMaxSweeps; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_center(res.centers, data.point(i));
      if (c != res.labels[static_cast<std::size_t>(i)]) {
        res.labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, k);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = res.labels[static_cast<std::size_t>(i)];
      sums.col(c) += data.point(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        res.centers.col(c) = sums.col(c) / double(counts[static_cast<std::size_t>(c)]);
      } else {
        // Reseed an emptied cluster at the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const int ci = res.labels[static_cast<std::size_t>(i)];
          const double dd = (data.point(i) - res.centers.col(ci)).squaredNorm();
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        res.centers.col(c) = data.point(far);
      }
    }
  }

  res.within_ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    res.within_ss +=
        (data.point(i) - res.centers.col(res.labels[static_cast<std::size_t>(i)]))
            .squaredNorm();
  }
  return res;
}

}  // namespace

KMeansResult kmeans(const Dataset& data, int k, int restarts, std::uint64_t seed) {
  require(k >= 1, "kmeans: k must be at least 1");
  require(k <= data.size(), "kmeans: k cannot exceed the number of observations");
  require(restarts >= 1, "kmeans: need at least one restart");

  KMeansResult best;
  best.within_ss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, 0x6b6d65616e73ULL, static_cast<std::uint64_t>(r)));
    KMeansResult cand = lloyd(data, k, rng);
    if (cand.within_ss < best.within_ss) best = std::move(cand);
  }
  return best;
}

int gap_statistic(const Dataset& data, int k_max, int b_refs, std::uint64_t seed) {
  require(k_max >= 1, "gap_statistic: k_max must be at least 1");
  require(k_max <= data.size(), "gap_statistic: k_max cannot exceed n");
  require(b_refs >= 2, "gap_statistic: need at least two reference draws");

  const Eigen::Index n = data.size();
  const int d = data.dim();
  const Point lo = data.points().rowwise().minCoeff();
  const Point hi = data.points().rowwise().maxCoeff();
  if ((hi - lo).maxCoeff() == 0.0) return 1;  // all points identical

  // log W_k for the data; a zero within-SS means k clusters already explain
  // everything, and no larger k can beat it.
  std::vector<double> log_w(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    const KMeansResult r =
        kmeans(data, k, kGapKmeansRestarts, derive_seed(seed, 0x676170ULL, k));
    if (r.within_ss <= 0.0) return k;
    log_w[static_cast<std::size_t>(k - 1)] = std::log(r.within_ss);
  }

  std::vector<double> gap(static_cast<std::size_t>(k_max));
  std::vector<double> sk(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    double mean = 0.0, mean2 = 0.0;
    for (int b = 0; b < b_refs; ++b) {
      Rng rng(derive_seed(seed, 0x726566ULL, static_cast<std::uint64_t>(b)));
      Eigen::MatrixXd ref(d, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int t = 0; t < d; ++t) {
          ref(t, i) = lo(t) + (hi(t) - lo(t)) * rng.uniform();
        }
      }
      const KMeansResult r =
          kmeans(Dataset(std::move(ref)), k, kGapKmeansRestarts,
                 derive_seed(derive_seed(seed, 0x7265666bULL, static_cast<std::uint64_t>(b)),
                             static_cast<std::uint64_t>(k)));
      const double lw = std::log(std::max(r.within_ss, 1e-300));
      mean += lw;
      mean2 += lw * lw;
    }
    mean /= b_refs;
    mean2 /= b_refs;
    gap[static_cast<std::size_t>(k - 1)] = mean - log_w[static_cast<std::size_t>(k - 1)];
    const double sd = std::sqrt(std::max(0.0, mean2 - mean * mean));
    sk[static_cast<std::size_t>(k - 1)] = sd * std::sqrt(1.0 + 1.0 / b_refs);
  }

  for (int k = 1; k < k_max; ++k) {
    if (gap[static_cast<std::size_t>(k - 1)] >=
        gap[static_cast<std::size_t>(k)] - sk[static_cast<std::size_t>(k)]) {
      return k;
    }
  }
  return k_max;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  require(a.size() == b.size(), "adjusted_rand_index: labelings must pair up");
  require(!a.empty(), "adjusted_rand_index: need at least one item");
  const auto comb2 = [](std::int64_t c) { return double(c) * double(c - 1) / 2.0; };

  std::map<std::pair<int, int>, std::int64_t> cells;
  std::map<int, std::int64_t> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, c] : cells) sum_cells += comb2(c);
  for (const auto& [key, c] : rows) sum_rows += comb2(c);
  for (const auto& [key, c] : cols) sum_cols += comb2(c);

  const double total = comb2(static_cast<std::int64_t>(a.size()));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both partitions degenerate and equal
  return (sum_cells - expected) / (maximum - expected);
}

std::vector<int> eb_cluster_assign(const MixingMeasure& fit, const Dataset& data) {
  require(fit.dim() == data.dim(), "eb_cluster_assign: mixture and data dimensions differ");
  std::vector<int> labels(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd t = atom_log_terms(fit, data.point(i));
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < t.size(); ++j) {
      if (t(j) > t(best)) best = j;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace npmle
