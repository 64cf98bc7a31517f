#include "npmle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "npmle/gauss.hpp"
#include "npmle/parallel.hpp"
#include "npmle/rng.hpp"

namespace npmle {

namespace {

constexpr double kObsFloor = 1e-300;  // below this a fitted value counts as underflow

/// Gaussian kernel between observations and atoms, shifted per row by its
/// maximum log entry.  Every solver quantity is invariant to the shift, and
/// with it the stored entries live in (0, 1], so nothing underflows unless an
/// observation is astronomically far from all atoms.  The matrix is held in
/// memory up to entry_limit entries and recomputed per column beyond that.
class Kernel {
 public:
  Kernel(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& atoms,
         Eigen::Index entry_limit, int threads)
      : obs_(obs), atoms_(atoms), dim_(static_cast<int>(obs.rows())) {
    const Eigen::Index n = rows();
    const Eigen::Index m = cols();
    materialized_ = n * m <= entry_limit;
    const double c = -0.5 * dim_ * kLogTwoPi;

    if (materialized_) {
      dense_.noalias() = obs.transpose() * atoms;
      const Eigen::VectorXd on2 = obs.colwise().squaredNorm().transpose();
      const Eigen::VectorXd an2 = atoms.colwise().squaredNorm().transpose();
      parallel_for(m, threads, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index j = lo; j < hi; ++j) {
          dense_.col(j).array() =
              c - 0.5 * (on2.array() + an2(j) - 2.0 * dense_.col(j).array()).max(0.0);
        }
      });
      shift_ = dense_.rowwise().maxCoeff();
      check_shift();
      parallel_for(m, threads, [&](Eigen::Index lo, Eigen::Index hi) {
        for (Eigen::Index j = lo; j < hi; ++j) {
          dense_.col(j).array() = (dense_.col(j) - shift_).array().exp();
        }
      });
    } else {
      shift_ = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double l = c - 0.5 * (obs_.col(i) - atoms_.col(j)).squaredNorm();
          if (l > shift_(i)) shift_(i) = l;
        }
      }
      check_shift();
    }
  }

  Eigen::Index rows() const { return obs_.cols(); }
  Eigen::Index cols() const { return atoms_.cols(); }
  const Eigen::VectorXd& row_shift() const { return shift_; }

  void column_into(Eigen::Index j, Eigen::VectorXd& col) const {
    if (materialized_) {
      col = dense_.col(j);
      return;
    }
    col.resize(rows());
    const double c = -0.5 * dim_ * kLogTwoPi;
    for (Eigen::Index i = 0; i < rows(); ++i) {
      const double l = c - 0.5 * (obs_.col(i) - atoms_.col(j)).squaredNorm();
      col(i) = std::exp(l - shift_(i));
    }
  }

  void apply_into(const Eigen::VectorXd& w, Eigen::VectorXd& u,
                  Eigen::VectorXd& scratch) const {
    if (materialized_) {
      u.noalias() = dense_ * w;
      return;
    }
    u = Eigen::VectorXd::Zero(rows());
    for (Eigen::Index j = 0; j < cols(); ++j) {
      if (w(j) == 0.0) continue;
      column_into(j, scratch);
      u += w(j) * scratch;
    }
  }

  void apply_transpose_into(const Eigen::VectorXd& r, Eigen::VectorXd& g,
                            Eigen::VectorXd& scratch) const {
    if (materialized_) {
      g.noalias() = dense_.transpose() * r;
      return;
    }
    g.resize(cols());
    for (Eigen::Index j = 0; j < cols(); ++j) {
      column_into(j, scratch);
      g(j) = scratch.dot(r);
    }
  }

 private:
  void check_shift() const {
    for (Eigen::Index i = 0; i < shift_.size(); ++i) {
      if (!std::isfinite(shift_(i))) {
        throw NumericError("solve: observation " + std::to_string(i) +
                           " is infinitely far from every support atom");
      }
    }
  }

  const Eigen::MatrixXd& obs_;
  const Eigen::MatrixXd& atoms_;
  int dim_;
  bool materialized_ = false;
  Eigen::MatrixXd dense_;
  Eigen::VectorXd shift_;
};

void check_fitted(const Eigen::VectorXd& u) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u(i) >= kObsFloor)) {
      throw NumericError("solve: fitted value underflowed at observation " +
                         std::to_string(i));
    }
  }
}

double mean_loglik(const Eigen::VectorXd& c, const Eigen::VectorXd& shift,
                   const Eigen::VectorXd& u, double W) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    acc += c(i) * (shift(i) + std::log(u(i)));
  }
  return acc / W;
}

/// Largest coordinate, first index on ties.
Eigen::Index argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v(j) > v(best)) best = j;
  }
  return best;
}

struct IterState {
  Eigen::VectorXd w;
  Eigen::VectorXd u;                // kernel * w, in shifted units
  Eigen::VectorXd r, g, a, d, cd;  // reusable solver buffers
};

/// One multiplicative (EM) sweep: w_j <- w_j * g_j / W, taking the already
/// computed certificate numerator g at the current weights.  Monotone in the
/// objective and sum-preserving; the explicit renormalization only sheds
/// floating-point drift.
void em_sweep(const Kernel& K, double W, IterState& s) {
  s.w = s.w.cwiseProduct(s.g) / W;
  s.w /= s.w.sum();
  K.apply_into(s.w, s.u, s.a);
  check_fitted(s.u);
}

/// Exact line search for the vertex step: maximizes the objective along
/// (1-gamma) u + gamma a by bisecting the (decreasing) derivative.  Both u
/// and a are positive (shifted kernel values), so the mixture stays positive
/// on [0, 1); at gamma = 1 an underflowed a_i yields -inf, which correctly
/// lands in the "step short of the vertex" branch.
double line_search(const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& a, Eigen::VectorXd& d, Eigen::VectorXd& cd) {
  d = a - u;
  cd = c.cwiseProduct(d);  // numerator of the directional derivative
  const auto deriv = [&](double gamma) {
    return (cd.array() / (u.array() + gamma * d.array())).sum();
  };
  if (deriv(1.0) >= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (deriv(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SupportBuild build_support(const Dataset& data, const SupportStrategy& strategy) {
  using Kind = SupportStrategy::Kind;
  const Eigen::Index n = data.size();
  const int d = data.dim();

  switch (strategy.kind) {
    case Kind::Exemplar: {
      return SupportBuild{data.points(), data, Eigen::VectorXd::Ones(n), {}};
    }

    case Kind::Grid: {
      const int ppd = strategy.points_per_dim;
      require_config(ppd >= 2, "grid support: points per dimension must be at least 2");
      double total = 1.0;
      for (int k = 0; k < d; ++k) total *= ppd;
      require_config(total <= double(strategy.max_tensor_points),
                     "grid support: " + std::to_string(total) +
                         " points exceed the cap of " +
                         std::to_string(strategy.max_tensor_points));
      const Eigen::VectorXd lo = data.points().rowwise().minCoeff();
      const Eigen::VectorXd hi = data.points().rowwise().maxCoeff();
      const Eigen::Index m = static_cast<Eigen::Index>(total);
      Eigen::MatrixXd atoms(d, m);
      // Axis 0 varies fastest; each axis is a closed uniform grid over the
      // data's bounding box.
      for (Eigen::Index idx = 0; idx < m; ++idx) {
        Eigen::Index rest = idx;
        for (int k = 0; k < d; ++k) {
          const Eigen::Index pos = rest % ppd;
          rest /= ppd;
          atoms(k, idx) = lo(k) + (hi(k) - lo(k)) * double(pos) / double(ppd - 1);
        }
      }
      return SupportBuild{std::move(atoms), data, Eigen::VectorXd::Ones(n), {}};
    }

    case Kind::Subsample: {
      const Eigen::Index m = strategy.subsample_m;
      require(m >= 1 && m <= n, "subsample support: need 1 <= m <= n");
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(strategy.seed);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index other =
            k + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - k)));
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(other)]);
      }
      Eigen::MatrixXd atoms(d, m);
      for (Eigen::Index k = 0; k < m; ++k) {
        atoms.col(k) = data.point(idx[static_cast<std::size_t>(k)]);
      }
      return SupportBuild{std::move(atoms), data, Eigen::VectorXd::Ones(n), {}};
    }

    case Kind::Binned: {
      const int bpd = strategy.bins_per_dim;
      require_config(bpd >= 1, "binned support: bins per dimension must be at least 1");
      double total = 1.0;
      for (int k = 0; k < d; ++k) total *= bpd;
      require_config(total <= double(strategy.max_tensor_points),
                     "binned support: " + std::to_string(total) +
                         " bins exceed the cap of " +
                         std::to_string(strategy.max_tensor_points));
      const Eigen::VectorXd lo = data.points().rowwise().minCoeff();
      const Eigen::VectorXd hi = data.points().rowwise().maxCoeff();
      const Eigen::VectorXd width = (hi - lo) / double(bpd);
      // Occupied bins keyed by linear index (axis 0 fastest) so the emitted
      // order is reproducible.
      std::map<Eigen::Index, Eigen::Index> counts;
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index linear = 0;
        Eigen::Index stride = 1;
        for (int k = 0; k < d; ++k) {
          Eigen::Index bin = 0;
          if (width(k) > 0.0) {
            bin = std::min<Eigen::Index>(
                bpd - 1,
                static_cast<Eigen::Index>((data.points()(k, i) - lo(k)) / width(k)));
          }
          linear += bin * stride;
          stride *= bpd;
        }
        ++counts[linear];
      }
      const Eigen::Index b = static_cast<Eigen::Index>(counts.size());
      Eigen::MatrixXd centers(d, b);
      Eigen::VectorXd cweights(b);
      std::vector<Eigen::Index> craw;
      craw.reserve(counts.size());
      Eigen::Index col = 0;
      for (const auto& [linear, count] : counts) {
        Eigen::Index rest = linear;
        for (int k = 0; k < d; ++k) {
          const Eigen::Index bin = rest % bpd;
          rest /= bpd;
          centers(k, col) =
              width(k) > 0.0 ? lo(k) + (double(bin) + 0.5) * width(k) : lo(k);
        }
        cweights(col) = double(count);
        craw.push_back(count);
        ++col;
      }
      return SupportBuild{centers, Dataset(centers), std::move(cweights), std::move(craw)};
    }
  }
  throw ConfigError("build_support: unknown strategy");
}

FitResult solve(const Dataset& obs, const Eigen::MatrixXd& atoms,
                const Eigen::VectorXd& obs_weights, const SolverConfig& cfg) {
  const Eigen::Index n = obs.size();
  const Eigen::Index m = atoms.cols();
  require(atoms.rows() == obs.dim(), "solve: atom dimension must match observations");
  require(m >= 1, "solve: need at least one atom");
  require(obs_weights.size() == n, "solve: one weight per observation");
  require(obs_weights.allFinite() && (obs_weights.array() > 0.0).all(),
          "solve: observation weights must be positive");
  require(all_finite(atoms), "solve: atoms must be finite");
  require_config(cfg.gap_tol > 0.0, "solve: gap_tol must be positive");
  require_config(cfg.max_iters >= 0, "solve: max_iters must be nonnegative");
  if (cfg.prune_tol) {
    require_config(*cfg.prune_tol >= 0.0, "solve: prune_tol must be nonnegative");
  }

  const Kernel K(obs.points(), atoms, cfg.kernel_entry_limit, cfg.threads);
  const double W = obs_weights.sum();

  IterState s;
  s.w = Eigen::VectorXd::Constant(m, 1.0 / double(m));
  K.apply_into(s.w, s.u, s.a);
  check_fitted(s.u);

  FitResult out{MixingMeasure::dirac(Point::Zero(obs.dim())), {}, 0.0, 0, {}, {}};

  const auto certificate = [&]() {
    s.r = obs_weights.cwiseQuotient(s.u);
    K.apply_transpose_into(s.r, s.g, s.a);
  };

  // The trace stays monotone when sampled sparsely; dense recording of long
  // runs would spend more time on logs than on the iterations themselves.
  Eigen::Index last_recorded = -1;
  const auto record = [&](Eigen::Index iter, bool force) {
    if (!force && iter >= 1024 && iter % 64 != 0) return;
    if (iter == last_recorded) return;
    out.loglik_trace.push_back(mean_loglik(obs_weights, K.row_shift(), s.u, W));
    last_recorded = iter;
  };
  record(0, true);

  double gap = std::numeric_limits<double>::infinity();
  Eigen::Index iters = 0;
  const Eigen::Index warmup =
      cfg.method == SolveMethod::EMThenFW ? std::min(cfg.em_warmup, cfg.max_iters)
      : cfg.method == SolveMethod::EM     ? cfg.max_iters
                                          : 0;

  // Multiplicative phase.
  while (iters < warmup) {
    certificate();
    gap = s.g.maxCoeff() / W - 1.0;
    if (gap <= cfg.gap_tol) break;
    em_sweep(K, W, s);
    ++iters;
    record(iters, false);
  }

  // Vertex phase: move toward the best single atom with an exact line
  // search.  Under EMThenFW, EM sweeps are interleaved at a fixed cadence;
  // they share the vertex iteration's fixed points and smooth the
  // many-near-tied-atoms regime.
  if (cfg.method != SolveMethod::EM) {
    const Eigen::Index refresh_cadence =
        cfg.method == SolveMethod::EMThenFW ? cfg.em_refresh_every : 0;
    Eigen::Index consecutive_fw = 0;
    Eigen::Index since_refresh = 0;
    while (iters < cfg.max_iters) {
      certificate();
      const Eigen::Index jstar = argmax(s.g);
      gap = s.g(jstar) / W - 1.0;
      if (gap <= cfg.gap_tol) break;

      if (refresh_cadence > 0 && consecutive_fw >= refresh_cadence) {
        em_sweep(K, W, s);
        consecutive_fw = 0;
        since_refresh = 0;
      } else {
        K.column_into(jstar, s.a);
        const double gamma = line_search(obs_weights, s.u, s.a, s.d, s.cd);
        s.w *= (1.0 - gamma);
        s.w(jstar) += gamma;
        s.u = (1.0 - gamma) * s.u + gamma * s.a;
        ++consecutive_fw;
        if (++since_refresh >= 128) {  // shed incremental-update drift
          K.apply_into(s.w, s.u, s.a);
          since_refresh = 0;
        }
        check_fitted(s.u);
      }
      ++iters;
      record(iters, false);
    }
    if (iters >= cfg.max_iters) {
      certificate();
      gap = s.g.maxCoeff() / W - 1.0;
    }
  } else if (iters >= warmup) {
    certificate();
    gap = s.g.maxCoeff() / W - 1.0;
  }
  record(iters, true);

  // Prune and renormalize, then restate everything in terms of the returned
  // mixture so the reported certificate refers to what the caller gets.
  const double prune = cfg.prune_tol ? *cfg.prune_tol : 1e-10 / double(m);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (s.w(j) >= prune && s.w(j) > 0.0) kept.push_back(j);
  }
  if (kept.empty()) {  // pathological prune level; keep the heaviest atom
    kept.push_back(argmax(s.w));
  }
  Eigen::MatrixXd atoms_kept(obs.dim(), static_cast<Eigen::Index>(kept.size()));
  Eigen::VectorXd w_kept(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    atoms_kept.col(static_cast<Eigen::Index>(k)) = atoms.col(kept[k]);
    w_kept(static_cast<Eigen::Index>(k)) = s.w(kept[k]);
  }
  w_kept /= w_kept.sum();

  out.mixture = MixingMeasure(std::move(atoms_kept), std::move(w_kept));
  out.iterations = iters;
  out.fitted_log_densities.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.fitted_log_densities(i) = log_density(out.mixture, obs.point(i));
  }
  out.duality_gap = (kept.size() == static_cast<std::size_t>(m))
                        ? gap
                        : duality_gap(obs, out.mixture.atoms(), obs_weights,
                                      out.mixture.weights());
  return out;
}

double duality_gap(const Dataset& obs, const Eigen::MatrixXd& atoms,
                   const Eigen::VectorXd& obs_weights, const Eigen::VectorXd& weights) {
  require(atoms.rows() == obs.dim(), "duality_gap: atom dimension must match observations");
  require(weights.size() == atoms.cols(), "duality_gap: one weight per atom");
  require(obs_weights.size() == obs.size(), "duality_gap: one weight per observation");
  require(obs_weights.allFinite() && (obs_weights.array() > 0.0).all(),
          "duality_gap: observation weights must be positive");
  require(weights.allFinite() && (weights.array() >= 0.0).all() &&
              std::abs(weights.sum() - 1.0) <= 1e-9,
          "duality_gap: weights must lie on the simplex");

  const Kernel K(obs.points(), atoms, SolverConfig{}.kernel_entry_limit, 1);
  Eigen::VectorXd u, r, g, scratch;
  K.apply_into(weights, u, scratch);
  check_fitted(u);
  r = obs_weights.cwiseQuotient(u);
  K.apply_transpose_into(r, g, scratch);
  return g.maxCoeff() / obs_weights.sum() - 1.0;
}

FitResult fit_npmle(const Dataset& data, const SupportStrategy& strategy,
                    const SolverConfig& cfg) {
  SupportBuild sb = build_support(data, strategy);
  FitResult fit = solve(sb.pseudo_obs, sb.atoms, sb.obs_weights, cfg);
  fit.weights_multiplicity = std::move(sb.bin_counts);
  return fit;
}

}  // namespace npmle
