// Acceptance gate for the library: eleven end-to-end criteria, each a
// doctest case named "criterion N: ..." so the test driver can run and grade
// them one at a time.  Every case funnels its assertions through a tracker
// and prints exactly one "[PASS] criterion N: ..." or "[FAIL] criterion N:
// ..." line with the measured numbers; tolerances are pinned in the code.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "npmle/cluster.hpp"
#include "npmle/denoise.hpp"
#include "npmle/experiment.hpp"
#include "npmle/io.hpp"
#include "npmle/metrics.hpp"
#include "npmle/mixture.hpp"
#include "npmle/rng.hpp"
#include "npmle/scenarios.hpp"
#include "npmle/solver.hpp"

using namespace npmle;

namespace {

/// Collects pass/fail state for one criterion and prints the verdict line.
struct Criterion {
  int number;
  bool ok = true;

  explicit Criterion(int n) : number(n) {}

  void expect(bool cond, const std::string& what) {
    CHECK_MESSAGE(cond, what);
    ok = ok && cond;
  }

  void report(const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", number, detail.c_str());
    std::fflush(stdout);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

/// Two well-separated Gaussian bumps; the fixed data generator behind the
/// convergence battery.
Dataset bump_data(int d, Eigen::Index n, std::uint64_t seed) {
  Rng rng(derive_seed(0xabcdu, seed));
  Eigen::MatrixXd pts(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double center = rng.uniform() < 0.5 ? -2.0 : 2.0;
    for (int k = 0; k < d; ++k) pts(k, i) = 2.0 * rng.normal() + center;
  }
  return Dataset(pts);
}

struct ConvergenceCase {
  int d;
  Eigen::Index n;
  std::uint64_t seed;
};

std::vector<ConvergenceCase> convergence_battery() {
  std::vector<ConvergenceCase> cases;
  for (int d : {1, 2})
    for (Eigen::Index n : {Eigen::Index(50), Eigen::Index(200)})
      for (std::uint64_t seed = 1; seed <= 5; ++seed) cases.push_back({d, n, seed});
  return cases;
}

SolverConfig battery_config() {
  SolverConfig cfg;
  cfg.gap_tol = 9e-7;  // margin under the 1e-6 gate
  cfg.max_iters = 2'000'000;
  cfg.prune_tol = 0.0;
  return cfg;
}

MixingMeasure random_mixture(Rng& rng, int d, int m) {
  Eigen::MatrixXd atoms(d, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < d; ++k) atoms(k, j) = 8.0 * rng.uniform() - 4.0;
  Eigen::VectorXd w(m);
  for (int j = 0; j < m; ++j) w(j) = rng.uniform() + 0.05;
  w /= w.sum();
  w(m - 1) += 1.0 - w.sum();
  return MixingMeasure(std::move(atoms), std::move(w));
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / double(v.size());
}

double std_error_of(const std::vector<double>& v) {
  const double mean = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (double(v.size()) * double(v.size() - 1)));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("criterion 1: the solver certifies twenty random fits within a minute") {
  Criterion c(1);
  const auto cases = convergence_battery();
  const SolverConfig cfg = battery_config();
  double max_gap = 0.0, max_cert = 0.0;
  int converged = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& cse : cases) {
    const Dataset data = bump_data(cse.d, cse.n, cse.seed);
    const FitResult fit = fit_npmle(data, SupportStrategy::exemplar(), cfg);
    const double gap = fit.duality_gap;
    // Independent certificate: max_j column ratio over its own support.
    const double recheck = duality_gap(data, fit.mixture.atoms(),
                                       Eigen::VectorXd::Ones(data.size()),
                                       fit.mixture.weights());
    max_gap = std::max(max_gap, gap);
    max_cert = std::max(max_cert, 1.0 + recheck);
    if (gap <= 1e-6) ++converged;
    c.expect(gap <= 1e-6, "duality gap above 1e-6 for d=" + std::to_string(cse.d) +
                              " n=" + std::to_string(cse.n));
    c.expect(1.0 + recheck <= 1.0 + 1e-6, "certificate max above 1 + 1e-6");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 60.0, "battery exceeded 60 seconds");
  c.report(std::to_string(converged) + "/20 fits converged, max gap " + fmt(max_gap) +
           ", max certificate " + fmt(max_cert) + ", " + fmt(secs) + " s (< 60 s)");
}

TEST_CASE("criterion 2: fitted densities clear the floor and the floor is inert") {
  Criterion c(2);
  const auto cases = convergence_battery();
  const SolverConfig cfg = battery_config();
  double min_slack = std::numeric_limits<double>::infinity();
  for (const auto& cse : cases) {
    const Dataset data = bump_data(cse.d, cse.n, cse.seed);
    const FitResult fit = fit_npmle(data, SupportStrategy::exemplar(), cfg);
    const double floor = tweedie_floor(cse.d, cse.n);
    const double min_f = std::exp(fit.fitted_log_densities.minCoeff());
    min_slack = std::min(min_slack, min_f - floor);
    c.expect(min_f >= floor - 1e-12, "fitted density fell below (2pi)^(-d/2)/n");
    const DenoiseResult plain = tweedie_denoise(fit.mixture, data, 0.0);
    const DenoiseResult floored = tweedie_denoise(fit.mixture, data, floor);
    c.expect(plain.estimates == floored.estimates,
             "floored and unfloored posterior means differ");
  }
  c.report("20/20 fits clear the density floor (worst slack " + fmt(min_slack) +
           "), truncation at the floor is a bitwise no-op");
}

TEST_CASE("criterion 3: moving by the score equals the posterior mean") {
  Criterion c(3);
  Rng rng(derive_seed(0xacc3u, 1));
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const MixingMeasure g = random_mixture(rng, d, 1 + static_cast<int>(rng.below(6)));
    Point x(d);
    for (int k = 0; k < d; ++k) x(k) = 10.0 * rng.uniform() - 5.0;
    const MixtureEval ev = evaluate(g, x);
    const Point direct = g.atoms() * ev.responsibilities;
    const Point via_score = x + score(g, x);
    worst = std::max(worst, (direct - via_score).cwiseAbs().maxCoeff());
  }
  c.expect(worst <= 1e-10, "identity violated beyond 1e-10");
  c.report("100 random priors and points, worst deviation " + fmt(worst) +
           " (<= 1e-10)");
}

TEST_CASE("criterion 4: numerical distances match the closed form and each other") {
  Criterion c(4);
  double worst_closed = 0.0;
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    Point a = Point::Zero(1), b(1);
    b << r;
    const double got =
        hellinger_squared(MixingMeasure::dirac(a), MixingMeasure::dirac(b)).value_sq;
    const double expect = 2.0 * (1.0 - std::exp(-r * r / 8.0));
    worst_closed = std::max(worst_closed, std::abs(got - expect));
    c.expect(std::abs(got - expect) <= 1e-8,
             "quadrature misses the closed form at separation " + fmt(r));
  }
  Rng rng(derive_seed(0xacc4u, 1));
  int within = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const MixingMeasure f = random_mixture(rng, 1, 1 + static_cast<int>(rng.below(4)));
    const MixingMeasure g = random_mixture(rng, 1, 1 + static_cast<int>(rng.below(4)));
    const double quad = hellinger_squared(f, g).value_sq;
    const HellingerEstimate mc = hellinger_squared(
        f, g, IntegrationMethod::MonteCarlo, 100000, derive_seed(0xacc4u, 100 + rep));
    const bool close = mc.std_error.has_value() &&
                       std::abs(mc.value_sq - quad) <= 3.0 * *mc.std_error + 1e-12;
    if (close) ++within;
    c.expect(close, "sampling estimate strayed beyond 3 standard errors");
  }
  c.report("closed form matched within " + fmt(worst_closed) + " (<= 1e-8), " +
           std::to_string(within) + "/20 sampled pairs within 3 standard errors");
}

TEST_CASE("criterion 5: the score norm never beats the density deficit") {
  Criterion c(5);
  Rng rng(derive_seed(0xacc5u, 1));
  double worst_slack = std::numeric_limits<double>::infinity();
  bool all_ok = true;
  for (int rep = 0; rep < 10000; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(2));
    const MixingMeasure g = random_mixture(rng, d, 1 + static_cast<int>(rng.below(5)));
    Point x(d);
    for (int k = 0; k < d; ++k) x(k) = 16.0 * rng.uniform() - 8.0;
    const double bound = -d * kLogTwoPi - 2.0 * log_density(g, x);
    const double slack = bound - score(g, x).squaredNorm();
    worst_slack = std::min(worst_slack, slack);
    all_ok = all_ok && slack >= -1e-9;
  }
  c.expect(all_ok, "bound violated by more than 1e-9");
  c.report("10000 random priors and points, smallest slack " + fmt(worst_slack) +
           " (>= -1e-9)");
}

TEST_CASE("criterion 6: three-atom reference risk stays under the pairwise bound") {
  Criterion c(6);
  // Three atoms with the quarter/quarter/half layout used by the third
  // clustering setting.
  Eigen::MatrixXd atoms(2, 3);
  atoms << 0.0, 0.0, 2.0, 0.0, 2.0, -2.0;
  Eigen::VectorXd w(3);
  w << 0.25, 0.25, 0.5;
  const MixingMeasure truth(atoms, w);
  const int k = 3;
  // Pinned bound: (k-1)/(2 sqrt(2 pi)) * sum over ordered pairs j != l of
  // (p_j + p_l) |a_j - a_l| exp(-|a_j - a_l|^2 / 8).
  double pair_sum = 0.0;
  for (int j = 0; j < k; ++j) {
    for (int l = 0; l < k; ++l) {
      if (j == l) continue;
      const double dist = (atoms.col(j) - atoms.col(l)).norm();
      pair_sum += (w(j) + w(l)) * dist * std::exp(-dist * dist / 8.0);
    }
  }
  const double bound = (k - 1) / (2.0 * std::sqrt(2.0 * std::numbers::pi)) * pair_sum;

  std::vector<double> risks;
  for (int rep = 0; rep < 200; ++rep) {
    const Sample s = sample(truth, 500, NoiseSpec::identity(), derive_seed(0xacc6u, rep));
    const Eigen::MatrixXd est = oracle_bayes(truth, s.data);
    risks.push_back(mean_squared_error(est, s.latents));
  }
  const double mean_risk = mean_of(risks);
  const double se = std_error_of(risks);
  c.expect(mean_risk <= bound + 3.0 * se,
           "Monte Carlo risk exceeds the bound by more than 3 standard errors");
  c.report("risk " + fmt(mean_risk) + " +- " + fmt(se) + " vs bound " + fmt(bound) +
           " over 200 replicates of n=500");
}

TEST_CASE("criterion 7: the discrepancy between the two reference rules is 4.5") {
  Criterion c(7);
  // Every latent at (1,1), every noise covariance 4*I2.  The score-shift
  // rule and the latent posterior mean then differ by (3/4)(x - theta) per
  // point, whose mean squared norm is 2 * 4 * (1 - 1/4)^2 = 4.5.
  const int n = 500;
  const Eigen::Vector2d theta0(1.0, 1.0);
  std::vector<double> discrepancies;
  for (int rep = 0; rep < 200; ++rep) {
    Rng rng(derive_seed(0xacc7u, rep));
    Eigen::MatrixXd latents(2, n);
    Eigen::MatrixXd pts(2, n);
    for (int i = 0; i < n; ++i) {
      latents.col(i) = theta0;
      pts.col(i) = theta0 + 2.0 * Eigen::Vector2d(rng.normal(), rng.normal());
    }
    const Dataset data(pts);
    const std::vector<Eigen::MatrixXd> covs(n, 4.0 * Eigen::MatrixXd::Identity(2, 2));
    // Rule one: shift by the score of the exact observation density
    // (1/n) sum_i N(theta_i, Sigma_i).
    const GaussianMixtureFull full(latents, covs,
                                   Eigen::VectorXd::Constant(n, 1.0 / double(n)));
    // Rule two: posterior mean of the latent given the observation.
    const Eigen::MatrixXd posterior = best_separable_oracle(latents, covs, data);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const Point shifted = data.point(i) + full.score(data.point(i));
      acc += (shifted - posterior.col(i)).squaredNorm();
    }
    discrepancies.push_back(acc / double(n));
  }
  const double mean_disc = mean_of(discrepancies);
  const double se = std_error_of(discrepancies);
  c.expect(std::abs(mean_disc - 4.5) <= 3.0 * se,
           "discrepancy misses 4.5 by more than 3 standard errors");
  c.report("discrepancy " + fmt(mean_disc) + " +- " + fmt(se) +
           " vs 4.5 over 200 replicates of n=500");
}

TEST_CASE("criterion 8: estimated densities home in on a two-atom truth") {
  Criterion c(8);
  Eigen::MatrixXd atoms(2, 2);
  atoms << 0.0, 2.0, 0.0, 2.0;
  const MixingMeasure truth = MixingMeasure::uniform_on(atoms);
  SolverConfig cfg;
  cfg.gap_tol = 1e-4;
  cfg.max_iters = 500'000;
  std::vector<double> means;
  for (Eigen::Index n : {Eigen::Index(100), Eigen::Index(400), Eigen::Index(1600)}) {
    std::vector<double> h2s;
    for (int rep = 0; rep < 20; ++rep) {
      const Sample s =
          sample(truth, n, NoiseSpec::identity(), derive_seed(0xacc8u, std::uint64_t(n), rep));
      const FitResult fit = fit_npmle(s.data, SupportStrategy::exemplar(), cfg);
      h2s.push_back(
          hellinger_squared(fit.mixture, truth, IntegrationMethod::Quadrature, 128)
              .value_sq);
    }
    means.push_back(mean_of(h2s));
  }
  c.expect(means[0] >= means[1], "mean distance rose from n=100 to n=400");
  c.expect(means[1] >= means[2], "mean distance rose from n=400 to n=1600");
  c.expect(means[2] < 0.02, "mean distance at n=1600 is not below 0.02");
  c.report("mean squared Hellinger " + fmt(means[0]) + " -> " + fmt(means[1]) + " -> " +
           fmt(means[2]) + " over n in {100, 400, 1600} (monotone, final < 0.02)");
}

TEST_CASE("criterion 9: the fit tracks its oracle far better than either tracks truth") {
  Criterion c(9);
  SolverConfig cfg;
  cfg.gap_tol = 1e-4;
  cfg.max_iters = 500'000;
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentReport rep =
      run_experiment(ScenarioSpec::make(ScenarioKind::TwoCircles, 1000, 0), {1000}, 20,
                     Methods::denoising_only(), 0xacc9u, cfg, 1);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& cells = rep.aggregated.at(1000);
  const double eb_vs_oracle = cells.at("mse_eb_vs_oracle").mean;
  const double eb_vs_truth = cells.at("mse_eb_vs_truth").mean;
  const double oracle_vs_truth = cells.at("mse_oracle_vs_truth").mean;
  c.expect(eb_vs_oracle < std::min(eb_vs_truth, oracle_vs_truth),
           "fit-to-oracle error is not the smallest of the three");
  c.expect(secs < 900.0, "twenty replicates took 15 minutes or more");
  c.report("mse fit-vs-oracle " + fmt(eb_vs_oracle) + " < min(fit-vs-truth " +
           fmt(eb_vs_truth) + ", oracle-vs-truth " + fmt(oracle_vs_truth) + "), " +
           fmt(secs) + " s (< 900 s)");
}

TEST_CASE("criterion 10: the fitted rule beats tuned k-means across nine cells") {
  Criterion c(10);
  SolverConfig cfg;
  cfg.gap_tol = 1e-4;
  cfg.max_iters = 500'000;
  const std::vector<Eigen::Index> n_list{300, 600, 900};
  std::string cells_seen;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double worst_eb = 0.0;
  for (ScenarioKind kind : {ScenarioKind::Clustering2, ScenarioKind::Clustering3,
                            ScenarioKind::Clustering4}) {
    const ExperimentReport rep = run_experiment(ScenarioSpec::make(kind, 300, 0), n_list,
                                                50, Methods::all(), 0xa10u, cfg, 1);
    for (Eigen::Index n : n_list) {
      const auto& cells = rep.aggregated.at(n);
      const double eb = cells.at("mse_eb_vs_truth").mean;
      const double km = cells.at("mse_kmeans_gap").mean;
      c.expect(eb <= km, to_string(kind) + " n=" + std::to_string(n) +
                             ": fitted-rule error above the k-means-gap error");
      c.expect(eb < 2.0, to_string(kind) + " n=" + std::to_string(n) +
                             ": fitted-rule error not below the naive risk of 2");
      worst_margin = std::max(worst_margin, eb - km);
      worst_eb = std::max(worst_eb, eb);
    }
    cells_seen += (cells_seen.empty() ? "" : ", ") + to_string(kind);
  }
  c.report("9/9 cells across {" + cells_seen + "} x n in {300, 600, 900}: worst (eb - "
           "kmeans-gap) margin " +
           fmt(worst_margin) + " (<= 0), worst eb mse " + fmt(worst_eb) + " (< 2)");
}

TEST_CASE("criterion 11: rerunning the command line reproduces every byte") {
  Criterion c(11);
  namespace fs = std::filesystem;
  const fs::path dir = "/tmp/npmle_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto shell = [&](const std::string& args) {
    const std::string cmd =
        std::string(NPMLE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };

  // A small dataset plus latents on disk for the fit and denoise runs.
  {
    Rng rng(derive_seed(0xacc11u, 1));
    std::ofstream data(dir / "data.csv"), lat(dir / "latents.csv");
    for (int i = 0; i < 40; ++i) {
      const double cx = rng.uniform() < 0.5 ? 0.0 : 3.0;
      lat << format_double(cx) << "," << format_double(cx) << "\n";
      data << format_double(cx + rng.normal()) << "," << format_double(cx + rng.normal())
           << "\n";
    }
  }
  const std::string data_csv = (dir / "data.csv").string();
  const std::string lat_csv = (dir / "latents.csv").string();

  bool all_ran = true;
  all_ran &= shell("--seed 4 fit --input " + data_csv + " --out " +
                   (dir / "m1.json").string());
  all_ran &= shell("--seed 4 fit --input " + data_csv + " --out " +
                   (dir / "m2.json").string());
  c.expect(all_ran && slurp(dir / "m1.json") == slurp(dir / "m2.json"),
           "fit outputs differ between identical runs");

  all_ran = true;
  const std::string den = "--seed 4 denoise --input " + data_csv + " --model " +
                          (dir / "m1.json").string() + " --latents " + lat_csv +
                          " --rho auto";
  all_ran &= shell(den + " --out " + (dir / "e1.csv").string() + " --risk-out " +
                   (dir / "r1.json").string());
  all_ran &= shell(den + " --out " + (dir / "e2.csv").string() + " --risk-out " +
                   (dir / "r2.json").string());
  c.expect(all_ran && slurp(dir / "e1.csv") == slurp(dir / "e2.csv") &&
               slurp(dir / "r1.json") == slurp(dir / "r2.json"),
           "denoise outputs differ between identical runs");

  all_ran = true;
  const std::string sim =
      "simulate --scenario clustering2 --n 60 --replicates 3 --gap-tol 1e-4 "
      "--out-prefix ";
  all_ran &= shell("--seed 4 " + sim + (dir / "s1").string());
  all_ran &= shell("--seed 4 " + sim + (dir / "s2").string());
  all_ran &= shell("--seed 5 " + sim + (dir / "s3").string());
  const bool identical = slurp(dir / "s1.csv") == slurp(dir / "s2.csv") &&
                         slurp(dir / "s1.json") == slurp(dir / "s2.json");
  const bool seed_matters = slurp(dir / "s1.csv") != slurp(dir / "s3.csv");
  c.expect(all_ran && identical, "simulate outputs differ between identical runs");
  c.expect(seed_matters, "changing the seed left the simulation outputs unchanged");
  c.report("fit, denoise, and simulate each byte-identical across reruns; a different "
           "seed changes the results");
}
