#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "npmle/denoise.hpp"
#include "npmle/experiment.hpp"
#include "npmle/io.hpp"
#include "npmle/metrics.hpp"
#include "npmle/parallel.hpp"
#include "npmle/scenarios.hpp"
#include "npmle/solver.hpp"

namespace {

using namespace npmle;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::uint64_t default_seed() {
  const char* env = std::getenv("NPMLE_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == nullptr || *end != '\0') {
    throw ConfigError(std::string("NPMLE_SEED is not a valid integer: '") + env + "'");
  }
  return v;
}

struct SupportFlags {
  std::string support = "exemplar";
  int grid_points = 0;
  Eigen::Index subsample_m = 0;
  int bins = 0;
};

void add_support_flags(CLI::App* cmd, SupportFlags& f) {
  cmd->add_option("--support", f.support, "Support strategy")
      ->check(CLI::IsMember({"exemplar", "grid", "subsample", "binned"}))
      ->capture_default_str();
  cmd->add_option("--grid-points", f.grid_points, "Grid points per dimension");
  cmd->add_option("--subsample-m", f.subsample_m, "Subsample size");
  cmd->add_option("--bins", f.bins, "Bins per dimension");
}

SupportStrategy make_strategy(const SupportFlags& f, Eigen::Index n, std::uint64_t seed) {
  if (f.support == "exemplar") return SupportStrategy::exemplar();
  if (f.support == "grid") {
    // Default grid density follows the square-root-of-n rule of thumb.
    const int ppd = f.grid_points > 0
                        ? f.grid_points
                        : std::max(2, static_cast<int>(std::sqrt(double(n))));
    return SupportStrategy::grid(ppd);
  }
  if (f.support == "subsample") {
    require_config(f.subsample_m > 0, "subsample support needs --subsample-m");
    return SupportStrategy::subsample(f.subsample_m, seed);
  }
  require_config(f.bins > 0, "binned support needs --bins");
  return SupportStrategy::binned(f.bins);
}

struct SolverFlags {
  double gap_tol = 1e-6;
  Eigen::Index max_iters = 50'000;
  std::string method = "em-fw";
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--gap-tol", f.gap_tol, "Certificate gap at which to stop")
      ->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "Iteration budget")->capture_default_str();
  cmd->add_option("--method", f.method, "Solver method")
      ->check(CLI::IsMember({"em", "fw", "em-fw"}))
      ->capture_default_str();
}

SolverConfig make_solver_config(const SolverFlags& f, std::uint64_t seed, int threads) {
  SolverConfig cfg;
  cfg.gap_tol = f.gap_tol;
  cfg.max_iters = f.max_iters;
  cfg.method = f.method == "em"   ? SolveMethod::EM
               : f.method == "fw" ? SolveMethod::FrankWolfe
                                  : SolveMethod::EMThenFW;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

int cmd_fit(const std::string& input, const std::string& out, const SupportFlags& sf,
            const SolverFlags& vf, std::uint64_t seed, int threads) {
  const Dataset data = read_dataset_csv(input);
  const SolverConfig cfg = make_solver_config(vf, seed, threads);
  const FitResult fit = fit_npmle(data, make_strategy(sf, data.size(), seed), cfg);
  write_fit_json(out, fit);
  std::cerr << "fit: " << fit.mixture.size() << " atoms, gap "
            << format_double(fit.duality_gap) << ", loglik "
            << format_double(fit.loglik_trace.empty() ? 0.0 : fit.loglik_trace.back())
            << ", " << fit.iterations << " iterations\n";
  if (fit.duality_gap > cfg.gap_tol) {
    std::cerr << "warning: solver stopped before reaching gap tolerance "
              << format_double(cfg.gap_tol) << "\n";
  }
  return kExitOk;
}

int cmd_denoise(const std::string& input, const std::optional<std::string>& model_path,
                bool fit_inline, const std::string& out,
                const std::optional<std::string>& risk_out,
                const std::optional<std::string>& latents_path, const std::string& rho_mode,
                double sigma_min, const SupportFlags& sf, const SolverFlags& vf,
                std::uint64_t seed, int threads) {
  require_config(model_path.has_value() != fit_inline,
                 "denoise needs exactly one of --model or --fit-inline");
  require_config(sigma_min > 0.0, "--sigma-min must be positive");

  const Dataset data = read_dataset_csv(input);
  const double s = sigma_min;
  const Dataset work = s == 1.0 ? data : Dataset(data.points() / s);

  MixingMeasure mixture = [&] {
    if (model_path) {
      LoadedModel model = read_fit_json(*model_path);
      require_config(model.mixture.dim() == work.dim(),
                     "model dimension " + std::to_string(model.mixture.dim()) +
                         " does not match data dimension " + std::to_string(work.dim()));
      return std::move(model.mixture);
    }
    const SolverConfig cfg = make_solver_config(vf, seed, threads);
    return fit_npmle(work, make_strategy(sf, work.size(), seed), cfg).mixture;
  }();

  const double rho = rho_mode == "auto" ? tweedie_floor(work.dim(), work.size()) : 0.0;
  DenoiseResult result = tweedie_denoise(mixture, work, rho);
  // Map the rescaled estimates back to the original coordinates; with
  // sigma_min = 1 this multiplies by exactly 1.
  result.estimates *= s;

  if (latents_path) {
    const Dataset latents = read_dataset_csv(*latents_path);
    require_config(latents.dim() == data.dim() && latents.size() == data.size(),
                   "--latents must have the same shape as the data");
    // Posterior mean under the empirical latent measure and N(0, s^2 I)
    // noise, computed on the rescaled problem where the noise is standard.
    const Eigen::MatrixXd oracle =
        s * oracle_bayes(empirical_measure(latents.points() / s), work);
    result.risk_vs_oracle = mean_squared_error(result.estimates, oracle);
    result.risk_vs_truth = mean_squared_error(result.estimates, latents.points());
    result.oracle = oracle;
  }

  write_denoise_csv(out, data, result);
  if (risk_out) write_risk_json(*risk_out, result);
  std::cerr << "denoise: " << data.size() << " points, rho "
            << format_double(result.rho_used) << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& scenario, std::vector<Eigen::Index> n_list,
                 Eigen::Index replicates, bool full, bool with_kmeans,
                 const std::string& out_prefix, const SolverFlags& vf, std::uint64_t seed,
                 int threads) {
  const auto kind = parse_scenario(scenario);
  if (!kind) {
    std::string names;
    for (const auto& s : scenario_names()) names += (names.empty() ? "" : ", ") + s;
    throw ConfigError("unknown scenario '" + scenario + "'; valid: " + names);
  }
  if (full) {
    n_list = full_n_list();
    replicates = kFullReplicates;
  } else if (n_list.empty()) {
    n_list = default_n_list();
  }

  const bool clustering = *kind == ScenarioKind::Clustering1 ||
                          *kind == ScenarioKind::Clustering2 ||
                          *kind == ScenarioKind::Clustering3 ||
                          *kind == ScenarioKind::Clustering4;
  Methods methods = clustering || with_kmeans ? Methods::all() : Methods::denoising_only();

  const SolverConfig cfg = make_solver_config(vf, seed, 1);
  const ScenarioSpec spec = ScenarioSpec::make(*kind, n_list.front(), seed);
  const ExperimentReport report =
      run_experiment(spec, n_list, replicates, methods, seed, cfg, threads);
  write_experiment_csv(out_prefix + ".csv", report);
  write_experiment_json(out_prefix + ".json", report);
  std::cerr << "simulate: " << scenario << ", " << report.rows.size() << " rows -> "
            << out_prefix << ".csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian location-mixture maximum likelihood: fit, denoise, simulate"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;
  int threads = machine_threads();
  app.add_option("--seed", seed_flag, "RNG seed (default: NPMLE_SEED or 0)");
  app.add_option("--threads", threads, "Worker threads")->capture_default_str();

  std::string fit_input, fit_out;
  SupportFlags fit_support;
  SolverFlags fit_solver;
  CLI::App* fit = app.add_subcommand("fit", "Fit a mixture to CSV data");
  fit->add_option("--input", fit_input, "Input CSV, one observation per row")->required();
  fit->add_option("--out", fit_out, "Output model JSON")->required();
  add_support_flags(fit, fit_support);
  add_solver_flags(fit, fit_solver);

  std::string den_input, den_out, den_rho = "0";
  std::optional<std::string> den_model, den_risk, den_latents;
  bool den_inline = false;
  double den_sigma_min = 1.0;
  SupportFlags den_support;
  SolverFlags den_solver;
  CLI::App* den = app.add_subcommand("denoise", "Posterior-mean denoise CSV data");
  den->add_option("--input", den_input, "Input CSV, one observation per row")->required();
  den->add_option("--model", den_model, "Fitted model JSON");
  den->add_flag("--fit-inline", den_inline, "Fit on the input data first");
  den->add_option("--out", den_out, "Output estimates CSV")->required();
  den->add_option("--risk-out", den_risk, "Risk summary JSON");
  den->add_option("--latents", den_latents, "True latents CSV (adds oracle columns)");
  den->add_option("--rho", den_rho, "Density floor: 0 or auto")
      ->check(CLI::IsMember({"0", "auto"}))
      ->capture_default_str();
  den->add_option("--sigma-min", den_sigma_min, "Known minimal noise scale")
      ->capture_default_str();
  add_support_flags(den, den_support);
  add_solver_flags(den, den_solver);

  std::string sim_scenario, sim_prefix;
  std::vector<Eigen::Index> sim_n;
  Eigen::Index sim_reps = kDefaultReplicates;
  bool sim_full = false, sim_kmeans = false;
  SolverFlags sim_solver;
  CLI::App* sim = app.add_subcommand("simulate", "Run a simulation scenario");
  sim->add_option("--scenario", sim_scenario, "Scenario name")->required();
  sim->add_option("--n", sim_n, "Sample sizes (default: 300 600 900)");
  sim->add_option("--replicates", sim_reps, "Replicates per sample size")
      ->capture_default_str();
  sim->add_flag("--full", sim_full, "Published protocol: n up to 2100, 1000 replicates");
  sim->add_flag("--with-kmeans", sim_kmeans, "Also score k-means baselines on shapes");
  sim->add_option("--out-prefix", sim_prefix, "Output prefix for .csv and .json")->required();
  add_solver_flags(sim, sim_solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();
    if (fit->parsed()) {
      return cmd_fit(fit_input, fit_out, fit_support, fit_solver, seed, threads);
    }
    if (den->parsed()) {
      return cmd_denoise(den_input, den_model, den_inline, den_out, den_risk, den_latents,
                         den_rho, den_sigma_min, den_support, den_solver, seed, threads);
    }
    return cmd_simulate(sim_scenario, sim_n, sim_reps, sim_full, sim_kmeans, sim_prefix,
                        sim_solver, seed, threads);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
