#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "npmle/io.hpp"
#include "npmle/rng.hpp"
#include "npmle/solver.hpp"

using namespace npmle;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = "/tmp/npmle_cli_test";

struct RunResult {
  int exit_code = -1;
  std::string err;
};

/// Runs the installed binary with the given arguments, capturing stderr.
RunResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path errfile = kDir / "stderr.txt";
  const std::string cmd =
      env + (env.empty() ? "" : " ") + NPMLE_CLI_PATH + " " + args +
      " > /dev/null 2> " + errfile.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(errfile);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const fs::path& p, const Eigen::MatrixXd& cols, bool header = false) {
  std::ofstream out(p);
  if (header) {
    for (Eigen::Index k = 0; k < cols.rows(); ++k)
      out << "col_" << k << (k + 1 < cols.rows() ? "," : "\n");
  }
  for (Eigen::Index i = 0; i < cols.cols(); ++i) {
    for (Eigen::Index k = 0; k < cols.rows(); ++k)
      out << format_double(cols(k, i)) << (k + 1 < cols.rows() ? "," : "\n");
  }
}

Eigen::MatrixXd demo_points(int d, Eigen::Index n, std::uint64_t seed) {
  Rng rng(derive_seed(0xc11u, seed));
  Eigen::MatrixXd pts(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = rng.uniform() < 0.5 ? -2.0 : 2.0;
    for (int k = 0; k < d; ++k) pts(k, i) = rng.normal() + c;
  }
  return pts;
}

struct DirSetup {
  DirSetup() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};
const DirSetup setup_once{};

}  // namespace

TEST_CASE("fit writes a model document for CSV input") {
  const Eigen::MatrixXd pts = demo_points(2, 30, 1);
  write_csv(kDir / "data.csv", pts);
  const RunResult r = run_cli("--seed 0 fit --input " + (kDir / "data.csv").string() +
                              " --out " + (kDir / "model.json").string());
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(slurp(kDir / "model.json"));
  CHECK(doc.at("dim").get<int>() == 2);
  CHECK(doc.at("atoms").size() == doc.at("weights").size());
  double total = 0.0;
  for (const auto& w : doc.at("weights")) total += w.get<double>();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(doc.at("duality_gap").get<double>() <= 1e-6);
  CHECK(doc.at("iterations").get<std::int64_t>() >= 1);
  CHECK(doc.contains("loglik"));
  CHECK(r.err.find("atoms") != std::string::npos);
}

TEST_CASE("fit through the binary equals the library call") {
  const Eigen::MatrixXd pts = demo_points(2, 40, 2);
  write_csv(kDir / "lib.csv", pts);
  const RunResult r = run_cli("--seed 0 fit --input " + (kDir / "lib.csv").string() +
                              " --out " + (kDir / "lib_model.json").string());
  REQUIRE(r.exit_code == 0);
  const LoadedModel cli_fit = read_fit_json((kDir / "lib_model.json").string());
  const FitResult lib_fit =
      fit_npmle(Dataset(pts), SupportStrategy::exemplar(), SolverConfig{});
  // The CSV round-trips exactly, and the solver is deterministic, so the
  // surviving atoms and weights agree bit for bit.
  REQUIRE(cli_fit.mixture.size() == lib_fit.mixture.size());
  CHECK(cli_fit.mixture.atoms() == lib_fit.mixture.atoms());
  CHECK(cli_fit.mixture.weights() == lib_fit.mixture.weights());
  CHECK(cli_fit.duality_gap == lib_fit.duality_gap);
  CHECK(cli_fit.iterations == lib_fit.iterations);
}

TEST_CASE("fit accepts a header row and skips it") {
  const Eigen::MatrixXd pts = demo_points(1, 12, 3);
  write_csv(kDir / "hdr.csv", pts, true);
  const RunResult r = run_cli("--seed 0 fit --input " + (kDir / "hdr.csv").string() +
                              " --out " + (kDir / "hdr_model.json").string());
  REQUIRE(r.exit_code == 0);
  const LoadedModel model = read_fit_json((kDir / "hdr_model.json").string());
  CHECK(model.mixture.dim() == 1);
}

TEST_CASE("missing and malformed inputs exit with the usage code") {
  SUBCASE("missing file") {
    const RunResult r = run_cli("fit --input " + (kDir / "nope.csv").string() +
                                " --out " + (kDir / "x.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("error:") != std::string::npos);
  }
  SUBCASE("non-numeric cell") {
    std::ofstream out(kDir / "bad.csv");
    out << "1.0,2.0\n3.0,4.0\n5.0,oops\n";
    out.close();
    const RunResult r = run_cli("fit --input " + (kDir / "bad.csv").string() +
                                " --out " + (kDir / "x.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("row 3") != std::string::npos);
  }
  SUBCASE("no subcommand") {
    const RunResult r = run_cli("");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("help exits cleanly") {
    const RunResult r = run_cli("--help");
    CHECK(r.exit_code == 0);
  }
}

TEST_CASE("grid support snaps atoms to the lattice") {
  Eigen::MatrixXd pts(1, 11);
  for (int i = 0; i <= 10; ++i) pts(0, i) = double(i);
  write_csv(kDir / "grid.csv", pts);
  const RunResult r = run_cli("--seed 0 fit --input " + (kDir / "grid.csv").string() +
                              " --support grid --grid-points 11 --out " +
                              (kDir / "grid_model.json").string());
  REQUIRE(r.exit_code == 0);
  const LoadedModel model = read_fit_json((kDir / "grid_model.json").string());
  for (Eigen::Index j = 0; j < model.mixture.size(); ++j) {
    const double a = model.mixture.atoms()(0, j);
    CHECK(a == doctest::Approx(std::round(a)).epsilon(1e-12).scale(1.0));
    CHECK(a >= -1e-9);
    CHECK(a <= 10.0 + 1e-9);
  }
}

TEST_CASE("denoise fits inline and reports oracle columns with latents") {
  // Latents snapped to a lattice of a few sites, observations = latents + noise.
  const Eigen::MatrixXd latents = ((demo_points(2, 25, 4).array() / 4.0).round() * 4.0);
  Rng rng(derive_seed(0xc11u, 99));
  Eigen::MatrixXd pts = latents;
  for (Eigen::Index i = 0; i < 25; ++i)
    for (int k = 0; k < 2; ++k) pts(k, i) += rng.normal();
  write_csv(kDir / "den.csv", pts);
  write_csv(kDir / "lat.csv", latents);
  const RunResult r = run_cli(
      "--seed 0 denoise --input " + (kDir / "den.csv").string() + " --fit-inline --out " +
      (kDir / "est.csv").string() + " --risk-out " + (kDir / "risk.json").string() +
      " --latents " + (kDir / "lat.csv").string() + " --rho auto");
  CAPTURE(r.err);
  REQUIRE(r.exit_code == 0);
  std::ifstream est(kDir / "est.csv");
  std::string header;
  std::getline(est, header);
  CHECK(header == "x_1,x_2,thetahat_1,thetahat_2,oracle_1,oracle_2");
  Eigen::Index rows = 0;
  for (std::string line; std::getline(est, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 25);
  const json risk = json::parse(slurp(kDir / "risk.json"));
  CHECK(risk.at("n").get<int>() == 25);
  CHECK(risk.at("rho_used").get<double>() > 0.0);
  CHECK(risk.contains("risk_vs_oracle"));
  CHECK(risk.contains("risk_vs_truth"));
  CHECK(risk.at("risk_vs_truth").get<double>() >= 0.0);
}

TEST_CASE("unit noise scale flag changes nothing, byte for byte") {
  const Eigen::MatrixXd pts = demo_points(2, 20, 6);
  write_csv(kDir / "s1.csv", pts);
  const std::string base =
      "--seed 0 denoise --input " + (kDir / "s1.csv").string() + " --fit-inline";
  REQUIRE(run_cli(base + " --out " + (kDir / "est_a.csv").string() + " --risk-out " +
                  (kDir / "risk_a.json").string())
              .exit_code == 0);
  REQUIRE(run_cli(base + " --sigma-min 1 --out " + (kDir / "est_b.csv").string() +
                  " --risk-out " + (kDir / "risk_b.json").string())
              .exit_code == 0);
  CHECK(slurp(kDir / "est_a.csv") == slurp(kDir / "est_b.csv"));
  CHECK(slurp(kDir / "risk_a.json") == slurp(kDir / "risk_b.json"));
}

TEST_CASE("denoise demands exactly one model source") {
  const Eigen::MatrixXd pts = demo_points(1, 8, 7);
  write_csv(kDir / "one.csv", pts);
  const std::string io =
      " --input " + (kDir / "one.csv").string() + " --out " + (kDir / "o.csv").string();
  CHECK(run_cli("denoise" + io).exit_code == 2);
  REQUIRE(run_cli("--seed 0 fit --input " + (kDir / "one.csv").string() + " --out " +
                  (kDir / "one_model.json").string())
              .exit_code == 0);
  CHECK(run_cli("denoise" + io + " --model " + (kDir / "one_model.json").string() +
                " --fit-inline")
            .exit_code == 2);
  CHECK(run_cli("denoise" + io + " --model " + (kDir / "one_model.json").string())
            .exit_code == 0);
}

TEST_CASE("simulation outputs are byte-identical across reruns") {
  const std::string args =
      "--seed 11 simulate --scenario clustering1 --n 40 --replicates 2 --gap-tol 1e-4 "
      "--out-prefix ";
  REQUIRE(run_cli(args + (kDir / "sim_a").string()).exit_code == 0);
  REQUIRE(run_cli(args + (kDir / "sim_b").string()).exit_code == 0);
  CHECK(slurp(kDir / "sim_a.csv") == slurp(kDir / "sim_b.csv"));
  CHECK(slurp(kDir / "sim_a.json") == slurp(kDir / "sim_b.json"));
  // A different seed must actually change the numbers.
  REQUIRE(run_cli("--seed 12 simulate --scenario clustering1 --n 40 --replicates 2 "
                  "--gap-tol 1e-4 --out-prefix " +
                  (kDir / "sim_c").string())
              .exit_code == 0);
  CHECK(slurp(kDir / "sim_a.csv") != slurp(kDir / "sim_c.csv"));
}

TEST_CASE("unknown scenario names the valid ones") {
  const RunResult r = run_cli("simulate --scenario bogus --out-prefix " +
                              (kDir / "sim_x").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("two-circles") != std::string::npos);
  CHECK(r.err.find("bogus") != std::string::npos);
}

TEST_CASE("seed environment variable is honored and validated") {
  const Eigen::MatrixXd pts = demo_points(1, 10, 8);
  write_csv(kDir / "env.csv", pts);
  const std::string io = "fit --input " + (kDir / "env.csv").string() + " --out " +
                         (kDir / "env_model.json").string();
  CHECK(run_cli(io, "NPMLE_SEED=7").exit_code == 0);
  const RunResult bad = run_cli(io, "NPMLE_SEED=abc");
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("NPMLE_SEED") != std::string::npos);
  // An explicit flag wins over a malformed environment value? No: the flag
  // bypasses the environment lookup entirely.
  CHECK(run_cli("--seed 3 " + io, "NPMLE_SEED=abc").exit_code == 0);
}
