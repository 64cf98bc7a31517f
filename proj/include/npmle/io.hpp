#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "npmle/denoise.hpp"
#include "npmle/experiment.hpp"
#include "npmle/solver.hpp"
#include "npmle/types.hpp"

namespace npmle {

/// Shortest decimal form that round-trips, capped at 17 significant digits.
std::string format_double(double v);

/// Reads a numeric CSV into rows-are-observations form.  A first row with
/// any non-numeric field is treated as a header and skipped; any other
/// non-numeric cell raises ConfigError naming its row and column (1-based,
/// counting file lines).
Eigen::MatrixXd read_csv_matrix(const std::string& path);
Dataset read_dataset_csv(const std::string& path);

/// Fitted model as a JSON document: dim, atoms, weights, duality_gap,
/// iterations, loglik.  Atoms whose weight was pruned to zero are omitted.
void write_fit_json(const std::string& path, const FitResult& fit);

struct LoadedModel {
  MixingMeasure mixture;
  double duality_gap = 0.0;
  Eigen::Index iterations = 0;
  double loglik = 0.0;
};
LoadedModel read_fit_json(const std::string& path);

/// Estimates next to their inputs: x_1..x_d, thetahat_1..thetahat_d, and
/// oracle_1..oracle_d when an oracle is present.
void write_denoise_csv(const std::string& path, const Dataset& data,
                       const DenoiseResult& result);

/// Risk summary of a denoising run as JSON (fields present when known).
void write_risk_json(const std::string& path, const DenoiseResult& result);

/// Long-format rows: scenario, n, replicate, metric, value.
void write_experiment_csv(const std::string& path, const ExperimentReport& report);

/// Aggregated summary: per sample size, mean and standard error per metric.
void write_experiment_json(const std::string& path, const ExperimentReport& report);

}  // namespace npmle
