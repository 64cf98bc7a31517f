#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npmle/mixture.hpp"
#include "npmle/types.hpp"

namespace npmle {

enum class ScenarioKind {
  TwoCircles,
  Triangle,
  DigitEight,
  LetterA,
  Clustering1,
  Clustering2,
  Clustering3,
  Clustering4,
  Custom,
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::TwoCircles;
  Eigen::Index n = 300;
  std::uint64_t seed = 0;
  std::optional<MixingMeasure> custom;  // Custom only

  static ScenarioSpec make(ScenarioKind kind, Eigen::Index n, std::uint64_t seed) {
    return ScenarioSpec{kind, n, seed, std::nullopt};
  }
  static ScenarioSpec custom_mixture(MixingMeasure g, Eigen::Index n, std::uint64_t seed) {
    return ScenarioSpec{ScenarioKind::Custom, n, seed, std::move(g)};
  }
};

struct GeneratedScenario {
  Eigen::MatrixXd latents;  // d x n
  Dataset data;             // latents + N(0, I)
  std::vector<int> labels;  // part or component index per observation
  /// The mixing distribution actually sampled from, when it is finite: the
  /// clustering settings and Custom.  For Clustering4 this carries the
  /// realized Dirichlet proportions of the replicate.
  std::optional<MixingMeasure> sampling_mixture;
};

/// Draws latents along the scenario geometry (or mixture), adds unit
/// Gaussian noise, and reports the part labels.  Deterministic given the
/// spec's seed.  When n is not divisible by the number of parts, the
/// remainder goes to the first part.
GeneratedScenario generate(const ScenarioSpec& spec);

/// Number of planted parts (circles, edges, segments, or atoms).
int true_component_count(const ScenarioSpec& spec);

const std::vector<std::string>& scenario_names();
std::string to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario(const std::string& name);

}  // namespace npmle
