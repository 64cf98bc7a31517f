#include "npmle/scenarios.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "npmle/rng.hpp"

namespace npmle {

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

/// Part sizes when n splits across k parts: n/k each, remainder on part 0.
std::vector<Eigen::Index> part_sizes(Eigen::Index n, int k) {
  const Eigen::Index base = n / k;
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), base);
  sizes[0] += n - base * k;
  return sizes;
}

/// Draws uniformly from circles: one part per (center, radius).
GeneratedScenario circles(const std::vector<std::array<double, 3>>& parts,
                          Eigen::Index n, Rng& rng) {
  const auto sizes = part_sizes(n, static_cast<int>(parts.size()));
  GeneratedScenario out{Eigen::MatrixXd(2, n), Dataset(Eigen::MatrixXd::Ones(1, 1)), {}, {}};
  out.labels.resize(static_cast<std::size_t>(n));
  Eigen::Index i = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto [cx, cy, r] = parts[p];
    for (Eigen::Index t = 0; t < sizes[p]; ++t, ++i) {
      const double ang = 2.0 * std::numbers::pi * rng.uniform();
      out.latents(0, i) = cx + r * std::cos(ang);
      out.latents(1, i) = cy + r * std::sin(ang);
      out.labels[static_cast<std::size_t>(i)] = static_cast<int>(p);
    }
  }
  return out;
}

/// Draws uniformly along segments: one part per segment.
GeneratedScenario segments(const std::vector<Segment>& parts, Eigen::Index n, Rng& rng) {
  const auto sizes = part_sizes(n, static_cast<int>(parts.size()));
  GeneratedScenario out{Eigen::MatrixXd(2, n), Dataset(Eigen::MatrixXd::Ones(1, 1)), {}, {}};
  out.labels.resize(static_cast<std::size_t>(n));
  Eigen::Index i = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Segment& s = parts[p];
    for (Eigen::Index t = 0; t < sizes[p]; ++t, ++i) {
      const double u = rng.uniform();
      out.latents(0, i) = s.x0 + u * (s.x1 - s.x0);
      out.latents(1, i) = s.y0 + u * (s.y1 - s.y0);
      out.labels[static_cast<std::size_t>(i)] = static_cast<int>(p);
    }
  }
  return out;
}

MixingMeasure clustering_mixture(ScenarioKind kind, Rng& rng) {
  Eigen::MatrixXd atoms;
  Eigen::VectorXd weights;
  switch (kind) {
    case ScenarioKind::Clustering1:
      atoms = Eigen::MatrixXd{{0.0, 2.0}, {0.0, 2.0}};
      weights = Eigen::VectorXd{{0.5, 0.5}};
      break;
    case ScenarioKind::Clustering2:
      atoms = Eigen::MatrixXd{{0.0, 2.0}, {0.0, 2.0}};
      weights = Eigen::VectorXd{{0.25, 0.75}};
      break;
    case ScenarioKind::Clustering3:
      atoms = Eigen::MatrixXd{{0.0, 0.0, 2.0}, {0.0, 2.0, -2.0}};
      weights = Eigen::VectorXd{{0.25, 0.25, 0.5}};
      break;
    case ScenarioKind::Clustering4: {
      atoms = Eigen::MatrixXd{{0.0, 0.0, 3.0, 3.0}, {0.0, 3.0, 0.0, 3.0}};
      // Dirichlet(1,1,1,1) proportions drawn fresh each replicate.
      Eigen::VectorXd e(4);
      for (int j = 0; j < 4; ++j) e(j) = rng.exponential();
      weights = e / e.sum();
      break;
    }
    default:
      throw ContractError("clustering_mixture: not a clustering scenario");
  }
  return MixingMeasure(std::move(atoms), std::move(weights));
}

}  // namespace

GeneratedScenario generate(const ScenarioSpec& spec) {
  require(spec.n >= 1, "generate: need at least one observation");
  Rng rng(spec.seed);
  GeneratedScenario out{Eigen::MatrixXd(), Dataset(Eigen::MatrixXd::Ones(1, 1)), {}, {}};

  switch (spec.kind) {
    case ScenarioKind::TwoCircles:
      out = circles({{0.0, 0.0, 2.0}, {0.0, 0.0, 6.0}}, spec.n, rng);
      break;
    case ScenarioKind::DigitEight:
      out = circles({{0.0, 0.0, 3.0}, {0.0, 6.0, 3.0}}, spec.n, rng);
      break;
    case ScenarioKind::Triangle:
      out = segments({{-3.0, 0.0, 0.0, 6.0}, {0.0, 6.0, 3.0, 0.0}, {3.0, 0.0, -3.0, 0.0}},
                     spec.n, rng);
      break;
    case ScenarioKind::LetterA:
      // Two strokes meeting at the apex (0, 6), their lower halves, and the
      // crossbar between the stroke midpoints.
      out = segments({{-4.0, -6.0, -2.0, 0.0},
                      {-2.0, 0.0, 0.0, 6.0},
                      {0.0, 6.0, 2.0, 0.0},
                      {2.0, 0.0, 4.0, -6.0},
                      {-2.0, 0.0, 2.0, 0.0}},
                     spec.n, rng);
      break;
    case ScenarioKind::Clustering1:
    case ScenarioKind::Clustering2:
    case ScenarioKind::Clustering3:
    case ScenarioKind::Clustering4:
    case ScenarioKind::Custom: {
      MixingMeasure g = spec.kind == ScenarioKind::Custom
                            ? (spec.custom ? *spec.custom
                                           : throw ContractError(
                                                 "generate: Custom scenario needs a mixture"))
                            : clustering_mixture(spec.kind, rng);
      const int d = g.dim();
      out.latents.resize(d, spec.n);
      out.labels.resize(static_cast<std::size_t>(spec.n));
      // Component draws by inverse CDF, then the noise below.
      Eigen::VectorXd cum(g.size());
      double acc = 0.0;
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        acc += g.weights()(j);
        cum(j) = acc;
      }
      cum(g.size() - 1) = 1.0;
      for (Eigen::Index i = 0; i < spec.n; ++i) {
        const double u = rng.uniform();
        Eigen::Index j = 0;
        while (j + 1 < g.size() && u > cum(j)) ++j;
        out.latents.col(i) = g.atom(j);
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
      out.sampling_mixture = std::move(g);
      break;
    }
  }

  Eigen::MatrixXd pts(out.latents.rows(), spec.n);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (Eigen::Index k = 0; k < out.latents.rows(); ++k) {
      pts(k, i) = out.latents(k, i) + rng.normal();
    }
  }
  out.data = Dataset(std::move(pts));
  return out;
}

int true_component_count(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::TwoCircles:
    case ScenarioKind::DigitEight:
    case ScenarioKind::Clustering1:
    case ScenarioKind::Clustering2:
      return 2;
    case ScenarioKind::Triangle:
    case ScenarioKind::Clustering3:
      return 3;
    case ScenarioKind::Clustering4:
      return 4;
    case ScenarioKind::LetterA:
      return 5;
    case ScenarioKind::Custom:
      require(spec.custom.has_value(), "true_component_count: Custom scenario needs a mixture");
      return static_cast<int>(spec.custom->size());
  }
  throw ContractError("true_component_count: unknown scenario");
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "two-circles", "triangle",    "digit-8",     "letter-a",
      "clustering1", "clustering2", "clustering3", "clustering4",
  };
  return names;
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::TwoCircles: return "two-circles";
    case ScenarioKind::Triangle: return "triangle";
    case ScenarioKind::DigitEight: return "digit-8";
    case ScenarioKind::LetterA: return "letter-a";
    case ScenarioKind::Clustering1: return "clustering1";
    case ScenarioKind::Clustering2: return "clustering2";
    case ScenarioKind::Clustering3: return "clustering3";
    case ScenarioKind::Clustering4: return "clustering4";
    case ScenarioKind::Custom: return "custom";
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario(const std::string& name) {
  if (name == "two-circles") return ScenarioKind::TwoCircles;
  if (name == "triangle") return ScenarioKind::Triangle;
  if (name == "digit-8") return ScenarioKind::DigitEight;
  if (name == "letter-a") return ScenarioKind::LetterA;
  if (name == "clustering1") return ScenarioKind::Clustering1;
  if (name == "clustering2") return ScenarioKind::Clustering2;
  if (name == "clustering3") return ScenarioKind::Clustering3;
  if (name == "clustering4") return ScenarioKind::Clustering4;
  return std::nullopt;
}

}  // namespace npmle
