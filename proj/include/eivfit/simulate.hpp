#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eivfit/common.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/densities.hpp"
#include "eivfit/metrics.hpp"
#include "eivfit/models.hpp"
#include "eivfit/objective.hpp"
#include "eivfit/optimize.hpp"

namespace eivfit {

enum class ScenarioName { A, B, C, D, Plane, PlaneSwitched, Cubic };
enum class NoiseKind { Gaussian, Uniform };

std::string to_string(ScenarioName name);
ScenarioName scenario_from_string(const std::string& name);

/// Simulation study configuration. Every scenario draws `points` paired
/// observations (H == L), true inputs uniform on [x_lo, x_hi] per coordinate.
struct ScenarioSpec {
  ScenarioName name = ScenarioName::A;
  std::size_t points = 300;
  /// Number of groups; ignored when `group_sizes` is set.
  std::size_t groups = 300;
  /// Explicit group sizes along the sorted input axis (line/cubic scenarios).
  std::vector<std::size_t> group_sizes;
  Vector truth{0.0, 0.5};
  double sigma_eta = 0.2;
  double sigma_eps = 0.2;
  /// Uniform noise uses half-width sqrt(3) * sigma so the standard deviation matches.
  NoiseKind noise = NoiseKind::Gaussian;
  double x_lo = -3.0;
  double x_hi = 3.0;
  double label_switch_fraction = 0.0;
  std::uint64_t seed = 0;

  /// Reference parameters per scenario; `groups` defaults to fully paired
  /// (18 tiles for plane-switched). Cubic with groups < points uses two
  /// unpaired areas that together leave exactly `groups` groups.
  static ScenarioSpec preset(ScenarioName name, std::optional<std::size_t> groups = std::nullopt);

  std::size_t input_dim() const;
  ParametricModel model() const;
  ObjectiveKind default_objective() const;
  void validate() const;
};

struct GeneratedScenario {
  GroupedDataset data;
  Vector truth;
  /// Per-point group labels in generation order (before grouping).
  std::vector<std::size_t> labels;
  /// Noise-free inputs, laid out like data.group(r).inputs.
  std::vector<std::vector<Vector>> true_inputs;
};

GeneratedScenario generate_scenario(const ScenarioSpec& spec, Rng& rng);

struct ReplicationReport {
  ScenarioSpec spec;
  std::size_t n_reps = 0;
  ObjectiveKind objective = ObjectiveKind::GaussLine;
  std::vector<FitResult> fits;   // one per replication, in replication order
  std::vector<bool> failed;      // fit threw; its FitResult is empty
  std::size_t failures = 0;
  std::size_t not_converged = 0;
  std::optional<ResidualSummary> summary;  // over successful fits
  double wall_seconds_total = 0.0;
  double wall_seconds_mean = 0.0;
};

/// Replication i regenerates data from derive_seed(master_seed, i) and fits it.
ReplicationReport replicate(const ScenarioSpec& spec, std::size_t n_reps, ObjectiveKind objective,
                            const IntegrationConfig& int_cfg, const OptimizerConfig& opt_cfg,
                            std::uint64_t master_seed);

/// Synthetic stand-in for the life-expectancy indicator extract: four
/// predictors (birth rate, urban share, political stability, log tuberculosis
/// incidence), the outcome, and a GDP-per-capita grouping key.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::string> ids;
  std::vector<Vector> rows;
};

Table generate_worldbank_analog(std::uint64_t seed, std::size_t rows = 192);

}  // namespace eivfit
