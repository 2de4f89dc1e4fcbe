#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "eivfit/common.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/densities.hpp"
#include "eivfit/models.hpp"
#include "eivfit/objective.hpp"

namespace eivfit {

struct OptimizerConfig {
  std::size_t max_iters = 5000;
  double x_tol = 1e-8;
  double f_tol = 1e-10;
  /// Initial simplex edge per coordinate: scale * max(1, |x0_i|). Restarts
  /// perturb the incumbent by scale * N(0, 1) draws.
  double initial_simplex_scale = 0.1;
  std::size_t restarts = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  Vector alpha_hat;
  double objective_at_min = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  Vector warm_start;
  std::optional<DensityParams> density_params_hat;
  Diagnostics diagnostics;
  /// Best objective value after each iteration (non-increasing).
  Vector best_trace;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Nelder-Mead simplex minimization with reflection 1, expansion 2,
/// contraction 0.5 and shrink 0.5. The function may return +inf.
FitResult nelder_mead(const ScalarFunction& f, std::span<const double> x0, const OptimizerConfig& cfg);

enum class ObjectiveKind { General, GaussLine, GaussPlane, IntervalLine };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& name);

/// Objective for `kind` as a plain function of alpha. Throws
/// ContractViolation naming the mismatch when the dataset densities or the
/// model family do not fit the chosen closed form.
ScalarFunction make_objective(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
                              const IntegrationConfig& int_cfg);

/// OLS warm start on all within-group cross pairs, then Nelder-Mead.
FitResult fit(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
              const IntegrationConfig& int_cfg, const OptimizerConfig& opt_cfg);

/// Joint estimation of alpha and the global gaussian scales (optimized on a
/// log scale); coordinates with lower == upper stay fixed.
FitResult fit_extended(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& int_cfg,
                       const OptimizerConfig& opt_cfg, const DensityParamBounds& bounds);

struct SurfaceAxis {
  std::size_t index = 0;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  double at(std::size_t i) const;
};

/// Objective values on a Cartesian grid; row i follows axis1, column j axis2.
struct Surface {
  SurfaceAxis axis1;
  SurfaceAxis axis2;
  Vector fixed;
  Vector values;  // row-major, axis1.n rows of axis2.n values
  std::size_t argmin_row = 0;
  std::size_t argmin_col = 0;
  double min_value = 0.0;

  double at(std::size_t i, std::size_t j) const { return values[i * axis2.n + j]; }
  /// Fraction of cells with value <= min + fraction * |min|.
  double fraction_near_min(double fraction) const;
};

Surface objective_surface(const ScalarFunction& f, const SurfaceAxis& axis1, const SurfaceAxis& axis2,
                          std::span<const double> fixed);

Surface objective_surface(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
                          const IntegrationConfig& int_cfg, const SurfaceAxis& axis1, const SurfaceAxis& axis2,
                          std::span<const double> fixed);

}  // namespace eivfit
