#include "eivfit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "eivfit/baselines.hpp"
#include "eivfit/parallel.hpp"

namespace eivfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const ScalarFunction& f, std::span<const double> x) {
  const double v = f(x);
  return std::isnan(v) ? kInf : v;
}

FitResult nelder_mead_single(const ScalarFunction& f, std::span<const double> x0, const OptimizerConfig& cfg) {
  const std::size_t n = x0.size();
  std::vector<Vector> simplex(n + 1, Vector(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += cfg.initial_simplex_scale * std::max(1.0, std::abs(x0[i]));
  }
  Vector values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = safe_eval(f, simplex[i]);

  std::vector<std::size_t> order(n + 1);
  Vector centroid(n), trial(n), trial2(n);
  auto blend = [&](const Vector& a, const Vector& b, double t, Vector& out) {
    for (std::size_t d = 0; d < n; ++d) out[d] = a[d] + t * (b[d] - a[d]);
  };

  FitResult result;
  std::size_t iter = 0;
  for (;; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    {
      std::vector<Vector> s2(n + 1);
      Vector v2(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        s2[i] = std::move(simplex[order[i]]);
        v2[i] = values[order[i]];
      }
      simplex.swap(s2);
      values.swap(v2);
    }
    if (iter > 0) result.best_trace.push_back(values[0]);

    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) diameter = std::max(diameter, std::abs(simplex[i][d] - simplex[0][d]));
    }
    const double spread = values[n] == values[0] ? 0.0 : values[n] - values[0];
    if (diameter <= cfg.x_tol || spread <= cfg.f_tol) {
      result.converged = std::isfinite(values[0]);
      break;
    }
    if (iter >= cfg.max_iters) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    const Vector& worst = simplex[n];
    blend(centroid, worst, -1.0, trial);  // reflection
    const double fr = safe_eval(f, trial);
    if (fr < values[0]) {
      blend(centroid, worst, -2.0, trial2);  // expansion
      const double fe = safe_eval(f, trial2);
      if (fe < fr) {
        simplex[n] = trial2;
        values[n] = fe;
      } else {
        simplex[n] = trial;
        values[n] = fr;
      }
      continue;
    }
    if (fr < values[n - 1]) {
      simplex[n] = trial;
      values[n] = fr;
      continue;
    }
    bool accepted = false;
    if (fr < values[n]) {
      blend(centroid, trial, 0.5, trial2);  // outside contraction
      const double fc = safe_eval(f, trial2);
      if (fc <= fr) {
        simplex[n] = trial2;
        values[n] = fc;
        accepted = true;
      }
    } else {
      blend(centroid, worst, 0.5, trial2);  // inside contraction
      const double fc = safe_eval(f, trial2);
      if (fc < values[n]) {
        simplex[n] = trial2;
        values[n] = fc;
        accepted = true;
      }
    }
    if (!accepted) {
      for (std::size_t i = 1; i <= n; ++i) {
        blend(simplex[0], simplex[i], 0.5, simplex[i]);
        values[i] = safe_eval(f, simplex[i]);
      }
    }
  }
  result.alpha_hat = simplex[0];
  result.objective_at_min = values[0];
  result.iterations = iter;
  result.warm_start.assign(x0.begin(), x0.end());
  if (!result.converged) {
    result.diagnostics.push_back(std::isfinite(values[0]) ? "nelder-mead: iteration limit reached"
                                                          : "nelder-mead: no finite objective value found");
  }
  return result;
}

// Common scale of every density of one side, or nullopt when kinds or scales differ.
std::optional<Vector> shared_gaussian_scale(const GroupedDataset& ds, Side side) {
  std::optional<Vector> scale;
  for (const Group& g : ds.groups()) {
    const auto& densities = side == Side::Input ? g.input_densities : g.output_densities;
    for (const auto& d : densities) {
      if (d.kind() != DensityKind::Gaussian) return std::nullopt;
      if (!scale) {
        scale = d.scale();
      } else if (*scale != d.scale()) {
        return std::nullopt;
      }
    }
  }
  return scale;
}

bool all_uniform(const GroupedDataset& ds) {
  for (const Group& g : ds.groups()) {
    for (const auto& d : g.input_densities) {
      if (d.kind() != DensityKind::Uniform) return false;
    }
    for (const auto& d : g.output_densities) {
      if (d.kind() != DensityKind::Uniform) return false;
    }
  }
  return true;
}

Vector warm_start_for(const GroupedDataset& ds, const ParametricModel& model, const OptimizerConfig& opt_cfg,
                      Diagnostics& diagnostics) {
  try {
    return ols_general(all_cross_pairs(ds), model, opt_cfg).alpha_hat;
  } catch (const std::exception& e) {
    diagnostics.push_back(std::string("warm start unavailable, starting at zero: ") + e.what());
    return Vector(model.param_dim(), 0.0);
  }
}

}  // namespace

void OptimizerConfig::validate() const {
  require(max_iters >= 1, "optimizer config: max_iters must be at least 1");
  require(x_tol > 0.0 && f_tol > 0.0, "optimizer config: tolerances must be strictly positive");
  require(initial_simplex_scale > 0.0, "optimizer config: initial simplex scale must be positive");
}

FitResult nelder_mead(const ScalarFunction& f, std::span<const double> x0, const OptimizerConfig& cfg) {
  cfg.validate();
  require(!x0.empty(), "nelder-mead: empty starting point");
  FitResult best = nelder_mead_single(f, x0, cfg);
  if (cfg.restarts == 0) return best;

  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t total_iters = best.iterations;
  Vector trace = best.best_trace;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Vector start = best.alpha_hat;
    for (auto& v : start) v += cfg.initial_simplex_scale * normal(rng);
    FitResult next = nelder_mead_single(f, start, cfg);
    total_iters += next.iterations;
    for (double v : next.best_trace) trace.push_back(trace.empty() ? v : std::min(v, trace.back()));
    if (next.objective_at_min <= best.objective_at_min) best = std::move(next);
  }
  best.best_trace = std::move(trace);
  best.iterations = total_iters;
  best.warm_start.assign(x0.begin(), x0.end());
  return best;
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::General: return "general";
    case ObjectiveKind::GaussLine: return "gauss-line";
    case ObjectiveKind::GaussPlane: return "gauss-plane";
    case ObjectiveKind::IntervalLine: return "interval-line";
  }
  return "unknown";
}

ObjectiveKind objective_kind_from_string(const std::string& name) {
  if (name == "general") return ObjectiveKind::General;
  if (name == "gauss-line") return ObjectiveKind::GaussLine;
  if (name == "gauss-plane") return ObjectiveKind::GaussPlane;
  if (name == "interval-line") return ObjectiveKind::IntervalLine;
  throw ContractViolation("unknown objective '" + name + "'");
}

ScalarFunction make_objective(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
                              const IntegrationConfig& int_cfg) {
  const std::string name = to_string(kind);
  switch (kind) {
    case ObjectiveKind::General: {
      auto objective = std::make_shared<GeneralObjective>(ds, model, int_cfg);
      return [objective](std::span<const double> a) { return objective->value(a); };
    }
    case ObjectiveKind::GaussLine:
    case ObjectiveKind::GaussPlane: {
      if (kind == ObjectiveKind::GaussLine) {
        require(model.family() == ModelFamily::Affine1D,
                name + " objective needs an affine-1d model, got " + to_string(model.family()));
      } else {
        require(model.family() == ModelFamily::Affine1D || model.family() == ModelFamily::AffineKD,
                name + " objective needs an affine model, got " + to_string(model.family()));
      }
      require(ds.output_dim() == 1, name + " objective needs scalar outputs");
      auto eta = shared_gaussian_scale(ds, Side::Input);
      auto eps = shared_gaussian_scale(ds, Side::Output);
      require(eta.has_value(), name + " objective needs gaussian input densities with one shared scale");
      require(eps.has_value(), name + " objective needs gaussian output densities with one shared scale");
      auto data = std::make_shared<GroupedDataset>(ds);
      const double sigma_eps = (*eps)[0];
      return [data, eta = *eta, sigma_eps](std::span<const double> a) {
        return nll_gaussian_hyperplane(*data, eta, sigma_eps, a).value;
      };
    }
    case ObjectiveKind::IntervalLine: {
      require(model.family() == ModelFamily::Affine1D,
              name + " objective needs an affine-1d model, got " + to_string(model.family()));
      require(ds.input_dim() == 1 && ds.output_dim() == 1, name + " objective needs k = m = 1");
      require(all_uniform(ds), name + " objective needs uniform-box densities on both sides");
      auto data = std::make_shared<GroupedDataset>(ds);
      return [data](std::span<const double> a) { return likelihood_interval_line(*data, a).value; };
    }
  }
  throw ContractViolation("unknown objective kind");
}

namespace {

GroupedDataset inflate_scales(const GroupedDataset& ds, double factor) {
  std::vector<Group> groups = ds.groups();
  auto inflate = [factor](std::vector<ErrorDensity>& densities) {
    for (auto& d : densities) {
      if (d.kind() == DensityKind::PointMass) continue;
      Vector scale = d.scale();
      for (auto& v : scale) v *= factor;
      d = d.with_scale(std::move(scale));
    }
  };
  for (auto& g : groups) {
    inflate(g.input_densities);
    inflate(g.output_densities);
  }
  return GroupedDataset(std::move(groups));
}

std::string format_factor(double factor) {
  std::ostringstream out;
  out << factor;
  return out.str();
}

// Bounded-support densities make the objective +inf wherever some group has
// no compatible pairing. Fits on progressively less inflated error scales
// walk the start into the finite region.
Vector feasible_start(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
                      const IntegrationConfig& int_cfg, const OptimizerConfig& opt_cfg, Vector x,
                      Diagnostics& diagnostics) {
  const ScalarFunction target = make_objective(ds, model, kind, int_cfg);
  for (double factor : {4.0, 2.0, 1.5, 1.25, 1.1, 1.05, 1.02, 1.01, 1.005, 1.002, 1.001}) {
    const ScalarFunction relaxed = make_objective(inflate_scales(ds, factor), model, kind, int_cfg);
    if (!std::isfinite(safe_eval(relaxed, x))) continue;
    x = nelder_mead(relaxed, x, opt_cfg).alpha_hat;
    if (std::isfinite(safe_eval(target, x))) {
      diagnostics.push_back("warm start has zero likelihood; restarted from a fit with error scales x" +
                            format_factor(factor));
      return x;
    }
  }
  // Thin feasible regions can slip between quadrature nodes; probe around x.
  Rng rng(derive_seed(opt_cfg.seed, 0x5eed));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double radius : {0.01, 0.03, 0.1, 0.3}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vector probe = x;
      for (auto& v : probe) v += radius * std::max(1.0, std::abs(v)) * normal(rng);
      if (std::isfinite(safe_eval(target, probe))) {
        diagnostics.push_back("warm start has zero likelihood; restarted from a random probe at radius " +
                              format_factor(radius));
        return probe;
      }
    }
  }
  diagnostics.push_back("warm start has zero likelihood and no finite start was found");
  return x;
}

}  // namespace

FitResult fit(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
              const IntegrationConfig& int_cfg, const OptimizerConfig& opt_cfg) {
  const ScalarFunction objective = make_objective(ds, model, kind, int_cfg);
  Diagnostics diagnostics;
  const Vector start = warm_start_for(ds, model, opt_cfg, diagnostics);
  Vector x0 = start;
  if (!std::isfinite(safe_eval(objective, x0))) x0 = feasible_start(ds, model, kind, int_cfg, opt_cfg, x0, diagnostics);
  FitResult result = nelder_mead(objective, x0, opt_cfg);
  result.warm_start = start;
  result.objective_at_min = objective(result.alpha_hat);
  result.diagnostics.insert(result.diagnostics.begin(), diagnostics.begin(), diagnostics.end());
  return result;
}

FitResult fit_extended(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& int_cfg,
                       const OptimizerConfig& opt_cfg, const DensityParamBounds& bounds) {
  const std::size_t k = ds.input_dim();
  const std::size_t m = ds.output_dim();
  bounds.validate(k, m);

  struct FreeScale {
    bool output;
    std::size_t index;
    double lo;
    double hi;
  };
  std::vector<FreeScale> free;
  DensityParams base{bounds.lower.input_scales, bounds.lower.output_scales};
  for (std::size_t i = 0; i < k; ++i) {
    if (bounds.lower.input_scales[i] < bounds.upper.input_scales[i]) {
      free.push_back({false, i, bounds.lower.input_scales[i], bounds.upper.input_scales[i]});
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (bounds.lower.output_scales[j] < bounds.upper.output_scales[j]) {
      free.push_back({true, j, bounds.lower.output_scales[j], bounds.upper.output_scales[j]});
    }
  }

  auto stored_scale = [&](const FreeScale& s) -> std::optional<double> {
    for (const Group& g : ds.groups()) {
      const auto& densities = s.output ? g.output_densities : g.input_densities;
      for (const auto& d : densities) {
        if (d.kind() == DensityKind::Gaussian) return d.scale()[s.index];
      }
    }
    return std::nullopt;
  };

  const std::size_t n_alpha = model.param_dim();
  auto params_from = [&](std::span<const double> z) {
    DensityParams p = base;
    for (std::size_t i = 0; i < free.size(); ++i) {
      const double sigma = std::exp(z[n_alpha + i]);
      (free[i].output ? p.output_scales : p.input_scales)[free[i].index] = sigma;
    }
    return p;
  };

  Diagnostics diagnostics;
  const Vector alpha0 = warm_start_for(ds, model, opt_cfg, diagnostics);
  Vector z0 = alpha0;
  for (const auto& s : free) {
    const auto stored = stored_scale(s);
    const double start = stored && *stored > s.lo && *stored < s.hi ? *stored : std::sqrt(s.lo * s.hi);
    z0.push_back(std::log(start));
  }

  const ScalarFunction objective = [&](std::span<const double> z) {
    for (std::size_t i = 0; i < free.size(); ++i) {
      const double sigma = std::exp(z[n_alpha + i]);
      if (!(sigma > free[i].lo && sigma < free[i].hi)) return kInf;
    }
    const GeneralObjective inner(with_density_params(ds, params_from(z)), model, int_cfg);
    return inner.value(z.first(n_alpha));
  };

  FitResult joint = nelder_mead(objective, z0, opt_cfg);
  FitResult result;
  result.alpha_hat.assign(joint.alpha_hat.begin(), joint.alpha_hat.begin() + static_cast<std::ptrdiff_t>(n_alpha));
  result.warm_start = alpha0;
  result.iterations = joint.iterations;
  result.converged = joint.converged;
  result.best_trace = std::move(joint.best_trace);
  result.density_params_hat = params_from(joint.alpha_hat);
  result.objective_at_min = objective(joint.alpha_hat);
  result.diagnostics = diagnostics;
  result.diagnostics.insert(result.diagnostics.end(), joint.diagnostics.begin(), joint.diagnostics.end());
  for (std::size_t i = 0; i < free.size(); ++i) {
    const double sigma = std::exp(joint.alpha_hat[n_alpha + i]);
    if (sigma <= free[i].lo * (1.0 + 1e-3) || sigma >= free[i].hi * (1.0 - 1e-3)) {
      result.converged = false;
      result.diagnostics.push_back(std::string("scale at bound: ") + (free[i].output ? "output" : "input") +
                                   " coordinate " + std::to_string(free[i].index));
    }
  }
  return result;
}

double SurfaceAxis::at(std::size_t i) const {
  if (n == 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

double Surface::fraction_near_min(double fraction) const {
  if (values.empty()) return 0.0;
  const double threshold = min_value + fraction * std::abs(min_value);
  const auto count = std::count_if(values.begin(), values.end(), [&](double v) { return v <= threshold; });
  return static_cast<double>(count) / static_cast<double>(values.size());
}

Surface objective_surface(const ScalarFunction& f, const SurfaceAxis& axis1, const SurfaceAxis& axis2,
                          std::span<const double> fixed) {
  require(axis1.index != axis2.index, "objective surface: axis indices must differ");
  require(axis1.n >= 2 && axis2.n >= 2, "objective surface: each axis needs at least two points");
  require(axis1.index < fixed.size() && axis2.index < fixed.size(),
          "objective surface: axis index outside the parameter vector");
  Surface s{axis1, axis2, Vector(fixed.begin(), fixed.end()), Vector(axis1.n * axis2.n), 0, 0, 0.0};
  parallel_for(axis1.n, [&](std::size_t i) {
    Vector point(fixed.begin(), fixed.end());
    point[axis1.index] = axis1.at(i);
    for (std::size_t j = 0; j < axis2.n; ++j) {
      point[axis2.index] = axis2.at(j);
      s.values[i * axis2.n + j] = safe_eval(f, point);
    }
  });
  const auto it = std::min_element(s.values.begin(), s.values.end());
  const auto flat = static_cast<std::size_t>(std::distance(s.values.begin(), it));
  s.argmin_row = flat / axis2.n;
  s.argmin_col = flat % axis2.n;
  s.min_value = *it;
  return s;
}

Surface objective_surface(const GroupedDataset& ds, const ParametricModel& model, ObjectiveKind kind,
                          const IntegrationConfig& int_cfg, const SurfaceAxis& axis1, const SurfaceAxis& axis2,
                          std::span<const double> fixed) {
  require(fixed.size() == model.param_dim(), "objective surface: fixed vector must have the model's length");
  return objective_surface(make_objective(ds, model, kind, int_cfg), axis1, axis2, fixed);
}

}  // namespace eivfit
