#include "eivfit/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "eivfit/parallel.hpp"

namespace eivfit {

std::string to_string(ScenarioName name) {
  switch (name) {
    case ScenarioName::A: return "A";
    case ScenarioName::B: return "B";
    case ScenarioName::C: return "C";
    case ScenarioName::D: return "D";
    case ScenarioName::Plane: return "plane";
    case ScenarioName::PlaneSwitched: return "plane-switched";
    case ScenarioName::Cubic: return "cubic";
  }
  return "?";
}

ScenarioName scenario_from_string(const std::string& name) {
  for (auto s : {ScenarioName::A, ScenarioName::B, ScenarioName::C, ScenarioName::D, ScenarioName::Plane,
                 ScenarioName::PlaneSwitched, ScenarioName::Cubic}) {
    if (to_string(s) == name) return s;
  }
  throw ContractViolation("unknown scenario '" + name + "'");
}

namespace {

// Two unpaired areas whose sizes sum to L - R + 2, placed in the lower and
// upper part of the sorted input axis; every other point is its own group.
std::vector<std::size_t> two_area_sizes(std::size_t L, std::size_t R) {
  if (R >= L) return std::vector<std::size_t>(L, 1);
  require(R >= 2, "cubic two-area layout needs at least 2 groups");
  const std::size_t unpaired = L - R + 2;
  const std::size_t a1 = (unpaired + 1) / 2;
  const std::size_t a2 = unpaired / 2;
  const std::size_t start1 = L / 6;
  const std::size_t start2 = std::max(start1 + a1, 2 * L / 3);
  require(start2 + a2 <= L, "cubic two-area layout does not fit " + std::to_string(R) + " groups");
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < start1; ++i) sizes.push_back(1);
  sizes.push_back(a1);
  for (std::size_t i = start1 + a1; i < start2; ++i) sizes.push_back(1);
  sizes.push_back(a2);
  for (std::size_t i = start2 + a2; i < L; ++i) sizes.push_back(1);
  return sizes;
}

std::vector<std::size_t> equal_chunks(std::size_t n, std::size_t parts) {
  std::vector<std::size_t> sizes(parts, n / parts);
  for (std::size_t i = 0; i < n % parts; ++i) ++sizes[i];
  return sizes;
}

std::vector<std::size_t> sorted_by(const std::vector<Vector>& xs, std::size_t coord,
                                   std::vector<std::size_t> idx) {
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a][coord] < xs[b][coord]; });
  return idx;
}

// Equal-count strips along x1, each split into equal-count tiles along x2.
std::vector<std::size_t> tile_labels(const std::vector<Vector>& xs, std::size_t R) {
  const std::size_t n = xs.size();
  std::size_t strips = static_cast<std::size_t>(std::sqrt(static_cast<double>(R)));
  while (R % strips != 0) --strips;
  const std::size_t per_strip = R / strips;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  all = sorted_by(xs, 0, all);
  std::vector<std::size_t> labels(n);
  std::size_t pos = 0;
  std::size_t label = 0;
  for (std::size_t strip_size : equal_chunks(n, strips)) {
    std::vector<std::size_t> strip(all.begin() + pos, all.begin() + pos + strip_size);
    strip = sorted_by(xs, 1, strip);
    std::size_t q = 0;
    for (std::size_t tile_size : equal_chunks(strip_size, per_strip)) {
      for (std::size_t t = 0; t < tile_size; ++t) labels[strip[q++]] = label;
      ++label;
    }
    pos += strip_size;
  }
  return labels;
}

void switch_labels(std::vector<std::size_t>& labels, std::size_t R, double fraction, Rng& rng) {
  if (fraction <= 0.0 || R < 2) return;
  const std::size_t n = labels.size();
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> counts(R, 0);
  for (auto l : labels) ++counts[l];
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<std::size_t> other(0, R - 2);
  std::size_t moved = 0;
  for (std::size_t i : order) {
    if (moved == target) break;
    if (counts[labels[i]] <= 1) continue;
    std::size_t to = other(rng);
    if (to >= labels[i]) ++to;
    --counts[labels[i]];
    ++counts[to];
    labels[i] = to;
    ++moved;
  }
}

}  // namespace

ScenarioSpec ScenarioSpec::preset(ScenarioName name, std::optional<std::size_t> groups) {
  ScenarioSpec s;
  s.name = name;
  switch (name) {
    case ScenarioName::A: break;
    case ScenarioName::B:
      s.sigma_eta = s.sigma_eps = 0.6;
      break;
    case ScenarioName::C:
      s.points = 36;
      break;
    case ScenarioName::D:
      s.noise = NoiseKind::Uniform;
      break;
    case ScenarioName::Plane:
    case ScenarioName::PlaneSwitched:
      s.truth = {0.0, 0.2, 0.4};
      s.points = 1600;
      if (name == ScenarioName::PlaneSwitched) s.label_switch_fraction = 0.3;
      break;
    case ScenarioName::Cubic:
      s.truth = {0.0, -0.5, 0.0, 0.1};
      s.sigma_eta = 0.2;
      s.sigma_eps = 0.1;
      break;
  }
  s.groups = groups.value_or(name == ScenarioName::PlaneSwitched ? 18 : s.points);
  if (name == ScenarioName::Cubic) s.group_sizes = two_area_sizes(s.points, s.groups);
  return s;
}

std::size_t ScenarioSpec::input_dim() const {
  return (name == ScenarioName::Plane || name == ScenarioName::PlaneSwitched) ? 2 : 1;
}

ParametricModel ScenarioSpec::model() const {
  if (input_dim() == 2) return ParametricModel::affine_kd(2);
  if (truth.size() == 2) return ParametricModel::affine_1d();
  return ParametricModel::polynomial_1d(truth.size() - 1);
}

ObjectiveKind ScenarioSpec::default_objective() const {
  if (name == ScenarioName::D || name == ScenarioName::Cubic) return ObjectiveKind::General;
  if (input_dim() == 2) return ObjectiveKind::GaussPlane;
  return ObjectiveKind::GaussLine;
}

void ScenarioSpec::validate() const {
  require(points >= 1, "scenario needs at least one point");
  require(sigma_eta > 0.0 && sigma_eps > 0.0, "scenario noise scales must be positive");
  require(x_lo < x_hi, "scenario input range must be nonempty");
  require(label_switch_fraction >= 0.0 && label_switch_fraction < 1.0, "label switch fraction must lie in [0, 1)");
  require(truth.size() == model().param_dim(), "scenario truth has wrong length");
  if (!group_sizes.empty()) {
    require(std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0}) == points,
            "scenario group sizes must sum to the number of points");
    require(std::find(group_sizes.begin(), group_sizes.end(), std::size_t{0}) == group_sizes.end(),
            "scenario group sizes must be positive");
  } else {
    require(groups >= 1, "scenario needs at least one group");
    if (groups > points) {
      throw ContractViolation("R = " + std::to_string(groups) + " exceeds min(L, H) = " + std::to_string(points));
    }
  }
}

GeneratedScenario generate_scenario(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.points;
  const std::size_t k = spec.input_dim();
  const ParametricModel model = spec.model();

  std::uniform_real_distribution<double> pick_x(spec.x_lo, spec.x_hi);
  const bool uniform = spec.noise == NoiseKind::Uniform;
  const double root3 = std::sqrt(3.0);
  const ErrorDensity in_density = uniform ? ErrorDensity::uniform(Vector(k, root3 * spec.sigma_eta))
                                          : ErrorDensity::gaussian(Vector(k, spec.sigma_eta));
  const ErrorDensity out_density = uniform ? ErrorDensity::uniform(Vector{root3 * spec.sigma_eps})
                                           : ErrorDensity::gaussian(Vector{spec.sigma_eps});

  std::vector<Vector> true_x(n, Vector(k));
  std::vector<Vector> obs_x(n, Vector(k));
  std::vector<Vector> obs_y(n, Vector(1));
  Vector noise_x(k);
  double noise_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : true_x[i]) v = pick_x(rng);
    in_density.sample_into(rng, noise_x);
    out_density.sample_into(rng, std::span<double>(&noise_y, 1));
    for (std::size_t c = 0; c < k; ++c) obs_x[i][c] = true_x[i][c] + noise_x[c];
    obs_y[i][0] = model.eval_scalar(spec.truth, true_x[i]) + noise_y;
  }

  std::vector<std::size_t> labels(n);
  std::size_t R = 0;
  if (k == 2) {
    R = spec.groups;
    labels = tile_labels(true_x, R);
    switch_labels(labels, R, spec.label_switch_fraction, rng);
  } else {
    const auto sizes = spec.group_sizes.empty() ? equal_chunks(n, spec.groups) : spec.group_sizes;
    R = sizes.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    idx = sorted_by(true_x, 0, idx);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < R; ++g) {
      for (std::size_t t = 0; t < sizes[g]; ++t) labels[idx[pos++]] = g;
    }
  }

  std::vector<Group> groups(R);
  std::vector<std::vector<Vector>> true_grouped(R);
  for (std::size_t i = 0; i < n; ++i) {
    true_grouped[labels[i]].push_back(true_x[i]);
    Group& g = groups[labels[i]];
    g.inputs.push_back(obs_x[i]);
    g.outputs.push_back(obs_y[i]);
    g.input_densities.push_back(in_density);
    g.output_densities.push_back(out_density);
  }
  return GeneratedScenario{GroupedDataset(std::move(groups)), spec.truth, std::move(labels), std::move(true_grouped)};
}

ReplicationReport replicate(const ScenarioSpec& spec, std::size_t n_reps, ObjectiveKind objective,
                            const IntegrationConfig& int_cfg, const OptimizerConfig& opt_cfg,
                            std::uint64_t master_seed) {
  require(n_reps >= 1, "replicate needs n_reps >= 1");
  spec.validate();
  int_cfg.validate();
  opt_cfg.validate();

  ReplicationReport report;
  report.spec = spec;
  report.n_reps = n_reps;
  report.objective = objective;
  report.fits.resize(n_reps);
  std::vector<char> failed(n_reps, 0);
  std::vector<double> seconds(n_reps, 0.0);
  const ParametricModel model = spec.model();

  parallel_for(n_reps, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t child = derive_seed(master_seed, i);
    try {
      ScenarioSpec rep_spec = spec;
      rep_spec.seed = child;
      Rng rng(child);
      const GeneratedScenario sc = generate_scenario(rep_spec, rng);
      IntegrationConfig cfg = int_cfg;
      cfg.seed = derive_seed(child, 1);
      OptimizerConfig ocfg = opt_cfg;
      ocfg.seed = derive_seed(child, 2);
      report.fits[i] = fit(sc.data, model, objective, cfg, ocfg);
    } catch (const std::exception& e) {
      failed[i] = 1;
      report.fits[i] = FitResult{};
      report.fits[i].diagnostics.push_back(std::string("fit failed: ") + e.what());
    }
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  std::vector<FitResult> ok;
  for (std::size_t i = 0; i < n_reps; ++i) {
    report.failed.push_back(failed[i] != 0);
    if (failed[i]) {
      ++report.failures;
      continue;
    }
    if (!report.fits[i].converged) ++report.not_converged;
    ok.push_back(report.fits[i]);
  }
  if (!ok.empty()) report.summary = residual_summary(ok, spec.truth);
  report.wall_seconds_total = std::accumulate(seconds.begin(), seconds.end(), 0.0);
  report.wall_seconds_mean = report.wall_seconds_total / static_cast<double>(n_reps);
  return report;
}

Table generate_worldbank_analog(std::uint64_t seed, std::size_t rows) {
  require(rows >= 2, "analog table needs at least 2 rows");
  Rng rng(seed);
  std::normal_distribution<double> z;
  Table t;
  t.columns = {"birth_rate", "urban_population_pct", "political_stability", "log_tb_incidence",
               "life_expectancy", "gdp_per_capita"};
  for (std::size_t i = 0; i < rows; ++i) {
    const double dev = z(rng);
    const double birth = 20.0 - 7.5 * dev + 6.0 * z(rng);
    const double urban = std::clamp(58.0 + 17.0 * dev + 16.0 * z(rng), 5.0, 100.0);
    const double stability = -0.1 + 0.6 * dev + 0.7 * z(rng);
    const double log_tb = 3.8 - 1.1 * dev + 1.1 * z(rng);
    const double life = 72.5 - 0.3 * (birth - 20.0) + 0.03 * (urban - 58.0) + 1.0 * stability -
                        1.5 * (log_tb - 3.8) + 2.5 * z(rng);
    const double gdp = std::exp(8.7 + 1.3 * dev + 0.5 * z(rng));
    t.ids.push_back("C" + std::to_string(1000 + i).substr(1));
    t.rows.push_back({birth, urban, stability, log_tb, life, gdp});
  }
  return t;
}

}  // namespace eivfit
