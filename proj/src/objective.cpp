#include "eivfit/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace eivfit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Single-pass log-sum-exp.
class LogAccumulator {
 public:
  void add(double v) {
    if (v == kNegInf) return;
    if (v <= peak_) {
      sum_ += std::exp(v - peak_);
    } else {
      sum_ = sum_ * std::exp(peak_ - v) + 1.0;
      peak_ = v;
    }
  }
  double result() const { return peak_ == kNegInf ? kNegInf : peak_ + std::log(sum_); }

 private:
  double peak_ = kNegInf;
  double sum_ = 0.0;
};

const std::vector<Vector>& side_values(const Group& g, Side side) {
  return side == Side::Input ? g.inputs : g.outputs;
}

const std::vector<ErrorDensity>& side_densities(const Group& g, Side side) {
  return side == Side::Input ? g.input_densities : g.output_densities;
}

ObjectiveValue finish(Vector per_group_log, Diagnostics diagnostics = {}) {
  ObjectiveValue out;
  out.per_group_log = std::move(per_group_log);
  out.diagnostics = std::move(diagnostics);
  std::vector<std::size_t> zero_groups;
  double total = 0.0;
  for (std::size_t r = 0; r < out.per_group_log.size(); ++r) {
    if (out.per_group_log[r] == kNegInf) zero_groups.push_back(r);
    total -= out.per_group_log[r];
  }
  if (!zero_groups.empty()) {
    std::ostringstream msg;
    msg << "likelihood underflow: zero likelihood in group(s)";
    for (std::size_t i = 0; i < zero_groups.size() && i < 20; ++i) msg << ' ' << zero_groups[i];
    if (zero_groups.size() > 20) msg << " ... (" << zero_groups.size() << " total)";
    out.diagnostics.push_back(msg.str());
    total = kInf;
  }
  out.value = total;
  return out;
}

void require_line_data(const GroupedDataset& ds, const char* who) {
  require(ds.input_dim() == 1 && ds.output_dim() == 1, std::string(who) + ": requires k = m = 1");
}

}  // namespace

void IntegrationConfig::validate() const {
  if (method == IntegrationMethod::MonteCarlo) {
    require(mc_samples >= 100, "integration config: monte carlo needs at least 100 samples");
  } else {
    require(grid_points_per_dim == 0 || (grid_points_per_dim >= 11 && grid_points_per_dim % 2 == 1),
            "integration config: grid points per dimension must be odd and at least 11");
  }
  require(grid_halfwidth_sigmas > 0.0 && std::isfinite(grid_halfwidth_sigmas),
          "integration config: grid half-width must be positive");
}

std::size_t IntegrationConfig::resolved_grid_points(std::size_t input_dim) const {
  if (grid_points_per_dim != 0) return grid_points_per_dim;
  return input_dim == 1 ? 201 : 61;
}

double mixture_log_density(const Group& g, Side side, std::span<const double> s) {
  const auto& values = side_values(g, side);
  const auto& densities = side_densities(g, side);
  require(!values.empty(), "mixture density: empty side");
  require(s.size() == values.front().size(), "mixture density: dimension mismatch");
  LogAccumulator acc;
  Vector diff(s.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t d = 0; d < s.size(); ++d) diff[d] = values[i][d] - s[d];
    acc.add(densities[i].log_eval(diff));
  }
  return acc.result() - std::log(static_cast<double>(values.size()));
}

double mixture_density_eval(const Group& g, Side side, std::span<const double> s) {
  return std::exp(mixture_log_density(g, side, s));
}

Vector sample_input_mixture(const Group& g, Rng& rng, std::size_t samples) {
  const std::size_t k = g.inputs.front().size();
  Vector draws(samples * k);
  std::uniform_int_distribution<std::size_t> pick(0, g.H() - 1);
  Vector noise(k);
  for (std::size_t p = 0; p < samples; ++p) {
    const std::size_t h = pick(rng);
    g.input_densities[h].sample_into(rng, noise);
    for (std::size_t d = 0; d < k; ++d) draws[p * k + d] = g.inputs[h][d] - noise[d];
  }
  return draws;
}

GeneralObjective::GeneralObjective(const GroupedDataset& ds, ParametricModel model, IntegrationConfig cfg)
    : model_(std::move(model)), cfg_(cfg), k_(ds.input_dim()), m_(ds.output_dim()) {
  cfg_.validate();
  require(model_.input_dim() == k_ && model_.output_dim() == m_,
          "general objective: model dimensions do not match the dataset");
  plans_.reserve(ds.R());
  for (std::size_t r = 0; r < ds.R(); ++r) {
    const Group& g = ds.group(r);
    GroupPlan plan;

    for (std::size_t l = 0; l < g.L(); ++l) {
      const ErrorDensity& d = g.output_densities[l];
      if (d.kind() == DensityKind::PointMass) {
        throw ContractViolation("general objective: point-mass output densities are not supported (group " +
                                std::to_string(r) + ")");
      }
      OutputComponent c{d.kind(), g.outputs[l], Vector(m_), 0.0};
      for (std::size_t j = 0; j < m_; ++j) {
        c.inv_scale[j] = 1.0 / d.scale()[j];
        c.log_norm -= d.kind() == DensityKind::Gaussian ? std::log(d.scale()[j]) + kLogSqrt2Pi
                                                        : std::log(2.0 * d.scale()[j]);
      }
      plan.outputs.push_back(std::move(c));
    }
    plan.log_output_count = std::log(static_cast<double>(g.L()));

    std::vector<std::size_t> continuous;
    for (std::size_t h = 0; h < g.H(); ++h) {
      if (g.input_densities[h].kind() == DensityKind::PointMass) {
        plan.dirac_inputs.insert(plan.dirac_inputs.end(), g.inputs[h].begin(), g.inputs[h].end());
      } else {
        continuous.push_back(h);
      }
    }
    const double H = static_cast<double>(g.H());
    const std::size_t n_dirac = g.H() - continuous.size();
    plan.log_dirac_share = n_dirac > 0 ? std::log(static_cast<double>(n_dirac) / H) : kNegInf;

    if (continuous.size() == g.H() && cfg_.method == IntegrationMethod::MonteCarlo) {
      Rng rng(derive_seed(cfg_.seed, r));
      plan.nodes = sample_input_mixture(g, rng, cfg_.mc_samples);
      plan.log_weight.assign(cfg_.mc_samples, -std::log(static_cast<double>(cfg_.mc_samples)));
    } else if (!continuous.empty()) {
      // Mixed groups integrate their continuous components on the grid even in
      // Monte Carlo mode; the point masses are always summed exactly.
      const std::size_t n = cfg_.resolved_grid_points(k_);
      Vector lo(k_, kInf), hi(k_, -kInf), step(k_);
      for (std::size_t h : continuous) {
        for (std::size_t d = 0; d < k_; ++d) {
          const double radius = g.input_densities[h].support_radius(d, cfg_.grid_halfwidth_sigmas);
          lo[d] = std::min(lo[d], g.inputs[h][d] - radius);
          hi[d] = std::max(hi[d], g.inputs[h][d] + radius);
        }
      }
      for (std::size_t d = 0; d < k_; ++d) step[d] = (hi[d] - lo[d]) / static_cast<double>(n - 1);

      const double log_share = std::log(static_cast<double>(continuous.size()) / H);
      const double log_ncont = std::log(static_cast<double>(continuous.size()));
      std::vector<std::size_t> idx(k_, 0);
      Vector node(k_), diff(k_);
      std::size_t total = 1;
      for (std::size_t d = 0; d < k_; ++d) total *= n;
      for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        double log_w = 0.0;
        for (std::size_t d = 0; d < k_; ++d) {
          idx[d] = rem % n;
          rem /= n;
          node[d] = lo[d] + step[d] * static_cast<double>(idx[d]);
          const bool edge = idx[d] == 0 || idx[d] == n - 1;
          log_w += std::log(edge ? 0.5 * step[d] : step[d]);
        }
        LogAccumulator fx;
        for (std::size_t h : continuous) {
          for (std::size_t d = 0; d < k_; ++d) diff[d] = g.inputs[h][d] - node[d];
          fx.add(g.input_densities[h].log_eval(diff));
        }
        const double log_fx = fx.result();
        if (log_fx == kNegInf) continue;
        plan.nodes.insert(plan.nodes.end(), node.begin(), node.end());
        plan.log_weight.push_back(log_w + log_fx - log_ncont + log_share);
      }
    }
    plans_.push_back(std::move(plan));
  }
}

double GeneralObjective::output_log_density(const GroupPlan& plan, std::span<const double> prediction) const {
  auto component = [&](const OutputComponent& c) {
    if (c.kind == DensityKind::Gaussian) {
      double q = 0.0;
      for (std::size_t j = 0; j < m_; ++j) {
        const double z = (c.center[j] - prediction[j]) * c.inv_scale[j];
        q += z * z;
      }
      return c.log_norm - 0.5 * q;
    }
    for (std::size_t j = 0; j < m_; ++j) {
      if (std::abs(c.center[j] - prediction[j]) * c.inv_scale[j] > 1.0) return kNegInf;
    }
    return c.log_norm;
  };
  if (plan.outputs.size() == 1) return component(plan.outputs.front());
  LogAccumulator acc;
  for (const auto& c : plan.outputs) acc.add(component(c));
  return acc.result() - plan.log_output_count;
}

double GeneralObjective::group_log(const GroupPlan& plan, std::span<const double> alpha,
                                   std::span<double> scratch) const {
  LogAccumulator total;
  const bool scalar = m_ == 1;
  auto predict = [&](std::span<const double> x) {
    if (scalar) {
      scratch[0] = model_.eval_scalar(alpha, x);
    } else {
      model_.eval_into(alpha, x, scratch);
    }
  };
  if (!plan.dirac_inputs.empty()) {
    LogAccumulator dirac;
    const std::size_t count = plan.dirac_inputs.size() / k_;
    for (std::size_t i = 0; i < count; ++i) {
      predict(std::span<const double>(plan.dirac_inputs).subspan(i * k_, k_));
      dirac.add(output_log_density(plan, scratch));
    }
    total.add(dirac.result() - std::log(static_cast<double>(count)) + plan.log_dirac_share);
  }
  for (std::size_t p = 0; p < plan.log_weight.size(); ++p) {
    predict(std::span<const double>(plan.nodes).subspan(p * k_, k_));
    total.add(plan.log_weight[p] + output_log_density(plan, scratch));
  }
  return total.result();
}

double GeneralObjective::group_log_likelihood(std::size_t r, std::span<const double> alpha) const {
  require(r < plans_.size(), "group index out of range");
  require(alpha.size() == model_.param_dim(), "objective: parameter vector has wrong length");
  Vector scratch(m_);
  return group_log(plans_[r], alpha, scratch);
}

ObjectiveValue GeneralObjective::operator()(std::span<const double> alpha) const {
  require(alpha.size() == model_.param_dim(), "objective: parameter vector has wrong length");
  Vector scratch(m_);
  Vector per_group(plans_.size());
  for (std::size_t r = 0; r < plans_.size(); ++r) per_group[r] = group_log(plans_[r], alpha, scratch);
  return finish(std::move(per_group));
}

double GeneralObjective::value(std::span<const double> alpha) const {
  require(alpha.size() == model_.param_dim(), "objective: parameter vector has wrong length");
  Vector scratch(m_);
  double total = 0.0;
  for (const auto& plan : plans_) {
    const double lg = group_log(plan, alpha, scratch);
    if (lg == kNegInf) return kInf;
    total -= lg;
  }
  return total;
}

ObjectiveValue nll_general(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& cfg,
                           std::span<const double> alpha) {
  return GeneralObjective(ds, model, cfg)(alpha);
}

ObjectiveValue nll_gaussian_hyperplane(const GroupedDataset& ds, std::span<const double> sigma_eta,
                                       double sigma_eps, std::span<const double> alpha) {
  const std::size_t k = ds.input_dim();
  require(ds.output_dim() == 1, "gaussian hyperplane objective: requires m = 1");
  require(sigma_eta.size() == k, "gaussian hyperplane objective: sigma_eta length must equal k");
  require(alpha.size() == k + 1, "gaussian hyperplane objective: alpha length must equal k + 1");
  require(sigma_eps > 0.0, "gaussian hyperplane objective: sigma_eps must be positive");
  double V = sigma_eps * sigma_eps;
  for (std::size_t n = 0; n < k; ++n) {
    require(sigma_eta[n] > 0.0, "gaussian hyperplane objective: sigma_eta must be positive");
    V += alpha[n + 1] * alpha[n + 1] * sigma_eta[n] * sigma_eta[n];
  }
  const double half_log_v = 0.5 * std::log(V);
  Vector per_group(ds.R());
  for (std::size_t r = 0; r < ds.R(); ++r) {
    const Group& g = ds.group(r);
    LogAccumulator acc;
    for (const auto& x : g.inputs) {
      double pred = alpha[0];
      for (std::size_t n = 0; n < k; ++n) pred += alpha[n + 1] * x[n];
      for (const auto& y : g.outputs) {
        const double d = pred - y[0];
        acc.add(-d * d / (2.0 * V));
      }
    }
    per_group[r] = acc.result() - std::log(static_cast<double>(g.H() * g.L())) - half_log_v;
  }
  return finish(std::move(per_group));
}

ObjectiveValue nll_gaussian_line(const GroupedDataset& ds, double sigma_eta, double sigma_eps,
                                 std::span<const double> alpha) {
  require_line_data(ds, "gaussian line objective");
  require(alpha.size() == 2, "gaussian line objective: alpha must have two entries");
  require(sigma_eta > 0.0 && sigma_eps > 0.0, "gaussian line objective: sigmas must be positive");
  const double s[1] = {sigma_eta};
  return nll_gaussian_hyperplane(ds, s, sigma_eps, alpha);
}

double interval_pair_likelihood(double x, double v, double y, double w, double alpha1, double alpha2) {
  const double norm = 1.0 / (4.0 * v * w);
  if (std::abs(alpha2) < 1e-12 * (1.0 + std::abs(alpha1))) {
    return std::abs(y - alpha1) <= w ? 1.0 / (2.0 * w) : 0.0;
  }
  const double c_plus = x + (alpha1 - y + w) / alpha2;
  const double c_minus = x + (alpha1 - y - w) / alpha2;
  const double c_min = std::min(c_plus, c_minus);
  const double c_max = std::max(c_plus, c_minus);
  const double overlap = std::min(v, c_max) - std::max(-v, c_min);
  return overlap > 0.0 ? norm * overlap : 0.0;
}

ObjectiveValue likelihood_interval_line(const GroupedDataset& ds, std::span<const double> alpha) {
  require_line_data(ds, "interval line likelihood");
  require(alpha.size() == 2, "interval line likelihood: alpha must have two entries");
  Vector per_group(ds.R());
  for (std::size_t r = 0; r < ds.R(); ++r) {
    const Group& g = ds.group(r);
    double sum = 0.0;
    for (std::size_t h = 0; h < g.H(); ++h) {
      require(g.input_densities[h].kind() == DensityKind::Uniform,
              "interval line likelihood: all input densities must be uniform boxes");
      const double v = g.input_densities[h].scale()[0];
      for (std::size_t l = 0; l < g.L(); ++l) {
        require(g.output_densities[l].kind() == DensityKind::Uniform,
                "interval line likelihood: all output densities must be uniform boxes");
        const double w = g.output_densities[l].scale()[0];
        sum += interval_pair_likelihood(g.inputs[h][0], v, g.outputs[l][0], w, alpha[0], alpha[1]);
      }
    }
    per_group[r] = sum > 0.0 ? std::log(sum / static_cast<double>(g.H() * g.L())) : kNegInf;
  }
  return finish(std::move(per_group));
}

GroupedDataset with_density_params(const GroupedDataset& ds, const DensityParams& params) {
  require(params.input_scales.size() == ds.input_dim(), "density params: input scale length must equal k");
  require(params.output_scales.size() == ds.output_dim(), "density params: output scale length must equal m");
  std::vector<Group> groups = ds.groups();
  for (auto& g : groups) {
    for (auto& d : g.input_densities) {
      if (d.kind() == DensityKind::Gaussian) d = d.with_scale(params.input_scales);
    }
    for (auto& d : g.output_densities) {
      if (d.kind() == DensityKind::Gaussian) d = d.with_scale(params.output_scales);
    }
  }
  return GroupedDataset(std::move(groups));
}

ObjectiveValue nll_extended(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& cfg,
                            std::span<const double> alpha, const DensityParams& params,
                            const DensityParamBounds& bounds) {
  bounds.validate(ds.input_dim(), ds.output_dim());
  require(bounds.contains(params), "extended objective: density parameters at or outside their bounds");
  return nll_general(with_density_params(ds, params), model, cfg, alpha);
}

double log_posterior(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& cfg,
                     const LogPrior& prior, std::span<const double> alpha) {
  const double log_prior = prior ? prior(alpha) : 0.0;
  if (log_prior == kNegInf) return kNegInf;
  return -nll_general(ds, model, cfg, alpha).value + log_prior;
}

McEstimate group_likelihood_mc(const Group& g, const ParametricModel& model, std::span<const double> alpha,
                               std::size_t samples, std::uint64_t seed) {
  require(samples >= 2, "monte carlo estimate: need at least two samples");
  require(g.L() >= 1 && g.H() >= 1, "monte carlo estimate: empty group");
  const std::size_t k = g.inputs.front().size();
  require(model.input_dim() == k && model.output_dim() == g.outputs.front().size(),
          "monte carlo estimate: model dimensions do not match the group");
  Rng rng(seed);
  const Vector draws = sample_input_mixture(g, rng, samples);
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t p = 0; p < samples; ++p) {
    const Vector pred = model.eval(alpha, std::span<const double>(draws).subspan(p * k, k));
    const double f = mixture_density_eval(g, Side::Output, pred);
    const double delta = f - mean;
    mean += delta / static_cast<double>(p + 1);
    m2 += delta * (f - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

}  // namespace eivfit
