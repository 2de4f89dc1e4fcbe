#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "eivfit/common.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/densities.hpp"
#include "eivfit/models.hpp"

namespace eivfit {

enum class IntegrationMethod { Quadrature, MonteCarlo };

/// Numerical integration over the latent true input s.
struct IntegrationConfig {
  IntegrationMethod method = IntegrationMethod::Quadrature;
  std::size_t mc_samples = 1000;
  /// Odd and >= 11; 0 picks 201 for k = 1 and 61 otherwise.
  std::size_t grid_points_per_dim = 0;
  /// Gaussian components are covered out to this many standard deviations.
  double grid_halfwidth_sigmas = 8.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t resolved_grid_points(std::size_t input_dim) const;
};

/// Negative log-likelihood with its per-group decomposition:
/// value == -sum(per_group_log). +inf (never NaN) signals a zero likelihood.
struct ObjectiveValue {
  double value = 0.0;
  Vector per_group_log;
  Diagnostics diagnostics;
};

enum class Side { Input, Output };

/// Equally weighted mixture (1/n) sum_i f_i(obs_i - s) over one side of a group.
double mixture_density_eval(const Group& g, Side side, std::span<const double> s);
double mixture_log_density(const Group& g, Side side, std::span<const double> s);

/// General grouped mixture objective, mixture-integral form:
///   per_group_log[r] = ln integral f_Y_r(M(s; alpha)) f_X_r(s) ds
/// with full density normalization. Everything that does not depend on alpha
/// (grid nodes, weights, input mixture values, Monte Carlo draws) is prepared
/// once at construction, so repeated evaluation inside an optimizer is cheap.
class GeneralObjective {
 public:
  GeneralObjective(const GroupedDataset& ds, ParametricModel model, IntegrationConfig cfg);

  ObjectiveValue operator()(std::span<const double> alpha) const;
  /// Objective value only; avoids building the per-group vector.
  double value(std::span<const double> alpha) const;
  double group_log_likelihood(std::size_t r, std::span<const double> alpha) const;

  std::size_t groups() const { return plans_.size(); }
  const ParametricModel& model() const { return model_; }

 private:
  struct OutputComponent {
    DensityKind kind;
    Vector center;
    Vector inv_scale;
    double log_norm;
  };
  struct GroupPlan {
    // Continuous nodes, flattened node-major (k values per node), with
    // log(weight) + log f_X(node) + log(share of continuous components).
    Vector nodes;
    Vector log_weight;
    // Point-mass inputs collapse to a finite sum (sifting).
    Vector dirac_inputs;
    double log_dirac_share = 0.0;
    std::vector<OutputComponent> outputs;
    double log_output_count = 0.0;
  };

  double output_log_density(const GroupPlan& plan, std::span<const double> prediction) const;
  double group_log(const GroupPlan& plan, std::span<const double> alpha, std::span<double> scratch) const;

  ParametricModel model_;
  IntegrationConfig cfg_;
  std::size_t k_;
  std::size_t m_;
  std::vector<GroupPlan> plans_;
};

ObjectiveValue nll_general(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& cfg,
                           std::span<const double> alpha);

/// Closed-form grouped Gaussian line objective (k = m = 1). Stored densities
/// are ignored; sigma_eta and sigma_eps apply to every observation. The
/// ln sqrt(2 pi) constant of each group is omitted, so for fully paired data
/// value == (L/2) ln V + sum d_l^2 / (2V) with V = alpha2^2 sigma_eta^2 + sigma_eps^2.
ObjectiveValue nll_gaussian_line(const GroupedDataset& ds, double sigma_eta, double sigma_eps,
                                 std::span<const double> alpha);

/// Closed-form grouped Gaussian hyperplane objective (m = 1), same constant
/// convention as nll_gaussian_line. V = sum_n alpha_{n+1}^2 sigma_eta_n^2 + sigma_eps^2.
ObjectiveValue nll_gaussian_hyperplane(const GroupedDataset& ds, std::span<const double> sigma_eta,
                                       double sigma_eps, std::span<const double> alpha);

/// Exact negative log-likelihood for interval (uniform-box) line data,
/// including the 1/(2v) 1/(2w) normalizations, so it equals nll_general.
ObjectiveValue likelihood_interval_line(const GroupedDataset& ds, std::span<const double> alpha);

/// Interval-pair likelihood integral for midpoints x, y and half-widths v, w.
double interval_pair_likelihood(double x, double v, double y, double w, double alpha1, double alpha2);

/// Copy of `ds` whose gaussian densities use the global scales in `params`.
GroupedDataset with_density_params(const GroupedDataset& ds, const DensityParams& params);

/// nll_general after replacing all gaussian scales by `params`; `params` must
/// lie strictly inside `bounds` (pinned coordinates excepted).
ObjectiveValue nll_extended(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& cfg,
                            std::span<const double> alpha, const DensityParams& params,
                            const DensityParamBounds& bounds);

/// Log prior density in alpha, up to an additive constant.
using LogPrior = std::function<double(std::span<const double>)>;

/// Unnormalized log posterior: -nll_general(alpha) + prior(alpha).
double log_posterior(const GroupedDataset& ds, const ParametricModel& model, const IntegrationConfig& cfg,
                     const LogPrior& prior, std::span<const double> alpha);

/// Monte Carlo estimate of one group's likelihood integral from P draws of
/// the input mixture, with the standard error of the sample mean.
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};
McEstimate group_likelihood_mc(const Group& g, const ParametricModel& model, std::span<const double> alpha,
                               std::size_t samples, std::uint64_t seed);

/// P draws from the input mixture of `g`, flattened (k values per draw).
Vector sample_input_mixture(const Group& g, Rng& rng, std::size_t samples);

}  // namespace eivfit
