#pragma once

#include <span>

#include "eivfit/common.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/models.hpp"
#include "eivfit/optimize.hpp"

namespace eivfit {

struct LineCoefficients {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares line from the normal-equation closed form
/// (means of x, y, x^2 and xy).
LineCoefficients ols_line(std::span<const double> xs, std::span<const double> ys);

/// Minimizes sum ||y - M(x; alpha)||^2: normal equations (QR) for affine and
/// polynomial families, Nelder-Mead from zero for generic models.
FitResult ols_general(const PairedDataset& pairs, const ParametricModel& model, const OptimizerConfig& opt_cfg);

/// Classical Deming regression with variance ratio delta = sigma_eps^2 / sigma_eta^2.
LineCoefficients deming_line(std::span<const double> xs, std::span<const double> ys, double sigma_eta,
                             double sigma_eps);

/// sum (alpha1 + alpha2 x - y)^2 / (2 (alpha2^2 sigma_eta^2 + sigma_eps^2)),
/// the part of the paired Gaussian line objective minimized by Deming regression.
double deming_sum_of_squares(std::span<const double> xs, std::span<const double> ys, double sigma_eta,
                             double sigma_eps, double alpha1, double alpha2);

/// (L / 2) ln(alpha2^2 sigma_eta^2 + sigma_eps^2).
double integrated_deming_penalty(double alpha2, double sigma_eta, double sigma_eps, std::size_t L);

enum class ImputationStrategy { GroupMean, AllPairs };

/// OLS after turning grouped data back into pairs: GroupMean replaces every
/// non-singleton group by one (mean input, mean output) pair, AllPairs uses
/// every within-group cross pair.
FitResult imputation_fit(const GroupedDataset& ds, const ParametricModel& model, ImputationStrategy strategy,
                         const OptimizerConfig& opt_cfg);

PairedDataset impute_pairs(const GroupedDataset& ds, ImputationStrategy strategy);

}  // namespace eivfit
