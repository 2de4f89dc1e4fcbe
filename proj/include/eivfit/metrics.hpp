#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "eivfit/common.hpp"
#include "eivfit/dataset.hpp"
#include "eivfit/optimize.hpp"

namespace eivfit {

/// Inputs of the errors-in-variables coefficient of determination.
struct RSquaredDeltaInput {
  Eigen::MatrixXd X;            // L x k predictors
  Eigen::VectorXd y;            // L outputs
  Eigen::VectorXd b;            // k fitted slopes (no intercept)
  Eigen::MatrixXd sigma_delta;  // k x k predictor-error covariance
};

/// min(b' S b / (y' P y / L + b' Sigma_delta b), 1) with S = X' P X / L and
/// P the centering matrix. Throws DataError for constant y.
double r_squared_delta(const RSquaredDeltaInput& in);

/// R^2_delta of an affine fit on paired data: slopes are alpha_hat[1..k] and
/// Sigma_delta = diag(input_stds^2).
double r_squared_delta(const PairedDataset& data, std::span<const double> alpha_hat,
                       std::span<const double> input_stds);

/// Linear-interpolation quantile between order statistics, p in [0, 1].
double quantile(std::vector<double> values, double p);

struct CoordinateSummary {
  Vector deltas;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  Vector outliers;
};

/// Box-plot statistics of alpha_fit - alpha_truth, one entry per parameter.
struct ResidualSummary {
  std::vector<CoordinateSummary> coordinates;
};

ResidualSummary residual_summary(const std::vector<FitResult>& fits, std::span<const double> truth);

}  // namespace eivfit
