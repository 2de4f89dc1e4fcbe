#include "eivfit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace eivfit {

double r_squared_delta(const RSquaredDeltaInput& in) {
  const Eigen::Index L = in.X.rows();
  const Eigen::Index k = in.X.cols();
  require(L >= 2, "r_squared_delta: needs at least two observations");
  require(in.y.size() == L, "r_squared_delta: y length must equal the row count of X");
  require(in.b.size() == k, "r_squared_delta: b length must equal the column count of X");
  require(in.sigma_delta.rows() == k && in.sigma_delta.cols() == k, "r_squared_delta: Sigma_delta must be k x k");

  // P v == v - mean(v); avoids forming the L x L centering matrix.
  const Eigen::MatrixXd Xc = in.X.rowwise() - in.X.colwise().mean();
  const Eigen::VectorXd yc = in.y.array() - in.y.mean();
  const double n = static_cast<double>(L);
  const double syy = yc.squaredNorm() / n;
  if (!(syy > 0.0)) throw DataError("r_squared_delta: outputs are constant");
  const Eigen::MatrixXd S = Xc.transpose() * Xc / n;
  const double explained = in.b.dot(S * in.b);
  const double noise = in.b.dot(in.sigma_delta * in.b);
  return std::min(explained / (syy + noise), 1.0);
}

double r_squared_delta(const PairedDataset& data, std::span<const double> alpha_hat,
                       std::span<const double> input_stds) {
  require(data.size() >= 1, "r_squared_delta: empty dataset");
  const std::size_t k = data.inputs.front().size();
  require(alpha_hat.size() == k + 1, "r_squared_delta: alpha_hat must hold an intercept and k slopes");
  require(input_stds.size() == k, "r_squared_delta: one input std per input column required");
  RSquaredDeltaInput in;
  const auto L = static_cast<Eigen::Index>(data.size());
  const auto kk = static_cast<Eigen::Index>(k);
  in.X.resize(L, kk);
  in.y.resize(L);
  for (Eigen::Index i = 0; i < L; ++i) {
    const auto& x = data.inputs[static_cast<std::size_t>(i)];
    require(x.size() == k && data.outputs[static_cast<std::size_t>(i)].size() == 1,
            "r_squared_delta: inconsistent observation dimensions");
    for (Eigen::Index c = 0; c < kk; ++c) in.X(i, c) = x[static_cast<std::size_t>(c)];
    in.y(i) = data.outputs[static_cast<std::size_t>(i)][0];
  }
  in.b.resize(kk);
  in.sigma_delta = Eigen::MatrixXd::Zero(kk, kk);
  for (Eigen::Index c = 0; c < kk; ++c) {
    in.b(c) = alpha_hat[static_cast<std::size_t>(c) + 1];
    in.sigma_delta(c, c) = input_stds[static_cast<std::size_t>(c)] * input_stds[static_cast<std::size_t>(c)];
  }
  return r_squared_delta(in);
}

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), "quantile: empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ResidualSummary residual_summary(const std::vector<FitResult>& fits, std::span<const double> truth) {
  if (fits.empty()) throw DataError("residual_summary: no fits");
  for (const auto& f : fits) {
    require(f.alpha_hat.size() == truth.size(), "residual_summary: fit and truth differ in length");
  }
  ResidualSummary summary;
  summary.coordinates.resize(truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    CoordinateSummary& c = summary.coordinates[j];
    for (const auto& f : fits) c.deltas.push_back(f.alpha_hat[j] - truth[j]);
    c.q1 = quantile(c.deltas, 0.25);
    c.median = quantile(c.deltas, 0.5);
    c.q3 = quantile(c.deltas, 0.75);
    c.iqr = c.q3 - c.q1;
    const double fence_lo = c.q1 - 1.5 * c.iqr;
    const double fence_hi = c.q3 + 1.5 * c.iqr;
    c.whisker_lo = c.q1;
    c.whisker_hi = c.q3;
    for (double d : c.deltas) {
      if (d < fence_lo || d > fence_hi) {
        c.outliers.push_back(d);
      } else {
        c.whisker_lo = std::min(c.whisker_lo, d);
        c.whisker_hi = std::max(c.whisker_hi, d);
      }
    }
  }
  return summary;
}

}  // namespace eivfit
