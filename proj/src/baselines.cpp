#include "eivfit/baselines.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace eivfit {

namespace {

void require_line_points(std::span<const double> xs, std::span<const double> ys, const char* who) {
  require(xs.size() == ys.size(), std::string(who) + ": xs and ys differ in length");
  require(xs.size() >= 2, std::string(who) + ": needs at least two points");
}

}  // namespace

LineCoefficients ols_line(std::span<const double> xs, std::span<const double> ys) {
  require_line_points(xs, ys, "ols_line");
  const double L = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0, mxx = 0.0, mxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
    mxx += xs[i] * xs[i];
    mxy += xs[i] * ys[i];
  }
  mx /= L;
  my /= L;
  mxx /= L;
  mxy /= L;
  const double denom = mxx - mx * mx;
  if (!(denom > 1e-14 * std::max(1.0, mxx))) throw DataError("ols_line: inputs have zero variance");
  return {(mxx * my - mx * mxy) / denom, (mxy - mx * my) / denom};
}

FitResult ols_general(const PairedDataset& pairs, const ParametricModel& model, const OptimizerConfig& opt_cfg) {
  pairs.validate();
  const std::size_t n = pairs.size();
  const std::size_t N = model.param_dim();
  for (std::size_t i = 0; i < n; ++i) {
    require(pairs.inputs[i].size() == model.input_dim() && pairs.outputs[i].size() == model.output_dim(),
            "ols_general: data dimensions do not match the model");
  }

  if (model.linear_in_params()) {
    Eigen::MatrixXd X(n, N);
    Eigen::VectorXd y(n);
    Vector row(N);
    for (std::size_t i = 0; i < n; ++i) {
      model.design_row(pairs.inputs[i], row);
      for (std::size_t j = 0; j < N; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
      y(static_cast<Eigen::Index>(i)) = pairs.outputs[i][0];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (static_cast<std::size_t>(qr.rank()) < N) {
      throw DataError("ols_general: design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                      std::to_string(N) + " parameters)");
    }
    const Eigen::VectorXd coef = qr.solve(y);
    FitResult result;
    result.alpha_hat.assign(coef.data(), coef.data() + coef.size());
    result.objective_at_min = (X * coef - y).squaredNorm();
    result.converged = true;
    result.warm_start = result.alpha_hat;
    return result;
  }

  const ScalarFunction sse = [&](std::span<const double> alpha) {
    Vector pred(model.output_dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      model.eval_into(alpha, pairs.inputs[i], pred);
      for (std::size_t j = 0; j < pred.size(); ++j) {
        const double d = pairs.outputs[i][j] - pred[j];
        acc += d * d;
      }
    }
    return acc;
  };
  return nelder_mead(sse, Vector(N, 0.0), opt_cfg);
}

LineCoefficients deming_line(std::span<const double> xs, std::span<const double> ys, double sigma_eta,
                             double sigma_eps) {
  require_line_points(xs, ys, "deming_line");
  require(sigma_eta > 0.0 && sigma_eps > 0.0, "deming_line: sigmas must be positive");
  const double L = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= L;
  my /= L;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  sxx /= L;
  syy /= L;
  sxy /= L;
  if (sxy == 0.0) throw DataError("deming_line: s_xy = 0, slope formula is singular");
  const double delta = (sigma_eps * sigma_eps) / (sigma_eta * sigma_eta);
  const double a = syy - delta * sxx;
  const double slope = (a + std::sqrt(a * a + 4.0 * delta * sxy * sxy)) / (2.0 * sxy);
  return {my - slope * mx, slope};
}

double deming_sum_of_squares(std::span<const double> xs, std::span<const double> ys, double sigma_eta,
                             double sigma_eps, double alpha1, double alpha2) {
  require_line_points(xs, ys, "deming_sum_of_squares");
  const double V = alpha2 * alpha2 * sigma_eta * sigma_eta + sigma_eps * sigma_eps;
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = alpha1 + alpha2 * xs[i] - ys[i];
    acc += d * d;
  }
  return acc / (2.0 * V);
}

double integrated_deming_penalty(double alpha2, double sigma_eta, double sigma_eps, std::size_t L) {
  require(sigma_eta > 0.0 && sigma_eps > 0.0, "integrated_deming_penalty: sigmas must be positive");
  return 0.5 * static_cast<double>(L) * std::log(alpha2 * alpha2 * sigma_eta * sigma_eta + sigma_eps * sigma_eps);
}

PairedDataset impute_pairs(const GroupedDataset& ds, ImputationStrategy strategy) {
  if (strategy == ImputationStrategy::AllPairs) return all_cross_pairs(ds);
  PairedDataset out;
  for (const Group& g : ds.groups()) {
    if (g.H() == 1 && g.L() == 1) {
      out.inputs.push_back(g.inputs[0]);
      out.outputs.push_back(g.outputs[0]);
      out.input_densities.push_back(g.input_densities[0]);
      out.output_densities.push_back(g.output_densities[0]);
      continue;
    }
    Vector mx(ds.input_dim(), 0.0), my(ds.output_dim(), 0.0);
    for (const auto& x : g.inputs) {
      for (std::size_t d = 0; d < mx.size(); ++d) mx[d] += x[d] / static_cast<double>(g.H());
    }
    for (const auto& y : g.outputs) {
      for (std::size_t d = 0; d < my.size(); ++d) my[d] += y[d] / static_cast<double>(g.L());
    }
    out.inputs.push_back(std::move(mx));
    out.outputs.push_back(std::move(my));
    out.input_densities.push_back(g.input_densities[0]);
    out.output_densities.push_back(g.output_densities[0]);
  }
  return out;
}

FitResult imputation_fit(const GroupedDataset& ds, const ParametricModel& model, ImputationStrategy strategy,
                         const OptimizerConfig& opt_cfg) {
  return ols_general(impute_pairs(ds, strategy), model, opt_cfg);
}

}  // namespace eivfit
