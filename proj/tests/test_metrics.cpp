#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eivfit/baselines.hpp"
#include "eivfit/metrics.hpp"
#include "eivfit/simulate.hpp"

using namespace eivfit;

namespace {

RSquaredDeltaInput line_input(const std::vector<double>& xs, const std::vector<double>& ys, double b,
                              double sigma_delta) {
  RSquaredDeltaInput in;
  in.X = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  in.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  in.b = Eigen::VectorXd::Constant(1, b);
  in.sigma_delta = Eigen::MatrixXd::Constant(1, 1, sigma_delta);
  return in;
}

FitResult fit_with(Vector alpha) {
  FitResult r;
  r.alpha_hat = std::move(alpha);
  return r;
}

RSquaredDeltaInput seeded_four_predictor_instance() {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n01(0.0, 1.0);
  const Eigen::Index L = 80, k = 4;
  RSquaredDeltaInput in;
  in.X.resize(L, k);
  in.y.resize(L);
  const Eigen::Vector4d beta(0.8, -0.5, 0.3, 1.1);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) in.X(i, j) = (1.0 + j) * n01(rng);
    in.y(i) = in.X.row(i).dot(beta) + n01(rng);
  }
  in.b = beta;
  in.sigma_delta = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd c = in.X.col(j).array() - in.X.col(j).mean();
    const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(L - 1));
    in.sigma_delta(j, j) = std::pow(0.15 * sd, 2);
  }
  return in;
}

}  // namespace

TEST_CASE("r squared delta examples") {
  const std::vector<double> xs{0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(2.0 * x);
  CHECK(r_squared_delta(line_input(xs, ys, 2.0, 0.0)) == doctest::Approx(1.0));
  CHECK(r_squared_delta(line_input(xs, ys, 0.0, 0.0)) == 0.0);
  CHECK(r_squared_delta(line_input(xs, ys, 5.0, 0.0)) == 1.0);  // capped
  const std::vector<double> flat(xs.size(), 3.0);
  CHECK_THROWS_AS(r_squared_delta(line_input(xs, flat, 1.0, 0.0)), DataError);
}

TEST_CASE("r squared delta shrinks with predictor error") {
  RSquaredDeltaInput in = seeded_four_predictor_instance();
  const Eigen::MatrixXd with_errors = in.sigma_delta;
  in.sigma_delta.setZero();
  const double clean = r_squared_delta(in);
  in.sigma_delta = with_errors;
  const double noisy = r_squared_delta(in);
  CHECK(noisy < clean);
  CHECK(noisy >= 0.0);
  CHECK(clean <= 1.0);

  for (Eigen::Index j = 0; j < 4; ++j) {
    double prev = r_squared_delta(in);
    for (double add : {0.01, 0.1, 1.0, 10.0}) {
      RSquaredDeltaInput bumped = in;
      bumped.sigma_delta(j, j) += add;
      const double v = r_squared_delta(bumped);
      CHECK(v <= prev);
      CHECK(v >= 0.0);
      prev = v;
    }
  }
}

TEST_CASE("r squared delta without predictor error is the classical R squared") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> xs, ys;
  for (int i = 0; i < 60; ++i) {
    xs.push_back(n01(rng));
    ys.push_back(1.0 - 0.7 * xs.back() + 0.5 * n01(rng));
  }
  const LineCoefficients ols = ols_line(xs, ys);
  double ybar = 0.0;
  for (double y : ys) ybar += y / static_cast<double>(ys.size());
  double explained = 0.0, total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    explained += std::pow(ols.intercept + ols.slope * xs[i] - ybar, 2);
    total += std::pow(ys[i] - ybar, 2);
  }
  CHECK(std::abs(r_squared_delta(line_input(xs, ys, ols.slope, 0.0)) - explained / total) < 1e-10);
}

TEST_CASE("r squared delta from paired data uses the input stds") {
  PairedDataset d;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const double x0 = n01(rng), x1 = n01(rng);
    d.inputs.push_back({x0, x1});
    d.outputs.push_back({0.5 + x0 - 2.0 * x1 + 0.3 * n01(rng)});
    d.input_densities.push_back(ErrorDensity::gaussian({0.1, 0.1}));
    d.output_densities.push_back(ErrorDensity::gaussian({0.1}));
  }
  const Vector alpha{0.5, 1.0, -2.0};
  const double clean = r_squared_delta(d, alpha, Vector{0.0, 0.0});
  const double noisy = r_squared_delta(d, alpha, Vector{0.3, 0.3});
  CHECK(noisy < clean);

  RSquaredDeltaInput in;
  in.X.resize(30, 2);
  in.y.resize(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    in.X(i, 0) = d.inputs[i][0];
    in.X(i, 1) = d.inputs[i][1];
    in.y(i) = d.outputs[i][0];
  }
  in.b = Eigen::Vector2d(1.0, -2.0);
  in.sigma_delta = Eigen::Vector2d(0.09, 0.09).asDiagonal();
  CHECK(noisy == doctest::Approx(r_squared_delta(in)).epsilon(1e-14));
  CHECK_THROWS_AS(r_squared_delta(d, Vector{0.5, 1.0}, Vector{0.0, 0.0}), ContractViolation);
}

TEST_CASE("quantile uses linear interpolation between order statistics") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({5.0}, 0.9) == 5.0);
  CHECK(quantile({1.0, 2.0}, 0.0) == 1.0);
  CHECK(quantile({1.0, 2.0}, 1.0) == 2.0);
  CHECK_THROWS_AS(quantile({}, 0.5), ContractViolation);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), ContractViolation);
}

TEST_CASE("residual summary examples") {
  const Vector truth{0.0, 0.5};
  const auto exact = residual_summary({fit_with(truth), fit_with(truth)}, truth);
  for (const auto& c : exact.coordinates) {
    CHECK(c.median == 0.0);
    CHECK(c.iqr == 0.0);
    CHECK(c.outliers.empty());
  }

  const auto spread = residual_summary({fit_with({0.0, -0.5}), fit_with({0.0, 0.5}), fit_with({0.0, 1.5})}, truth);
  const auto& c = spread.coordinates[1];
  CHECK(c.median == 0.0);
  CHECK(c.iqr == doctest::Approx(1.0));
  CHECK(c.q1 == doctest::Approx(-0.5));
  CHECK(c.q3 == doctest::Approx(0.5));

  CHECK_THROWS_AS(residual_summary({}, truth), DataError);
  CHECK_THROWS_AS(residual_summary({fit_with({0.0})}, truth), ContractViolation);
}

TEST_CASE("residual summary whiskers and outliers") {
  std::vector<FitResult> fits;
  for (double v : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 40.0}) fits.push_back(fit_with({v}));
  const auto s = residual_summary(fits, Vector{0.0});
  const auto& c = s.coordinates[0];
  CHECK(c.q1 <= c.median);
  CHECK(c.median <= c.q3);
  CHECK(c.whisker_hi <= c.q3 + 1.5 * c.iqr);
  CHECK(c.whisker_lo >= c.q1 - 1.5 * c.iqr);
  REQUIRE(c.outliers.size() == 1);
  CHECK(c.outliers[0] == 40.0);
}

TEST_CASE("grouping biases the slope") {
  const auto spec3 = ScenarioSpec::preset(ScenarioName::A, 3);
  const auto spec300 = ScenarioSpec::preset(ScenarioName::A, 300);
  const auto r3 = replicate(spec3, 40, ObjectiveKind::GaussLine, IntegrationConfig{}, OptimizerConfig{}, 500);
  const auto r300 = replicate(spec300, 40, ObjectiveKind::GaussLine, IntegrationConfig{}, OptimizerConfig{}, 500);
  REQUIRE(r3.summary.has_value());
  REQUIRE(r300.summary.has_value());
  CHECK(std::abs(r3.summary->coordinates[1].median) > std::abs(r300.summary->coordinates[1].median));
}
