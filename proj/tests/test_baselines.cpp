#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "eivfit/baselines.hpp"
#include "eivfit/objective.hpp"
#include "support.hpp"

using namespace eivfit;

namespace {

// Repeated grid search that shrinks around the best cell; fine for the
// unimodal 1D and 2D criteria used here.
Vector grid_refine(const std::function<double(const Vector&)>& f, Vector center, double half, int rounds) {
  const int n = 40;
  for (int round = 0; round < rounds; ++round) {
    Vector best = center;
    double best_v = f(center);
    if (center.size() == 1) {
      for (int i = -n; i <= n; ++i) {
        const Vector p{center[0] + half * i / n};
        const double v = f(p);
        if (v < best_v) best_v = v, best = p;
      }
    } else {
      for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
          const Vector p{center[0] + half * i / n, center[1] + half * j / n};
          const double v = f(p);
          if (v < best_v) best_v = v, best = p;
        }
      }
    }
    center = best;
    half *= 4.0 / n;
  }
  return center;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void random_cloud(std::uint64_t seed, std::size_t n, double slope, std::vector<double>& xs, std::vector<double>& ys) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.4);
  xs.resize(n);
  ys.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = u(rng) + noise(rng);
    ys[i] = 0.3 + slope * xs[i] + noise(rng);
  }
}

PairedDataset to_pairs(const std::vector<double>& xs, const std::vector<double>& ys, double sigma_eta = 0.2,
                       double sigma_eps = 0.2) {
  PairedDataset p;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    p.inputs.push_back({xs[i]});
    p.outputs.push_back({ys[i]});
    p.input_densities.push_back(ErrorDensity::gaussian({sigma_eta}));
    p.output_densities.push_back(ErrorDensity::gaussian({sigma_eps}));
  }
  return p;
}

}  // namespace

TEST_CASE("ols line examples") {
  const auto exact = ols_line(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 2});
  CHECK(exact.intercept == doctest::Approx(0.0));
  CHECK(exact.slope == doctest::Approx(1.0));
  const auto flat = ols_line(std::vector<double>{-1, 0.5, 4}, std::vector<double>{2.5, 2.5, 2.5});
  CHECK(flat.intercept == doctest::Approx(2.5));
  CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(ols_line(std::vector<double>{1, 1, 1}, std::vector<double>{0, 1, 2}), DataError);
  CHECK_THROWS_AS(ols_line(std::vector<double>{1}, std::vector<double>{0}), ContractViolation);
}

TEST_CASE("ols line matches a grid-refinement minimizer") {
  std::vector<double> xs, ys;
  random_cloud(101, 50, -0.8, xs, ys);
  const auto sse = [&](const Vector& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += std::pow(ys[i] - a[0] - a[1] * xs[i], 2);
    return s;
  };
  const Vector oracle = grid_refine(sse, {0.0, 0.0}, 5.0, 14);
  const auto ols = ols_line(xs, ys);
  CHECK(std::abs(ols.intercept - oracle[0]) < 1e-8);
  CHECK(std::abs(ols.slope - oracle[1]) < 1e-8);
}

TEST_CASE("ols general examples") {
  // Exact hyperplane in three inputs.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  PairedDataset plane;
  const Vector truth{0.5, -1.0, 2.0, 0.25};
  for (int i = 0; i < 20; ++i) {
    const Vector x{u(rng), u(rng), u(rng)};
    plane.inputs.push_back(x);
    plane.outputs.push_back({truth[0] + truth[1] * x[0] + truth[2] * x[1] + truth[3] * x[2]});
    plane.input_densities.push_back(ErrorDensity::gaussian({0.1, 0.1, 0.1}));
    plane.output_densities.push_back(ErrorDensity::gaussian({0.1}));
  }
  const FitResult r = ols_general(plane, ParametricModel::affine_kd(3), OptimizerConfig{});
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(r.alpha_hat[i] == doctest::Approx(truth[i]).epsilon(1e-10));

  // Cubic interpolation through four distinct points.
  const Vector c{1.0, -0.5, 0.2, 0.1};
  std::vector<double> xs{-2.0, -0.5, 1.0, 2.5}, ys;
  for (double x : xs) ys.push_back(c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x);
  const FitResult cubic = ols_general(to_pairs(xs, ys), ParametricModel::polynomial_1d(3), OptimizerConfig{});
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(cubic.alpha_hat[i] - c[i]) < 1e-10);

  // Agreement with the closed-form line.
  std::vector<double> lx, ly;
  random_cloud(7, 40, 0.6, lx, ly);
  const FitResult line = ols_general(to_pairs(lx, ly), ParametricModel::affine_1d(), OptimizerConfig{});
  const auto closed = ols_line(lx, ly);
  CHECK(std::abs(line.alpha_hat[0] - closed.intercept) < 1e-12);
  CHECK(std::abs(line.alpha_hat[1] - closed.slope) < 1e-12);

  // Three points cannot determine a cubic.
  std::vector<double> fx{0.0, 1.0, 2.0}, fy{0.0, 1.0, 8.0};
  CHECK_THROWS_AS(ols_general(to_pairs(fx, fy), ParametricModel::polynomial_1d(3), OptimizerConfig{}), DataError);
}

TEST_CASE("ols general on a generic model uses the simplex search") {
  const auto expo = ParametricModel::generic(1, 1, 2, [](std::span<const double> a, std::span<const double> x,
                                                         std::span<double> y) { y[0] = a[0] * std::exp(a[1] * x[0]); });
  std::vector<double> xs, ys;
  for (int i = 0; i < 15; ++i) {
    xs.push_back(-1.0 + 0.15 * i);
    ys.push_back(1.5 * std::exp(0.7 * xs.back()));
  }
  OptimizerConfig cfg;
  cfg.x_tol = 1e-12;
  cfg.f_tol = 1e-20;
  cfg.max_iters = 20000;
  const FitResult r = ols_general(to_pairs(xs, ys), expo, cfg);
  CHECK(r.alpha_hat[0] == doctest::Approx(1.5).epsilon(1e-5));
  CHECK(r.alpha_hat[1] == doctest::Approx(0.7).epsilon(1e-5));
}

TEST_CASE("deming line examples") {
  const std::vector<double> line{0.0, 1.0, 2.0};
  for (double eps : {0.1, 1.0, 7.0}) CHECK(deming_line(line, line, 1.0, eps).slope == doctest::Approx(1.0));

  // s_xx == s_yy with positive covariance and unit ratio.
  const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> ys{0.0, 2.0, 1.0, 3.0};
  CHECK(deming_line(xs, ys, 0.5, 0.5).slope == doctest::Approx(1.0));

  const std::vector<double> cross_x{-1.0, 1.0, 0.0, 0.0};
  const std::vector<double> cross_y{0.0, 0.0, -1.0, 1.0};
  CHECK_THROWS_AS(deming_line(cross_x, cross_y, 1.0, 1.0), DataError);
  CHECK_THROWS_AS(deming_line(xs, ys, 0.0, 1.0), ContractViolation);
}

TEST_CASE("deming line matches the profiled brute-force minimizer") {
  std::vector<double> xs, ys;
  random_cloud(29, 30, 0.9, xs, ys);
  const double sigma_eta = 0.4;
  const double sigma_eps = sigma_eta * std::sqrt(2.5);
  const double xbar = mean(xs), ybar = mean(ys);
  const auto profiled = [&](const Vector& a) {
    return deming_sum_of_squares(xs, ys, sigma_eta, sigma_eps, ybar - a[0] * xbar, a[0]);
  };
  const Vector oracle = grid_refine(profiled, {0.0}, 20.0, 12);
  const auto d = deming_line(xs, ys, sigma_eta, sigma_eps);
  CHECK(std::abs(d.slope - oracle[0]) < 1e-6);
  CHECK(std::abs(d.intercept - (ybar - oracle[0] * xbar)) < 1e-6);
}

TEST_CASE("deming line approaches ols when input noise vanishes") {
  std::vector<double> xs, ys;
  random_cloud(5, 60, -0.4, xs, ys);
  const auto d = deming_line(xs, ys, 1e-3, 1.0);  // ratio 1e6
  CHECK(std::abs(d.slope - ols_line(xs, ys).slope) < 1e-3);
}

TEST_CASE("deming predictions are invariant to rescaling the inputs") {
  std::vector<double> xs, ys;
  random_cloud(8, 25, 1.3, xs, ys);
  const double c = 3.7;
  std::vector<double> scaled(xs);
  for (double& x : scaled) x *= c;
  const auto d = deming_line(xs, ys, 0.3, 0.5);
  const auto ds = deming_line(scaled, ys, 0.3 * c, 0.5);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs((d.intercept + d.slope * xs[i]) - (ds.intercept + ds.slope * scaled[i])) < 1e-9);
  }
}

TEST_CASE("integrated deming penalty") {
  CHECK(integrated_deming_penalty(0.0, 0.7, 1.0, 10) == 0.0);
  CHECK(integrated_deming_penalty(1.0, 1.0, 1.0, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  double prev = integrated_deming_penalty(0.0, 0.5, 0.3, 7);
  for (double a = 0.25; a < 5.0; a += 0.25) {
    const double v = integrated_deming_penalty(a, 0.5, 0.3, 7);
    CHECK(v == integrated_deming_penalty(-a, 0.5, 0.3, 7));
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("paired gaussian objective splits into sum of squares and penalty") {
  std::vector<double> xs, ys;
  random_cloud(13, 35, 0.5, xs, ys);
  const double se = 0.3, sp = 0.45;
  const auto ds = testing::paired_line(xs, ys, ErrorDensity::gaussian({se}), ErrorDensity::gaussian({sp}));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 10; ++t) {
    const double a1 = u(rng), a2 = u(rng);
    const double total = nll_gaussian_line(ds, se, sp, Vector{a1, a2}).value;
    const double split = deming_sum_of_squares(xs, ys, se, sp, a1, a2);
    CHECK(total - split == doctest::Approx(integrated_deming_penalty(a2, se, sp, xs.size())).epsilon(1e-10));
  }
}

TEST_CASE("imputation examples") {
  const auto g = ErrorDensity::gaussian({0.2});
  const GroupedDataset one({Group{{{0.0}, {2.0}}, {{0.0}, {2.0}}, {g, g}, {g, g}}});
  const PairedDataset mean = impute_pairs(one, ImputationStrategy::GroupMean);
  REQUIRE(mean.size() == 1);
  CHECK(mean.inputs[0][0] == 1.0);
  CHECK(mean.outputs[0][0] == 1.0);
  const PairedDataset all = impute_pairs(one, ImputationStrategy::AllPairs);
  CHECK(all.size() == 4);

  std::vector<double> xs, ys;
  random_cloud(21, 30, 0.5, xs, ys);
  const auto pairs = to_pairs(xs, ys);
  const auto grouped = as_grouped(pairs);
  const auto model = ParametricModel::affine_1d();
  const FitResult direct = ols_general(pairs, model, OptimizerConfig{});
  for (auto strategy : {ImputationStrategy::GroupMean, ImputationStrategy::AllPairs}) {
    const FitResult r = imputation_fit(grouped, model, strategy, OptimizerConfig{});
    CHECK(r.alpha_hat[0] == doctest::Approx(direct.alpha_hat[0]).epsilon(1e-12));
    CHECK(r.alpha_hat[1] == doctest::Approx(direct.alpha_hat[1]).epsilon(1e-12));
  }
}
