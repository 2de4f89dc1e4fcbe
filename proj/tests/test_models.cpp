#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eivfit/models.hpp"

using namespace eivfit;

TEST_CASE("family shapes") {
  const auto a = ParametricModel::affine_1d();
  CHECK(a.input_dim() == 1);
  CHECK(a.output_dim() == 1);
  CHECK(a.param_dim() == 2);
  const auto k = ParametricModel::affine_kd(3);
  CHECK(k.input_dim() == 3);
  CHECK(k.param_dim() == 4);
  const auto p = ParametricModel::polynomial_1d(3);
  CHECK(p.param_dim() == 4);
  CHECK(p.degree() == 3);
  CHECK(p.linear_in_params());
  CHECK_THROWS_AS(ParametricModel::affine_kd(0), ContractViolation);
}

TEST_CASE("evaluation examples") {
  CHECK(ParametricModel::affine_1d().eval(Vector{0.0, 0.5}, Vector{2.0}) == Vector{1.0});
  CHECK(ParametricModel::affine_kd(2).eval(Vector{0.0, 0.2, 0.4}, Vector{1.0, 1.0})[0] ==
        doctest::Approx(0.6).epsilon(1e-15));
  const auto cubic = ParametricModel::polynomial_1d(3);
  for (double x : {-3.0, 0.0, 0.7, 12.0}) CHECK(cubic.eval(Vector{1.0, 0.0, 0.0, 0.0}, Vector{x})[0] == 1.0);
  CHECK(cubic.eval(Vector{1.0, -2.0, 0.5, 0.25}, Vector{2.0})[0] == doctest::Approx(1.0 - 4.0 + 2.0 + 2.0));
}

TEST_CASE("dimension contract") {
  const auto a = ParametricModel::affine_1d();
  CHECK_THROWS_AS(a.eval(Vector{0.0}, Vector{1.0}), ContractViolation);
  CHECK_THROWS_AS(a.eval(Vector{0.0, 1.0}, Vector{1.0, 2.0}), ContractViolation);
  Vector out(2);
  CHECK_THROWS_AS(a.eval_into(Vector{0.0, 1.0}, Vector{1.0}, out), ContractViolation);
}

TEST_CASE("affine families are linear in alpha") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const auto model = ParametricModel::affine_kd(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a1(4), a2(4), x(3), mix(4);
    for (auto& v : a1) v = n(rng);
    for (auto& v : a2) v = n(rng);
    for (auto& v : x) v = n(rng);
    const double s = n(rng), t = n(rng);
    for (std::size_t i = 0; i < 4; ++i) mix[i] = s * a1[i] + t * a2[i];
    const double lhs = model.eval_scalar(mix, x);
    const double rhs = s * model.eval_scalar(a1, x) + t * model.eval_scalar(a2, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("degree-1 polynomial equals the affine line") {
  const auto poly = ParametricModel::polynomial_1d(1);
  const auto line = ParametricModel::affine_1d();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector a{u(rng), u(rng)};
    const Vector x{u(rng)};
    CHECK(poly.eval(a, x) == line.eval(a, x));
  }
}

TEST_CASE("design rows reproduce evaluation") {
  const auto model = ParametricModel::polynomial_1d(3);
  const Vector a{0.3, -1.0, 0.5, 0.1};
  Vector row(4);
  model.design_row(Vector{1.7}, row);
  double dot = 0.0;
  for (std::size_t i = 0; i < 4; ++i) dot += row[i] * a[i];
  CHECK(dot == doctest::Approx(model.eval_scalar(a, Vector{1.7})).epsilon(1e-14));
}

TEST_CASE("generic hook with vector output") {
  const auto model = ParametricModel::generic(1, 2, 2, [](std::span<const double> a, std::span<const double> x,
                                                          std::span<double> out) {
    out[0] = a[0] * std::sin(x[0]);
    out[1] = a[1] * x[0] * x[0];
  });
  CHECK_FALSE(model.linear_in_params());
  const Vector y = model.eval(Vector{2.0, 3.0}, Vector{0.5});
  CHECK(y[0] == doctest::Approx(2.0 * std::sin(0.5)));
  CHECK(y[1] == doctest::Approx(0.75));
  CHECK(model.eval(Vector{2.0, 3.0}, Vector{0.5}) == y);
}
