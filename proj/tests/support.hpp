#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "eivfit/dataset.hpp"
#include "eivfit/densities.hpp"

namespace testing {

using eivfit::ErrorDensity;
using eivfit::Group;
using eivfit::GroupedDataset;
using eivfit::Vector;

inline double normal_pdf(double z, double sigma = 1.0) {
  return std::exp(-0.5 * (z / sigma) * (z / sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Adaptive Gauss-Kronrod on [a, b], split at the given interior points.
template <typename F>
double integrate(F f, double a, double b, std::vector<double> breaks = {}) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(a, breaks[i]);
    const double hi = std::min(b, breaks[i + 1]);
    if (hi <= lo) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 12, 1e-13);
  }
  return total;
}

// Random grouped 1D gaussian line instance with shared scales.
inline GroupedDataset random_line_instance(std::mt19937_64& rng, double sigma_eta, double sigma_eps,
                                           std::size_t max_group = 3, std::size_t max_total = 12) {
  std::uniform_int_distribution<std::size_t> size(1, max_group);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<Group> groups;
  std::size_t used = 0;
  while (true) {
    const std::size_t h = size(rng);
    const std::size_t l = size(rng);
    if (used + std::max(h, l) > max_total) break;
    used += std::max(h, l);
    Group g;
    for (std::size_t i = 0; i < h; ++i) {
      g.inputs.push_back({coord(rng)});
      g.input_densities.push_back(ErrorDensity::gaussian({sigma_eta}));
    }
    for (std::size_t i = 0; i < l; ++i) {
      g.outputs.push_back({0.5 * coord(rng) + noise(rng)});
      g.output_densities.push_back(ErrorDensity::gaussian({sigma_eps}));
    }
    groups.push_back(std::move(g));
  }
  return GroupedDataset(std::move(groups));
}

inline GroupedDataset paired_line(const std::vector<double>& xs, const std::vector<double>& ys, const ErrorDensity& in,
                                  const ErrorDensity& out) {
  std::vector<Group> groups;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    groups.push_back(Group{{{xs[i]}}, {{ys[i]}}, {in}, {out}});
  }
  return GroupedDataset(std::move(groups));
}

}  // namespace testing

namespace testing {

// Per-pair form of a group's likelihood for 1D line data: the mean over all
// (input, output) pairs of the integral of f_in(x_h - s) f_out(y_l - a1 - a2 s).
inline double double_sum_group_likelihood(const Group& g, double a1, double a2) {
  double total = 0.0;
  for (std::size_t h = 0; h < g.H(); ++h) {
    const ErrorDensity& din = g.input_densities[h];
    const double x = g.inputs[h][0];
    const double radius = din.kind() == eivfit::DensityKind::Gaussian ? 14.0 * din.scale()[0] : din.scale()[0];
    for (std::size_t l = 0; l < g.L(); ++l) {
      const ErrorDensity& dout = g.output_densities[l];
      const double y = g.outputs[l][0];
      std::vector<double> breaks;
      if (dout.kind() == eivfit::DensityKind::Uniform && a2 != 0.0) {
        breaks.push_back((y - dout.scale()[0] - a1) / a2);
        breaks.push_back((y + dout.scale()[0] - a1) / a2);
      }
      auto integrand = [&](double s) {
        return din.eval(Vector{x - s}) * dout.eval(Vector{y - a1 - a2 * s});
      };
      total += integrate(integrand, x - radius, x + radius, breaks);
    }
  }
  return total / static_cast<double>(g.H() * g.L());
}

}  // namespace testing
