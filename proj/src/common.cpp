#include "eivfit/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eivfit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double log_sum_exp(std::span<const double> values) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return neg_inf;
  const double peak = *std::max_element(values.begin(), values.end());
  if (peak == neg_inf) return neg_inf;
  if (std::isinf(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

}  // namespace eivfit
