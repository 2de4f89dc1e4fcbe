#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "eivfit/common.hpp"

namespace eivfit {

using Rng = std::mt19937_64;

enum class DensityKind { Gaussian, Uniform, PointMass };

/// Evaluating a point mass has no finite answer; objectives must collapse the
/// integral analytically (sifting) instead.
class SiftingRequired : public std::logic_error {
 public:
  SiftingRequired()
      : std::logic_error("point-mass density has no finite value; use the sifting reduction") {}
};

/// Zero-centered observational error law with independent coordinates.
///
/// Gaussian: `scale` holds per-coordinate standard deviations.
/// Uniform: `scale` holds per-coordinate half-widths of the box.
/// PointMass: Dirac at the origin, `scale` is empty.
class ErrorDensity {
 public:
  static ErrorDensity gaussian(Vector sigma);
  static ErrorDensity uniform(Vector half_width);
  static ErrorDensity point_mass(std::size_t dim);

  DensityKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const Vector& scale() const { return scale_; }

  double eval(std::span<const double> s) const;
  /// log of eval(); -inf outside a uniform box.
  double log_eval(std::span<const double> s) const;

  /// Half-extent of the region that carries essentially all the mass along
  /// coordinate `i`: `gaussian_sigmas * sigma` for gaussians, the half-width
  /// for boxes, 0 for a point mass.
  double support_radius(std::size_t i, double gaussian_sigmas) const;

  /// Writes one draw into `out` (length dim()).
  void sample_into(Rng& rng, std::span<double> out) const;
  std::vector<Vector> sample(Rng& rng, std::size_t n) const;

  /// Same kind with a replaced scale vector (used when scales are estimated).
  ErrorDensity with_scale(Vector scale) const;

  bool operator==(const ErrorDensity&) const = default;

 private:
  ErrorDensity(DensityKind kind, std::size_t dim, Vector scale)
      : kind_(kind), dim_(dim), scale_(std::move(scale)) {}

  DensityKind kind_;
  std::size_t dim_;
  Vector scale_;
};

/// Globally shared error scales: beta = sigma_eta per input coordinate,
/// gamma = sigma_eps per output coordinate.
struct DensityParams {
  Vector input_scales;
  Vector output_scales;
};

/// Box constraints for DensityParams; lower bounds must be strictly positive.
/// A coordinate with lower == upper is held fixed.
struct DensityParamBounds {
  DensityParams lower;
  DensityParams upper;

  void validate(std::size_t input_dim, std::size_t output_dim) const;
  /// True when every entry lies strictly inside its (non-degenerate) interval
  /// or equals a degenerate interval's pinned value.
  bool contains(const DensityParams& p) const;
};

}  // namespace eivfit
