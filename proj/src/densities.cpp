#include "eivfit/densities.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace eivfit {

namespace {

void require_positive(const Vector& v, const char* what) {
  require(!v.empty(), std::string(what) + ": dimension must be positive");
  for (double x : v) {
    require(std::isfinite(x) && x > 0.0, std::string(what) + " must be strictly positive and finite");
  }
}

}  // namespace

ErrorDensity ErrorDensity::gaussian(Vector sigma) {
  require_positive(sigma, "gaussian sigma");
  const std::size_t dim = sigma.size();
  return ErrorDensity(DensityKind::Gaussian, dim, std::move(sigma));
}

ErrorDensity ErrorDensity::uniform(Vector half_width) {
  require_positive(half_width, "uniform half-width");
  const std::size_t dim = half_width.size();
  return ErrorDensity(DensityKind::Uniform, dim, std::move(half_width));
}

ErrorDensity ErrorDensity::point_mass(std::size_t dim) {
  require(dim > 0, "point mass: dimension must be positive");
  return ErrorDensity(DensityKind::PointMass, dim, {});
}

ErrorDensity ErrorDensity::with_scale(Vector scale) const {
  switch (kind_) {
    case DensityKind::Gaussian:
      require(scale.size() == dim_, "with_scale: dimension mismatch");
      return gaussian(std::move(scale));
    case DensityKind::Uniform:
      require(scale.size() == dim_, "with_scale: dimension mismatch");
      return uniform(std::move(scale));
    case DensityKind::PointMass:
      return *this;
  }
  return *this;
}

double ErrorDensity::log_eval(std::span<const double> s) const {
  require(s.size() == dim_, "density evaluation: dimension mismatch");
  switch (kind_) {
    case DensityKind::Gaussian: {
      double acc = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double z = s[i] / scale_[i];
        acc -= 0.5 * z * z + std::log(scale_[i]) + kLogSqrt2Pi;
      }
      return acc;
    }
    case DensityKind::Uniform: {
      double acc = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        if (std::abs(s[i]) > scale_[i]) return -std::numeric_limits<double>::infinity();
        acc -= std::log(2.0 * scale_[i]);
      }
      return acc;
    }
    case DensityKind::PointMass:
      throw SiftingRequired();
  }
  return 0.0;
}

double ErrorDensity::eval(std::span<const double> s) const {
  return std::exp(log_eval(s));
}

double ErrorDensity::support_radius(std::size_t i, double gaussian_sigmas) const {
  require(i < dim_, "support_radius: coordinate out of range");
  switch (kind_) {
    case DensityKind::Gaussian: return gaussian_sigmas * scale_[i];
    case DensityKind::Uniform: return scale_[i];
    case DensityKind::PointMass: return 0.0;
  }
  return 0.0;
}

void ErrorDensity::sample_into(Rng& rng, std::span<double> out) const {
  require(out.size() == dim_, "density sample: dimension mismatch");
  switch (kind_) {
    case DensityKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t i = 0; i < dim_; ++i) out[i] = scale_[i] * normal(rng);
      break;
    }
    case DensityKind::Uniform: {
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (std::size_t i = 0; i < dim_; ++i) out[i] = scale_[i] * unit(rng);
      break;
    }
    case DensityKind::PointMass:
      for (auto& v : out) v = 0.0;
      break;
  }
}

std::vector<Vector> ErrorDensity::sample(Rng& rng, std::size_t n) const {
  std::vector<Vector> draws(n, Vector(dim_));
  for (auto& d : draws) sample_into(rng, d);
  return draws;
}

void DensityParamBounds::validate(std::size_t input_dim, std::size_t output_dim) const {
  require(lower.input_scales.size() == input_dim && upper.input_scales.size() == input_dim,
          "density bounds: input scale length must equal the input dimension");
  require(lower.output_scales.size() == output_dim && upper.output_scales.size() == output_dim,
          "density bounds: output scale length must equal the output dimension");
  auto check = [](const Vector& lo, const Vector& hi) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      require(lo[i] > 0.0 && std::isfinite(lo[i]), "density bounds: lower bounds must be strictly positive");
      require(hi[i] >= lo[i] && std::isfinite(hi[i]), "density bounds: upper bound below lower bound");
    }
  };
  check(lower.input_scales, upper.input_scales);
  check(lower.output_scales, upper.output_scales);
}

bool DensityParamBounds::contains(const DensityParams& p) const {
  auto inside = [](const Vector& v, const Vector& lo, const Vector& hi) {
    if (v.size() != lo.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (lo[i] == hi[i]) {
        if (v[i] != lo[i]) return false;
      } else if (!(v[i] > lo[i] && v[i] < hi[i])) {
        return false;
      }
    }
    return true;
  };
  return inside(p.input_scales, lower.input_scales, upper.input_scales) &&
         inside(p.output_scales, lower.output_scales, upper.output_scales);
}

}  // namespace eivfit
