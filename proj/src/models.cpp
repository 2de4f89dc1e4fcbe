#include "eivfit/models.hpp"

#include <cassert>

namespace eivfit {

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Affine1D: return "affine-1d";
    case ModelFamily::AffineKD: return "affine-kd";
    case ModelFamily::Polynomial1D: return "polynomial-1d";
    case ModelFamily::Generic: return "generic";
  }
  return "unknown";
}

ParametricModel ParametricModel::affine_1d() {
  return ParametricModel(ModelFamily::Affine1D, 1, 1, 2, 1, {});
}

ParametricModel ParametricModel::affine_kd(std::size_t k) {
  require(k >= 1, "affine-kd: input dimension must be positive");
  return ParametricModel(ModelFamily::AffineKD, k, 1, k + 1, 1, {});
}

ParametricModel ParametricModel::polynomial_1d(std::size_t degree) {
  return ParametricModel(ModelFamily::Polynomial1D, 1, 1, degree + 1, degree, {});
}

ParametricModel ParametricModel::generic(std::size_t k, std::size_t m, std::size_t n_params, Hook hook) {
  require(k >= 1 && m >= 1 && n_params >= 1, "generic model: dimensions must be positive");
  require(static_cast<bool>(hook), "generic model: evaluation hook is empty");
  return ParametricModel(ModelFamily::Generic, k, m, n_params, 0, std::move(hook));
}

double ParametricModel::eval_scalar(std::span<const double> alpha, std::span<const double> x) const {
  assert(alpha.size() == n_ && x.size() == k_ && m_ == 1);
  switch (family_) {
    case ModelFamily::Affine1D:
      return alpha[0] + alpha[1] * x[0];
    case ModelFamily::AffineKD: {
      double acc = alpha[0];
      for (std::size_t i = 0; i < k_; ++i) acc += alpha[i + 1] * x[i];
      return acc;
    }
    case ModelFamily::Polynomial1D: {
      // Horner
      double acc = alpha[degree_];
      for (std::size_t i = degree_; i-- > 0;) acc = acc * x[0] + alpha[i];
      return acc;
    }
    case ModelFamily::Generic: {
      double out = 0.0;
      hook_(alpha, x, std::span<double>(&out, 1));
      return out;
    }
  }
  return 0.0;
}

void ParametricModel::eval_into(std::span<const double> alpha, std::span<const double> x,
                                std::span<double> out) const {
  require(alpha.size() == n_, "model evaluation: parameter vector has wrong length");
  require(x.size() == k_, "model evaluation: input has wrong dimension");
  require(out.size() == m_, "model evaluation: output buffer has wrong dimension");
  if (family_ == ModelFamily::Generic) {
    hook_(alpha, x, out);
  } else {
    out[0] = eval_scalar(alpha, x);
  }
}

Vector ParametricModel::eval(std::span<const double> alpha, std::span<const double> x) const {
  Vector out(m_);
  eval_into(alpha, x, out);
  return out;
}

void ParametricModel::design_row(std::span<const double> x, std::span<double> row) const {
  require(linear_in_params(), "design_row: generic models are not linear in their parameters");
  require(x.size() == k_ && row.size() == n_, "design_row: dimension mismatch");
  row[0] = 1.0;
  if (family_ == ModelFamily::Polynomial1D) {
    for (std::size_t i = 1; i < n_; ++i) row[i] = row[i - 1] * x[0];
  } else {
    for (std::size_t i = 0; i < k_; ++i) row[i + 1] = x[i];
  }
}

}  // namespace eivfit
