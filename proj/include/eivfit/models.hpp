#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "eivfit/common.hpp"

namespace eivfit {

enum class ModelFamily { Affine1D, AffineKD, Polynomial1D, Generic };

std::string to_string(ModelFamily family);

/// Parametric regression hypothesis M(x; alpha): R^k -> R^m.
///
/// Parameter layout follows the usual convention: alpha[0] is the intercept,
/// alpha[n + 1] multiplies x[n] (affine) or x^(n + 1) (polynomial).
class ParametricModel {
 public:
  /// Pure evaluation hook for the generic family: writes M(x; alpha) into `out`.
  using Hook = std::function<void(std::span<const double> alpha, std::span<const double> x,
                                  std::span<double> out)>;

  static ParametricModel affine_1d();
  static ParametricModel affine_kd(std::size_t k);
  static ParametricModel polynomial_1d(std::size_t degree);
  static ParametricModel generic(std::size_t k, std::size_t m, std::size_t n_params, Hook hook);

  ModelFamily family() const { return family_; }
  std::size_t input_dim() const { return k_; }
  std::size_t output_dim() const { return m_; }
  std::size_t param_dim() const { return n_; }
  std::size_t degree() const { return degree_; }

  /// Affine and polynomial families are linear in alpha and admit normal equations.
  bool linear_in_params() const { return family_ != ModelFamily::Generic; }

  Vector eval(std::span<const double> alpha, std::span<const double> x) const;
  void eval_into(std::span<const double> alpha, std::span<const double> x, std::span<double> out) const;

  /// Fast path for m == 1 families; no dimension checks beyond debug asserts.
  double eval_scalar(std::span<const double> alpha, std::span<const double> x) const;

  /// Regressor row for linear-in-parameter families: M(x; alpha) = row . alpha.
  void design_row(std::span<const double> x, std::span<double> row) const;

 private:
  ParametricModel(ModelFamily family, std::size_t k, std::size_t m, std::size_t n, std::size_t degree,
                  Hook hook)
      : family_(family), k_(k), m_(m), n_(n), degree_(degree), hook_(std::move(hook)) {}

  ModelFamily family_;
  std::size_t k_;
  std::size_t m_;
  std::size_t n_;
  std::size_t degree_;
  Hook hook_;
};

}  // namespace eivfit
