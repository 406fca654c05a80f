#pragma once

#include "distgeom/chart.hpp"
#include "distgeom/quadrature.hpp"

#include "json.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace distgeom {

/// One-dimensional mollifier rho(t) = P(t^2) exp(-1/(1 - t^2)) on (-1, 1).
///
/// P is the even polynomial of lowest degree that makes the integral 1 and
/// the moments of order 1..q vanish (odd moments vanish by symmetry).
class MollifierProfile {
 public:
  static MollifierProfile make(int q);
  /// Rebuilds a profile from its JSON record; the coefficients are checked
  /// against a fresh solve.
  static MollifierProfile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int moment_order() const { return q_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  double operator()(double t) const { return value(t, 0); }
  /// d^k rho / dt^k for k <= 2.
  double value(double t, int derivative) const;
  /// Writes rho, rho', rho'' at t.
  void values(double t, double out[3]) const;

  /// Exact moment int t^k rho(t) dt (k <= kMaxMoment).
  double moment(int k) const { return moments_[k]; }
  /// int rho^(d)(t) p(t) dt for a polynomial p given by monomial
  /// coefficients, by parts: (-1)^d int rho p^(d).
  double derivative_moment(int d, std::span<const double> poly) const;

  static constexpr int kMaxMoment = 40;

 private:
  int q_ = 0;
  std::vector<double> coeffs_;
  std::vector<double> moments_;
};

/// Maps (x, eps, y) to the density omega_{x,eps}(y).
using KernelEval = std::function<double(const Point& x, double eps, const Point& y)>;
/// Box containing the support of omega_{x,eps}.
using KernelSupport = std::function<Box(const Point& x, double eps)>;

/// Smoothing kernel family omega_{x,eps}. The default family is the product
/// eps^-n prod_i rho((y_i - x_i) / eps), supported in the cube of half-width
/// eps around x (so inside the ball of radius eps sqrt(n)).
class SmoothingKernelFamily {
 public:
  static SmoothingKernelFamily product(int dim, const MollifierProfile& profile);
  /// Arbitrary family; unit mass is the caller's responsibility.
  SmoothingKernelFamily(int dim, KernelEval eval, KernelSupport support, std::string label,
                        int moment_order = 0);

  int dim() const { return dim_; }
  double operator()(const Point& x, double eps, const Point& y) const { return eval_(x, eps, y); }
  Box support(const Point& x, double eps) const { return support_(x, eps); }
  /// Half-width of the support box in units of eps.
  double support_factor() const { return 1.0; }
  int moment_order() const { return q_; }
  const std::string& label() const { return label_; }
  /// Non-null for product kernels (enables the separable quadrature and
  /// exact x-derivatives).
  const MollifierProfile* profile() const { return profile_.get(); }
  const KernelEval& eval() const { return eval_; }
  const KernelSupport& support_fn() const { return support_; }

 private:
  int dim_;
  KernelEval eval_;
  KernelSupport support_;
  std::string label_;
  int q_;
  std::shared_ptr<const MollifierProfile> profile_;
};

/// Zero-mass kernel-shaped family (a test direction for d2).
class KernelPerturbation {
 public:
  KernelPerturbation(int dim, KernelEval eval, KernelSupport support, std::string label);

  int dim() const { return dim_; }
  double operator()(const Point& x, double eps, const Point& y) const { return eval_(x, eps, y); }
  Box support(const Point& x, double eps) const { return support_(x, eps); }
  const std::string& label() const { return label_; }
  const KernelEval& eval() const { return eval_; }
  const KernelSupport& support_fn() const { return support_; }

  /// Perturbation rho_pert built from the derivative of the product kernel
  /// along `axis`: eps^-n * d/dt_axis prod rho(t_i). Integral zero, bounded
  /// in L1 uniformly in eps after the eps factor.
  static KernelPerturbation axis_derivative(int dim, const MollifierProfile& profile, int axis);
  /// Difference of two unit-mass families.
  static KernelPerturbation difference(const SmoothingKernelFamily& a, const SmoothingKernelFamily& b);

 private:
  int dim_;
  KernelEval eval_;
  KernelSupport support_;
  std::string label_;
};

/// Geometric net eps_k = eps0 * ratio^k, k = 0..levels-1.
struct EpsNet {
  double eps0 = 0.05;
  double ratio = 0.5;
  int levels = 8;

  std::vector<double> values() const;
  double smallest() const;
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parts of the kernel Lie derivative L^SK_X omega.
struct KernelLieDerivative {
  /// d/dy^c (X^c(y) omega_x(y)): the Lie derivative of omega_x as a density.
  KernelPerturbation density_part;
  /// X^c(y) d omega_x / dy^c alone (the density part without div X).
  KernelPerturbation advective_part;
  /// X^c(x) d omega_x / dx^c: the derivative through the base point.
  KernelPerturbation base_point_part;
  /// density_part + base_point_part.
  KernelPerturbation total;
};

/// Closed-form derivatives for product kernels, central differences
/// (step 1e-4 * eps) otherwise.
KernelLieDerivative kernel_lie_derivative(const SmoothingKernelFamily& omega, const VectorField& x);
KernelLieDerivative kernel_lie_derivative(const KernelPerturbation& omega, const VectorField& x);

/// Per-axis factors of a product kernel on a one-dimensional rule.
///
/// For node j with t_j = (y_j - x) / eps, w[d][j] approximates the weight of
/// d^d/dx^d [eps^-1 rho((y - x)/eps)] in y-integration. With
/// moment_degree >= 0 the weights are corrected (least-norm) so that they
/// integrate Legendre polynomials in t up to that degree exactly.
struct AxisKernelWeights {
  std::vector<double> w[3];
};
AxisKernelWeights axis_kernel_weights(const MollifierProfile& profile, const AxisRule& rule,
                                      double x, double eps, int max_derivative, int moment_degree);

}  // namespace distgeom
