#pragma once

#include "distgeom/embedding.hpp"
#include "distgeom/transport.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace distgeom {

/// Pointwise outer product of smooth fields (exact jets propagate by the
/// product rule when both factors have them).
TensorField tensor_product(const TensorField& a, const TensorField& b);
/// Trace of a smooth field over one upper and one lower slot.
TensorField contract(const TensorField& t, int upper_slot, int lower_slot);

/// Outer product per fixed (Upsilon, omega, eps). Variations follow the
/// Leibniz rule over the split of the directions between the factors.
GeneralizedField tensor_product(const GeneralizedField& a, const GeneralizedField& b);
GeneralizedField contract(const GeneralizedField& t, int upper_slot, int lower_slot);

/// Generalized Lie derivative
///   L^_X T = L_X(T(U, w)) - d1 T(U, w)(L^TO_X U) - d2 T(U, w)(L^SK_X w).
/// The d1/d2 terms re-run the representative with the Lie-differentiated
/// transport operator / kernel as an extra direction; this requires T to
/// depend affinely on each slot (ContractViolation otherwise).
GeneralizedField gen_lie_derivative(const GeneralizedField& t, const VectorField& x,
                                    std::optional<double> step = std::nullopt);

/// Finite-difference steps for derivatives of representatives. Unset means
/// eps/20 (first) and eps/10 (second, applied to already differentiated
/// fields) for regularized fields, 1e-5 and 1e-4 times the chart diameter
/// for closed-form ones.
struct DerivativeSteps {
  std::optional<double> first;
  std::optional<double> second;

  double first_for(const TensorField& f) const;
  double second_for(const TensorField& f) const;
};

/// Connection gamma + Gamma^ with a generalized (1,2) correction Gamma^.
struct ConnectionCorrection {
  GeneralizedField gamma_hat;
  BackgroundConnection background;

  /// Zero correction (the background connection itself).
  static ConnectionCorrection none(const Chart& chart, const BackgroundConnection& background);
  /// Correction iota(Gamma - gamma) of a closed-form connection.
  static ConnectionCorrection embedded(const TensorField& gamma_total, const BackgroundConnection& background,
                                       EmbeddingQuadrature quad = {});
};

/// Covariant derivative with the new lower slot last:
///   (nabla T)^{a..}_{b..;c} = d_c T + sum_upper Gamma^a_{dc} T^{..d..}
///                                    - sum_lower Gamma^d_{bc} T_{..d..}
/// with Gamma = gamma + Gamma^ (derivative direction in the last slot).
GeneralizedField covariant_gradient(const GeneralizedField& t, const ConnectionCorrection& conn,
                                    DerivativeSteps steps = {});
/// nabla_Z T = Z^c (nabla T)_{..;c}.
GeneralizedField covariant_derivative(const GeneralizedField& t, const ConnectionCorrection& conn,
                                      const VectorField& z, DerivativeSteps steps = {});
GeneralizedField covariant_derivative(const GeneralizedField& t, const ConnectionCorrection& conn,
                                      const GeneralizedField& z, DerivativeSteps steps = {});

struct InvertibilityWitness {
  std::vector<double> eps;
  std::vector<double> min_abs_det;
  std::vector<double> max_symmetry_defect;
  /// Largest eps of the net from which on every smaller eps passed the floor
  /// (0 if the smallest failed).
  double threshold_eps = 0.0;
  nlohmann::json to_json() const;
};

/// Generalized (0,2) metric with the cofactor inverse.
class GeneralizedMetric {
 public:
  explicit GeneralizedMetric(GeneralizedField g, double det_floor = 1e-8);

  const GeneralizedField& field() const { return g_; }
  double det_floor() const { return det_floor_; }
  int dim() const { return g_.dim(); }
  /// g^{ab} = adj(g)^{ab} / det g; DegenerateMetricError below det_floor.
  GeneralizedField inverse() const;
  /// Scalar sqrt|det g|.
  GeneralizedField volume_factor() const;
  /// Samples |det g| and the symmetry defect over a grid of K for each eps.
  InvertibilityWitness witness(const SmoothingChoice& choice, std::span<const double> eps, const Box& k,
                               int samples_per_axis = 5) const;

 private:
  GeneralizedField g_;
  double det_floor_;
};

/// Gamma^a_bc = 1/2 g^{ad} (g_{bd|c} + g_{cd|b} - g_{bc|d}) with | the
/// covariant derivative of the background. Representatives carry exact
/// first derivatives when the metric representative has exact jets.
ConnectionCorrection levi_civita(const GeneralizedMetric& g, const BackgroundConnection& background,
                                 DerivativeSteps steps = {});

/// Riemann R^a_{bcd} (flat index ((a n + b) n + c) n + d) of the total
/// connection, with R(X, Y)Z^a = R^a_{bcd} Z^b X^c Y^d, and its
/// contractions R_bd = R^a_{bad}, R = g^{bd} R_bd,
/// G_ab = R_ab - 1/2 g_ab R.
struct CurvatureBundle {
  GeneralizedField riemann;
  GeneralizedField ricci;
  GeneralizedField scalar;
  GeneralizedField einstein;
  /// R sqrt|det g|, the scalar density paired with scalar test functions.
  GeneralizedField scalar_density;
};

CurvatureBundle curvature(const ConnectionCorrection& conn, const GeneralizedMetric& g, DerivativeSteps steps = {});

/// Curvature of a smooth metric from its jets (closed-form reference used
/// by tests and by the smooth-metric experiments).
struct PointCurvature {
  std::vector<double> christoffel;
  std::vector<double> riemann;
  std::vector<double> ricci;
  double scalar = 0.0;
  std::vector<double> einstein;
  double volume = 0.0;
};
PointCurvature metric_curvature(const TensorField& g, const Point& x, DerivativeSteps steps = {});

}  // namespace distgeom
