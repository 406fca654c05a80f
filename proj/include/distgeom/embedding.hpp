#pragma once

#include "distgeom/chart.hpp"
#include "distgeom/kernels.hpp"
#include "distgeom/quadrature.hpp"
#include "distgeom/transport.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace distgeom {

/// Point mass coefficient * delta_p.
struct DeltaTerm {
  Point point;
  Tensor coefficient;
};

/// Locally integrable tensor field plus a finite sum of delta terms.
///
/// The integrable part may be singular (but bounded on compacts) at the
/// chart's excluded points and non-smooth across the listed kink planes;
/// quadrature cells are aligned with both.
class RoughTensorField {
 public:
  RoughTensorField(Chart chart, Valence valence, std::string label = {});

  static RoughTensorField loc_integrable(Chart chart, Valence valence, TensorField::Evaluator eval,
                                         std::vector<Plane> kinks = {}, std::string label = {});
  static RoughTensorField from_smooth(const TensorField& f, std::string label = {});
  static RoughTensorField delta(Chart chart, const Point& p, const Tensor& coefficient,
                                std::string label = {});

  RoughTensorField& add_delta(const Point& p, const Tensor& coefficient);
  RoughTensorField scaled(double s) const;
  friend RoughTensorField operator+(const RoughTensorField& a, const RoughTensorField& b);

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  Valence valence() const { return valence_; }
  std::size_t components() const { return component_count(dim(), valence_); }
  const std::string& label() const { return label_; }
  bool has_integrable_part() const { return !parts_.empty(); }
  const std::vector<DeltaTerm>& deltas() const { return deltas_; }
  const std::vector<Plane>& kinks() const { return kinks_; }
  /// Integrable part at y (zeros when there is none).
  void evaluate(const Point& y, std::span<double> out) const;

  /// Reference pairing <T, Psi>: graded quadrature (16 base cells per axis)
  /// of the integrable part plus the delta terms in closed form.
  double pair(const TestDensity& psi, int order = 10, double min_cell = 1e-3) const;

 private:
  Chart chart_;
  Valence valence_;
  std::string label_;
  std::vector<std::pair<double, TensorField::Evaluator>> parts_;
  std::vector<DeltaTerm> deltas_;
  std::vector<Plane> kinks_;
};

/// A choice (Upsilon, omega) of transport operator and kernel family.
struct SmoothingChoice {
  TransportOperator transport;
  SmoothingKernelFamily kernel;
  std::string label;
};

/// Test directions for the differentials d1 (transport) and d2 (kernel).
struct Variation {
  std::vector<TransportPerturbation> transport;
  std::vector<KernelPerturbation> kernel;

  bool empty() const { return transport.empty() && kernel.empty(); }
  std::size_t size() const { return transport.size() + kernel.size(); }
};

struct DependenceTags {
  bool upsilon_dependent = false;
  bool kernel_dependent = false;

  DependenceTags operator|(const DependenceTags& o) const {
    return {upsilon_dependent || o.upsilon_dependent, kernel_dependent || o.kernel_dependent};
  }
};

/// Points and planes near which representatives vary on the scale eps
/// (used to grade pairing quadrature).
struct Focus {
  std::vector<Point> points;
  std::vector<Plane> planes;
  /// Delta locations: the field is supported in the kernel box around them.
  std::vector<Point> deltas;

  Focus merged(const Focus& o) const;
};

/// Representative map (Upsilon, omega, eps) -> smooth field, together with
/// its differentials along finitely many directions.
///
/// vary(choice, eps, V) is the multiple differential of the representative
/// along the transport and kernel directions in V (represent() is the case
/// V empty). Fields whose dependence is not affine per slot throw
/// ContractViolation for non-empty V.
class GeneralizedField {
 public:
  using Realizer = std::function<TensorField(const SmoothingChoice&, double, const Variation&)>;

  GeneralizedField(Chart chart, Valence valence, Realizer realizer, DependenceTags tags,
                   std::string label, Focus focus = {});

  TensorField represent(const SmoothingChoice& choice, double eps) const;
  TensorField vary(const SmoothingChoice& choice, double eps, const Variation& v) const;

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  Valence valence() const { return valence_; }
  std::size_t components() const { return component_count(dim(), valence_); }
  const DependenceTags& tags() const { return tags_; }
  const std::string& label() const { return label_; }
  const Focus& focus() const { return focus_; }
  GeneralizedField relabeled(std::string label) const;

  GeneralizedField scaled(double s) const;
  friend GeneralizedField operator+(const GeneralizedField& a, const GeneralizedField& b);
  friend GeneralizedField operator-(const GeneralizedField& a, const GeneralizedField& b);

 private:
  Chart chart_;
  Valence valence_;
  Realizer realizer_;
  DependenceTags tags_;
  std::string label_;
  Focus focus_;
};

/// Quadrature of the smoothing integral over the kernel support.
struct EmbeddingQuadrature {
  int order = 8;
  /// Gauss cells per kernel support radius (per axis, before splitting at
  /// singular coordinates).
  int cells_per_radius = 4;
  /// Degree of exact polynomial moments enforced on the per-axis kernel
  /// weights; -1 disables the correction.
  int moment_degree = 11;
};

/// The embedding iota: smoothing of a rough field with transport operator
/// Upsilon and kernel omega_eps. Upper indices are transported by
/// Upsilon(x, y), lower ones by Upsilon(y, x); delta terms contribute the
/// transported coefficient times omega_{x,eps}(p).
///
/// Representatives are regularized fields on the chart without its
/// excluded points. For product kernels with a frame transport (identity or
/// flat frame) they carry exact jets: x-derivatives act on the kernel and
/// on the frame, not on the rough field. Query points must keep distance
/// eps * sqrt(n) from the chart boundary (BoundaryProximityError otherwise).
GeneralizedField iota(const RoughTensorField& t, EmbeddingQuadrature quad = {});

/// One evaluation of iota(t) at a fixed choice, without building the
/// GeneralizedField.
TensorField iota_at(const RoughTensorField& t, const SmoothingChoice& choice, double eps,
                    EmbeddingQuadrature quad = {});

/// The constant embedding sigma(T)(Upsilon, omega, eps) = T.
GeneralizedField sigma(const TensorField& t, std::string label = {});

/// Diffeomorphism mu with closed-form inverse and Jacobian.
struct Diffeomorphism {
  std::function<Point(const Point&)> forward;
  std::function<Point(const Point&)> inverse;
  std::function<Mat(const Point&)> jacobian;
  /// Affine maps have exact box images.
  bool affine = false;
  std::string label;

  static Diffeomorphism identity(int dim);
  static Diffeomorphism translation(const Point& b);
  /// x -> L x + b.
  static Diffeomorphism linear(const Mat& l, const Point& b = Point());
};

/// Pushforwards used by the induced action.
SmoothingKernelFamily push_forward(const SmoothingKernelFamily& omega, const Diffeomorphism& mu);
KernelPerturbation push_forward(const KernelPerturbation& omega, const Diffeomorphism& mu);
TransportOperator push_forward(const TransportOperator& upsilon, const Diffeomorphism& mu,
                               const Chart& target);
TransportPerturbation push_forward(const TransportPerturbation& upsilon, const Diffeomorphism& mu);

/// (mu^* T)(Upsilon, omega)(x) = (D mu^-1)^r_s T(mu_* Upsilon, mu_* omega)(mu(x)).
/// `source` is the chart of x; T lives on the target chart.
GeneralizedField pullback_diffeo(const GeneralizedField& t, const Diffeomorphism& mu, const Chart& source);

/// Pullback of a smooth field: (D mu^-1)^r_s T(mu(x)).
TensorField pullback_field(const TensorField& t, const Diffeomorphism& mu, const Chart& source);

}  // namespace distgeom
