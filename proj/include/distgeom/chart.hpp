#pragma once

#include "distgeom/tensor.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace distgeom {

/// Axis-aligned box [lower_1, upper_1] x ... x [lower_n, upper_n].
struct Box {
  Point lower;
  Point upper;

  Box() = default;
  Box(Point lo, Point hi);
  /// Cube of half-width `radius` centred at `center`.
  static Box around(const Point& center, double radius);

  int dim() const { return static_cast<int>(lower.size()); }
  double diameter() const { return (upper - lower).norm(); }
  double max_side() const { return (upper - lower).maxCoeff(); }
  Point center() const { return 0.5 * (lower + upper); }
  /// True when every coordinate is at least `margin` inside the box.
  bool contains(const Point& p, double margin = 0.0) const;
  /// True when `inner` lies in this box (closed inclusion).
  bool contains(const Box& inner) const;
  /// Euclidean distance from p to the box (0 inside).
  double distance_to(const Point& p) const;
  Box shrunk(double margin) const;
};

/// Single coordinate chart: an n-dimensional box plus finitely many excluded
/// points where closed-form fields may be undefined (e.g. a cone apex).
///
/// Densities are always integrated in these chart coordinates with the
/// orientation dx^1 ^ ... ^ dx^n.
class Chart {
 public:
  Chart(Box domain, std::vector<Point> excluded = {});
  /// Convenience: the cube [-half_width, half_width]^n.
  static Chart cube(int dim, double half_width, std::vector<Point> excluded = {});

  int dim() const { return domain_.dim(); }
  const Box& domain() const { return domain_; }
  const std::vector<Point>& excluded_points() const { return excluded_; }
  double diameter() const { return domain_.diameter(); }
  /// Same domain without excluded points.
  Chart without_exclusions() const { return Chart(domain_); }

 private:
  Box domain_;
  std::vector<Point> excluded_;
};

enum class Smoothness { closed_form, regularized, sampled };

/// Value and partial derivatives of a field at one point, up to `order` <= 2.
/// first[c * m + k] = d_c T_k and second[(c * n + d) * m + k] = d_c d_d T_k,
/// where m is the component count.
struct Jet {
  int order = 0;
  std::vector<double> value;
  std::vector<double> first;
  std::vector<double> second;

  void resize(int dim, std::size_t comps, int ord);
  double d1(int c, std::size_t k) const { return first[c * value.size() + k]; }
  double d2(int c, int d, int dim, std::size_t k) const {
    return second[(static_cast<std::size_t>(c) * dim + d) * value.size() + k];
  }
};

/// Smooth evaluator from chart points to component arrays of fixed valence.
///
/// The evaluator writes component_count(n, valence) values into its output
/// span and must be pure: identical inputs give bit-identical outputs.
class TensorField {
 public:
  using Evaluator = std::function<void(const Point&, std::span<double>)>;
  /// Optional exact derivatives: fills a Jet of the requested order.
  using JetEvaluator = std::function<void(const Point&, int, Jet&)>;

  TensorField(Chart chart, Valence valence, Evaluator eval,
              Smoothness smoothness = Smoothness::closed_form, double eps = 0.0,
              JetEvaluator jet = {});

  /// Constant field.
  static TensorField constant(Chart chart, const Tensor& value);
  static TensorField zero(Chart chart, Valence valence);

  Tensor operator()(const Point& x) const;
  void evaluate(const Point& x, std::span<double> out) const { eval_(x, out); }

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  Valence valence() const { return valence_; }
  std::size_t components() const { return component_count(dim(), valence_); }
  Smoothness smoothness() const { return smoothness_; }
  /// Regularization scale; 0 for closed-form fields.
  double eps() const { return eps_; }
  /// Finite-difference step: eps/20 for regularized fields, 1e-5 * diameter
  /// otherwise.
  double default_step() const;

  /// Jet from the exact provider when present, otherwise central
  /// differences: step h for first derivatives, 2h for second derivatives.
  Jet jet(const Point& x, int order, std::optional<double> step = std::nullopt) const;
  bool has_exact_jet() const { return static_cast<bool>(jet_); }

  TensorField with_evaluator(Valence valence, Evaluator eval, JetEvaluator jet = {}) const;

 private:
  Chart chart_;
  Valence valence_;
  Evaluator eval_;
  Smoothness smoothness_;
  double eps_;
  JetEvaluator jet_;
};

/// a * f + b * g on the chart of f. Exact jets are kept when both fields
/// have them; the result is regularized if either input is.
TensorField linear_combination(double a, const TensorField& f, double b, const TensorField& g);
TensorField scaled(const TensorField& f, double s);

/// Central-difference jet of `f` ignoring any exact provider.
Jet fd_jet(const TensorField& f, const Point& x, int order, double h1, double h2);

/// Closed-form smooth vector field with an optional closed-form Jacobian
/// (dX^a/dx^b at row a, column b). Without one the Jacobian comes from central
/// differences.
class VectorField {
 public:
  using Evaluator = std::function<Point(const Point&)>;
  using JacobianFn = std::function<Mat(const Point&)>;

  VectorField(int dim, Evaluator eval, JacobianFn jacobian = {}, std::string label = {});

  static VectorField zero(int dim);
  static VectorField constant(const Point& value);
  /// X(x) = M x + b.
  static VectorField affine(const Mat& m, const Point& b, std::string label = {});

  int dim() const { return dim_; }
  Point operator()(const Point& x) const { return eval_(x); }
  Mat jacobian(const Point& x) const;
  double divergence(const Point& x) const { return jacobian(x).trace(); }
  const std::string& label() const { return label_; }
  bool has_closed_form_jacobian() const { return static_cast<bool>(jacobian_); }

  TensorField as_tensor_field(const Chart& chart) const;

 private:
  int dim_;
  Evaluator eval_;
  JacobianFn jacobian_;
  std::string label_;
};

/// Compactly supported test object of valence (s, r), paired with (r, s)
/// fields. Evaluation outside `support` returns zeros.
class TestDensity {
 public:
  TestDensity(int dim, Valence valence, Box support, TensorField::Evaluator eval,
              std::string label = {});

  /// Scalar density c * b(|x - center| / radius) with b the standard bump
  /// exp(1 - 1/(1 - s^2)); b(0) = 1.
  static TestDensity bump(const Point& center, double radius, double value);
  /// Scalar density equal to `value` on |x - center| <= inner, decaying
  /// smoothly to zero at `outer`.
  static TestDensity plateau(const Point& center, double inner, double outer, double value);
  /// Scalar profile times a fixed component tensor.
  static TestDensity tensor_valued(const TestDensity& scalar_profile, const Tensor& components);

  int dim() const { return dim_; }
  Valence valence() const { return valence_; }
  const Box& support() const { return support_; }
  const std::string& label() const { return label_; }
  Tensor operator()(const Point& x) const;
  void evaluate(const Point& x, std::span<double> out) const;

 private:
  int dim_;
  Valence valence_;
  Box support_;
  TensorField::Evaluator eval_;
  std::string label_;
};

/// Central-difference partial derivative along `direction` (0-based).
/// Error O(step^2). With no step the field's default_step() is used.
/// Throws BoundaryProximityError if the stencil leaves the domain or comes
/// within `step` of an excluded point.
TensorField differentiate(const TensorField& f, int direction,
                          std::optional<double> step = std::nullopt);

/// Gradient of `f` as a field of valence (r, s+1); the new lower slot is
/// last. Uses the exact jet when the field has one.
TensorField gradient(const TensorField& f, std::optional<double> step = std::nullopt);

/// Ordinary Lie derivative of a smooth tensor field:
/// X^c d_c T - sum_upper T^{..c..} d_c X^a + sum_lower T_{..c..} d_b X^c.
TensorField lie_derivative(const TensorField& f, const VectorField& x,
                           std::optional<double> step = std::nullopt);

/// Throws BoundaryProximityError when `x +- step` leaves the chart or lands
/// within `step` of an excluded point.
void check_stencil(const Chart& chart, const Point& x, double step);

}  // namespace distgeom
