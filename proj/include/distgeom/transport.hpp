#pragma once

#include "distgeom/chart.hpp"
#include "distgeom/kernels.hpp"

#include "json.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace distgeom {

/// Torsion-free background connection with coefficients gamma^a_{bc}(x),
/// stored as a (1,2) field (flat index (a * n + b) * n + c).
class BackgroundConnection {
 public:
  explicit BackgroundConnection(TensorField gamma, std::string label = {});
  static BackgroundConnection flat(const Chart& chart);
  /// Constant coefficients; `gamma` has n^3 entries and must be symmetric in
  /// the lower pair.
  static BackgroundConnection constant(const Chart& chart, std::vector<double> gamma);

  const TensorField& field() const { return gamma_; }
  int dim() const { return gamma_.dim(); }
  const std::string& label() const { return label_; }
  bool is_flat() const { return flat_; }
  /// gamma^a_{bc}(x) into `out` (n^3 entries).
  void evaluate(const Point& x, std::span<double> out) const { gamma_.evaluate(x, out); }
  /// Largest |gamma^a_bc - gamma^a_cb| over a sample grid of the chart.
  double symmetry_defect(int samples_per_axis = 5) const;

 private:
  TensorField gamma_;
  std::string label_;
  bool flat_ = false;
};

/// Two-point matrix field (x, y) -> M^a_b(x, y).
using TwoPointFn = std::function<Mat(const Point& x, const Point& y)>;

/// Closed-form map phi into flat coordinates with first and second
/// derivatives. The frame F = D phi defines a flat torsion-free connection
/// gamma^a_bc = (F^-1)^a_k d_b d_c phi^k whose parallel transport is
/// F(x)^-1 F(y).
struct FlatteningMap {
  std::function<Point(const Point&)> phi;
  std::function<Mat(const Point&)> jacobian;
  /// d_c (D phi), one matrix per c.
  std::function<std::vector<Mat>(const Point&)> hessian;
  /// d_c d_d (D phi) at index c * n + d; empty means zero.
  std::function<std::vector<Mat>(const Point&)> third;
  std::string label;

  /// phi(x) = x + s * (x_2^2, x_1^2, ...): component i gets s * x_{i+1}^2
  /// (cyclically).
  static FlatteningMap quadratic_shear(int dim, double s);
  BackgroundConnection connection(const Chart& chart) const;
};

struct ShootingOptions {
  int steps_per_unit = 64;
  int min_steps = 4;
  /// Multiplies the step count (oracle comparisons use 2, 4, ...).
  int refinement = 1;
  double tolerance = 1e-10;
  int max_iterations = 25;
};

/// Geodesic of gamma from `from` to `to` found by shooting, and the parallel
/// transport matrix along it.
struct GeodesicSolution {
  Point initial_velocity;
  /// Maps vectors at `from` to vectors at `to`.
  Mat transport;
  int iterations = 0;
  double endpoint_error = 0.0;
  /// Point at parameter 1/2.
  Point midpoint;
};

/// Throws NoGeodesicError when Newton shooting fails and DomainEscapeError
/// when a trajectory leaves the chart.
GeodesicSolution solve_geodesic(const BackgroundConnection& gamma, const Point& from, const Point& to,
                                const ShootingOptions& opts = {});

/// Upsilon(x, y) for the parallel transport of gamma: vectors at y carried
/// to x, i.e. the transport matrix of the geodesic from y to x. Identity
/// when x == y.
Mat parallel_transport(const BackgroundConnection& gamma, const Point& x, const Point& y,
                       const ShootingOptions& opts = {});

enum class TransportProvenance { identity, parallel_transport, custom };

/// Transport operator Upsilon^a_b(x, y): maps vectors at y to vectors at x
/// and equals the identity on the diagonal. Lower indices are transported
/// with Upsilon_b^d(x, y) = Upsilon^d_b(y, x).
class TransportOperator {
 public:
  static TransportOperator identity(const Chart& chart);
  /// Parallel transport of gamma by geodesic shooting at every call.
  static TransportOperator parallel(const Chart& chart, const BackgroundConnection& gamma,
                                    ShootingOptions opts = {});
  /// Closed-form parallel transport of the flat connection of `map`:
  /// Upsilon(x, y) = F(x)^-1 F(y) with F = D phi.
  static TransportOperator flat_frame(const Chart& chart, const FlatteningMap& map);
  static TransportOperator custom(const Chart& chart, TwoPointFn eval, std::string label);

  const Chart& chart() const { return *chart_; }
  int dim() const { return chart_->dim(); }
  /// Exactly the identity when x == y.
  Mat operator()(const Point& x, const Point& y) const;
  TransportProvenance provenance() const { return provenance_; }
  const std::string& label() const { return label_; }
  bool is_identity() const { return frame_kind_ == FrameKind::identity; }
  /// True when Upsilon(x, y) = F(x)^-1 F(y) for a known frame F.
  bool has_frame() const { return frame_kind_ != FrameKind::none; }
  /// Frame F(x) and its derivatives (identity frame: I, 0, 0).
  Mat frame(const Point& x) const;
  std::vector<Mat> frame_d1(const Point& x) const;
  std::vector<Mat> frame_d2(const Point& x) const;
  const std::optional<BackgroundConnection>& connection() const { return connection_; }

  /// Recorded invertibility radius (see estimate_invertibility_radius); 0
  /// until estimated.
  double invertibility_radius() const { return invertibility_radius_; }
  TransportOperator with_invertibility_radius(double r) const;

  TwoPointFn as_function() const;

 private:
  enum class FrameKind { none, identity, map };
  TransportOperator() = default;

  std::shared_ptr<const Chart> chart_;
  TwoPointFn eval_;
  TransportProvenance provenance_ = TransportProvenance::custom;
  std::string label_;
  FrameKind frame_kind_ = FrameKind::none;
  std::shared_ptr<const FlatteningMap> map_;
  std::optional<BackgroundConnection> connection_;
  double invertibility_radius_ = 0.0;
};

/// Two-point matrix field used as a direction for d1 (an element of the
/// linear space underlying the transport operators).
class TransportPerturbation {
 public:
  TransportPerturbation(int dim, TwoPointFn eval, std::string label, bool vanishes_on_diagonal);
  /// Difference of two operators (always vanishes on the diagonal).
  static TransportPerturbation difference(const TransportOperator& a, const TransportOperator& b);
  /// (x, y) -> b(|y - x|^2) * M with b a fixed smooth bump of radius 1;
  /// vanishes on the diagonal because of the |y - x|^2 factor.
  static TransportPerturbation bump_matrix(const Mat& m);

  int dim() const { return dim_; }
  Mat operator()(const Point& x, const Point& y) const { return eval_(x, y); }
  const std::string& label() const { return label_; }
  bool vanishes_on_diagonal() const { return vanishes_on_diagonal_; }
  const TwoPointFn& function() const { return eval_; }

 private:
  int dim_;
  TwoPointFn eval_;
  std::string label_;
  bool vanishes_on_diagonal_;
};

enum class TransportSlot { first, second, both };

/// L_(X,0) Upsilon = X^c d_{x^c} Upsilon - DX(x) Upsilon,
/// L_(0,X) Upsilon = X^c d_{y^c} Upsilon + Upsilon DX(y), and their sum for
/// `both`. Closed form for frame operators when no step is given; otherwise
/// central differences with step `step` (default 1e-5 * chart diameter).
TransportPerturbation transport_lie_derivative(const TransportOperator& upsilon, const VectorField& x,
                                               TransportSlot slot,
                                               std::optional<double> step = std::nullopt);
TransportPerturbation transport_lie_derivative(const TransportPerturbation& upsilon,
                                               const VectorField& x, TransportSlot slot,
                                               std::optional<double> step = std::nullopt);

/// Family eps -> Upsilon_eps.
using TransportNet = std::function<TransportOperator(double eps)>;

struct AdmissibilityOptions {
  /// Highest total derivative order k + l tested.
  int max_order = 1;
  int samples_per_axis = 3;
  /// Off-diagonal offsets |y - x| as fractions of the largest eps.
  std::vector<double> offsets{0.25, 0.5, 1.0};
  /// Slope tolerance for the bounded verdict.
  double slope_tolerance = 0.2;
};

struct AdmissibilityReport {
  std::vector<double> eps;
  /// sups[k][i]: sup over samples of the order-k derivatives at eps[i].
  std::vector<std::vector<double>> sups;
  std::vector<double> slopes;
  bool bounded = false;
  bool diagonal_exact = false;
  double diagonal_defect = 0.0;
  nlohmann::json to_json() const;
};

/// Samples Upsilon_eps and its mixed x/y partial derivatives up to
/// max_order at points of K and at fixed offsets from the diagonal, over
/// the net. Bounded means no order grows as eps decreases: every fitted
/// log-log slope of the sup against eps is >= -slope_tolerance.
AdmissibilityReport check_admissibility(const TransportNet& net, const Box& k, const EpsNet& eps,
                                        const AdmissibilityOptions& opts = {});

/// Largest probe radius r such that |det Upsilon(x, y)| >= min_det for all
/// sampled x in K and |y - x| <= r.
double estimate_invertibility_radius(const TransportOperator& upsilon, const Box& k,
                                     std::span<const double> radii, double min_det = 1e-3,
                                     int samples_per_axis = 3);

}  // namespace distgeom
