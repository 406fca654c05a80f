#pragma once

#include "distgeom/chart.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace distgeom {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule of the given order (1 <= order <= 64). Thread-safe.
const GaussRule& gauss_legendre(int order);

/// Composite one-dimensional rule: nodes, weights and the index of the cell
/// each node belongs to.
struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<int> cell;
  /// Cell boundaries, size = number of cells + 1.
  std::vector<double> edges;
};

/// Splits [a, b] at the breakpoints that fall strictly inside and puts
/// `cells_per_segment` Gauss cells of `order` nodes on every segment.
/// Breakpoints closer than 1e-12 * (b - a) to an existing edge are ignored.
AxisRule composite_rule(double a, double b, std::span<const double> breaks, int cells_per_segment,
                        int order);

/// Axis-aligned plane x^axis = value (a kink or jump locus of a rough field).
struct Plane {
  int axis = 0;
  double value = 0.0;
  bool operator==(const Plane&) const = default;
};

/// Duffy-type rule for a cell with an integrable singularity at the corner
/// `corner` (one of its vertices): the cell is cut into n pyramids with apex
/// at the corner and each pyramid is mapped from the unit cube, which cancels
/// a |y - corner|^(1-n) singularity. Calls visit(y, weight) per node.
void duffy_rule(const Box& cell, const Point& corner, int order,
                const std::function<void(const Point&, double)>& visit);

using ScalarFn = std::function<double(const Point&)>;

/// Tensor-product Gauss-Legendre quadrature of `order` nodes per axis on a
/// uniform grid of `cells` cells per axis. Throws IntegrationPoisonedError on
/// a non-finite sample.
double integrate(const ScalarFn& f, const Box& box, int order, int cells = 1);
/// Scalar TensorField overload.
double integrate(const TensorField& f, const Box& box, int order, int cells = 1);

/// Options for integrals whose integrand varies on a small scale near a few
/// points or planes (regularized singular fields).
struct GradedOptions {
  int order = 8;
  /// Smallest cell side; cells near a focus are refined down to this size.
  double min_cell = 1e-2;
  /// A cell is split when its distance to a focus is below grading * side.
  double grading = 1.0;
  /// Initial uniform cells per axis before grading.
  int base_cells = 2;
  std::vector<Point> focus_points;
  std::vector<Plane> focus_planes;
  /// Boxes whose faces are graded like planes, but only near the face.
  std::vector<Box> focus_boxes;
  /// Smallest side toward box faces; 0 means min_cell.
  double box_min_cell = 0.0;
};

/// Cells of a graded decomposition of `root`. The root is first cut at the
/// coordinates of every focus point and plane that lies inside it, so no
/// cell interior contains a focus coordinate.
std::vector<Box> graded_cells(const Box& root, const GradedOptions& opts);

/// Visits every node (point, weight) of the graded rule.
void for_each_graded_node(const Box& root, const GradedOptions& opts,
                          const std::function<void(const Point&, double)>& visit);

/// Graded quadrature of a scalar integrand; throws IntegrationPoisonedError.
double integrate_graded(const ScalarFn& f, const Box& root, const GradedOptions& opts);

/// Nodes of a graded rule, materialized once so several integrands can share
/// them (and so per-node work can be distributed over threads).
struct NodeSet {
  std::vector<Point> points;
  std::vector<double> weights;
};
NodeSet graded_nodes(const Box& root, const GradedOptions& opts);

/// Error naming the first non-finite sample; used by every quadrature loop.
[[noreturn]] void throw_poisoned(const Point& x, double value);

}  // namespace distgeom
