#include "distgeom/quadrature.hpp"

#include "distgeom/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

namespace distgeom {

namespace {

GaussRule compute_gauss_legendre(int order) {
  GaussRule r;
  r.nodes.resize(order);
  r.weights.resize(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[order - 1 - i] = x;
    r.weights[i] = w;
    r.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) r.nodes[order / 2] = 0.0;
  return r;
}

constexpr int kMaxOrder = 64;

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 1 || order > kMaxOrder) throw ContractViolation("Gauss-Legendre order out of range");
  static std::array<GaussRule, kMaxOrder + 1> cache;
  static std::array<std::once_flag, kMaxOrder + 1> flags;
  std::call_once(flags[order], [order] { cache[order] = compute_gauss_legendre(order); });
  return cache[order];
}

void throw_poisoned(const Point& x, double value) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite integrand value " << value << " at (";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << ")";
  throw IntegrationPoisonedError(os.str());
}

AxisRule composite_rule(double a, double b, std::span<const double> breaks, int cells_per_segment,
                        int order) {
  if (!(a < b)) throw ContractViolation("composite_rule needs a < b");
  if (cells_per_segment < 1) throw ContractViolation("cells_per_segment must be positive");
  std::vector<double> cuts{a};
  std::vector<double> inner(breaks.begin(), breaks.end());
  std::sort(inner.begin(), inner.end());
  const double guard = 1e-12 * (b - a);
  for (double v : inner)
    if (v > cuts.back() + guard && v < b - guard) cuts.push_back(v);
  cuts.push_back(b);
  const GaussRule& g = gauss_legendre(order);
  AxisRule r;
  r.edges.push_back(a);
  int cell = 0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double h = (cuts[s + 1] - cuts[s]) / cells_per_segment;
    for (int c = 0; c < cells_per_segment; ++c, ++cell) {
      const double lo = cuts[s] + c * h;
      const double hi = c + 1 == cells_per_segment ? cuts[s + 1] : lo + h;
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * (hi - lo);
      for (int k = 0; k < order; ++k) {
        r.nodes.push_back(mid + half * g.nodes[k]);
        r.weights.push_back(half * g.weights[k]);
        r.cell.push_back(cell);
      }
      r.edges.push_back(hi);
    }
  }
  return r;
}

void duffy_rule(const Box& cell, const Point& corner, int order,
                const std::function<void(const Point&, double)>& visit) {
  const int n = cell.dim();
  Point far(n);
  double volume = 1.0;
  for (int i = 0; i < n; ++i) {
    const bool at_lower = std::abs(corner(i) - cell.lower(i)) <= std::abs(corner(i) - cell.upper(i));
    far(i) = at_lower ? cell.upper(i) : cell.lower(i);
    volume *= std::abs(far(i) - corner(i));
  }
  const GaussRule& g = gauss_legendre(order);
  // Unit-interval nodes.
  std::vector<double> t(order), w(order);
  for (int k = 0; k < order; ++k) {
    t[k] = 0.5 * (g.nodes[k] + 1.0);
    w[k] = 0.5 * g.weights[k];
  }
  std::array<int, kMaxDim> idx{};
  Point y(n);
  for (int axis = 0; axis < n; ++axis) {
    // Pyramid whose base is the face x^axis = far(axis); u radial, v on face.
    const int total = static_cast<int>(std::pow(order, n));
    for (int flat = 0; flat < total; ++flat) {
      int f = flat;
      for (int i = 0; i < n; ++i) {
        idx[i] = f % order;
        f /= order;
      }
      const double u = t[idx[0]];
      double weight = w[idx[0]] * std::pow(u, n - 1) * volume;
      int vi = 1;
      for (int i = 0; i < n; ++i) {
        double face;
        if (i == axis) {
          face = far(i);
        } else {
          face = corner(i) + t[idx[vi]] * (far(i) - corner(i));
          weight *= w[idx[vi]];
          ++vi;
        }
        y(i) = corner(i) + u * (face - corner(i));
      }
      visit(y, weight);
    }
  }
}

double integrate(const ScalarFn& f, const Box& box, int order, int cells) {
  if (cells < 1) throw ContractViolation("integrate needs at least one cell");
  const int n = box.dim();
  std::vector<AxisRule> rules;
  for (int i = 0; i < n; ++i) {
    const double h = (box.upper(i) - box.lower(i)) / cells;
    std::vector<double> breaks;
    for (int c = 1; c < cells; ++c) breaks.push_back(box.lower(i) + c * h);
    rules.push_back(composite_rule(box.lower(i), box.upper(i), breaks, 1, order));
  }
  std::array<std::size_t, kMaxDim> idx{};
  Point x(n);
  double sum = 0.0;
  const std::size_t per_axis = rules[0].nodes.size();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= per_axis;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    double w = 1.0;
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = r % per_axis;
      r /= per_axis;
      x(i) = rules[i].nodes[idx[i]];
      w *= rules[i].weights[idx[i]];
    }
    const double v = f(x);
    if (!std::isfinite(v)) throw_poisoned(x, v);
    sum += w * v;
  }
  return sum;
}

double integrate(const TensorField& f, const Box& box, int order, int cells) {
  if (f.components() != 1) throw ContractViolation("integrate needs a scalar field");
  return integrate(
      [&f](const Point& x) {
        double v = 0.0;
        f.evaluate(x, std::span<double>(&v, 1));
        return v;
      },
      box, order, cells);
}

namespace {

double plane_distance(const Box& b, const Plane& p) {
  if (p.value < b.lower(p.axis)) return b.lower(p.axis) - p.value;
  if (p.value > b.upper(p.axis)) return p.value - b.upper(p.axis);
  return 0.0;
}

void refine(const Box& cell, const GradedOptions& opts, std::vector<Box>& out, int depth) {
  const int n = cell.dim();
  std::array<bool, kMaxDim> split{};
  bool any = false;
  if (depth < 60) {
    const double side = cell.max_side();
    for (const Point& p : opts.focus_points) {
      if (side > opts.min_cell && cell.distance_to(p) < opts.grading * side) {
        for (int i = 0; i < n; ++i)
          if (cell.upper(i) - cell.lower(i) > opts.min_cell) split[i] = any = true;
      }
    }
    for (const Plane& pl : opts.focus_planes) {
      const double s = cell.upper(pl.axis) - cell.lower(pl.axis);
      if (s > opts.min_cell && plane_distance(cell, pl) < opts.grading * s) split[pl.axis] = any = true;
    }
    for (const Box& fb : opts.focus_boxes)
      for (int i = 0; i < n; ++i) {
        const double s = cell.upper(i) - cell.lower(i);
        if (s <= (opts.box_min_cell > 0.0 ? opts.box_min_cell : opts.min_cell)) continue;
        for (double v : {fb.lower(i), fb.upper(i)}) {
          // Distance from the cell to the face {y_i = v} of fb.
          double d2 = std::pow(plane_distance(cell, Plane{i, v}), 2);
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double gap = std::max({0.0, fb.lower(j) - cell.upper(j), cell.lower(j) - fb.upper(j)});
            d2 += gap * gap;
          }
          if (std::sqrt(d2) < opts.grading * s) split[i] = any = true;
        }
      }
  }
  if (!any) {
    out.push_back(cell);
    return;
  }
  int count = 1 << n;
  for (int mask = 0; mask < count; ++mask) {
    bool valid = true;
    Point lo = cell.lower, hi = cell.upper;
    for (int i = 0; i < n; ++i) {
      const bool upper_half = (mask >> i) & 1;
      if (!split[i]) {
        if (upper_half) valid = false;
        continue;
      }
      const double mid = 0.5 * (cell.lower(i) + cell.upper(i));
      if (upper_half)
        lo(i) = mid;
      else
        hi(i) = mid;
    }
    if (valid) refine(Box(lo, hi), opts, out, depth + 1);
  }
}

}  // namespace

std::vector<Box> graded_cells(const Box& root, const GradedOptions& opts) {
  const int n = root.dim();
  if (opts.base_cells < 1) throw ContractViolation("base_cells must be positive");
  // Uniform base grid merged with the focus coordinates.
  std::vector<std::vector<double>> cuts(n);
  for (int i = 0; i < n; ++i) {
    const double a = root.lower(i), b = root.upper(i);
    std::vector<double> br;
    for (int k = 1; k < opts.base_cells; ++k) br.push_back(a + (b - a) * k / opts.base_cells);
    for (const Point& p : opts.focus_points) br.push_back(p(i));
    for (const Plane& pl : opts.focus_planes)
      if (pl.axis == i) br.push_back(pl.value);
    for (const Box& fb : opts.focus_boxes) {
      br.push_back(fb.lower(i));
      br.push_back(fb.upper(i));
    }
    std::sort(br.begin(), br.end());
    const double guard = 1e-12 * (b - a);
    cuts[i].push_back(a);
    for (double v : br)
      if (v > cuts[i].back() + guard && v < b - guard) cuts[i].push_back(v);
    cuts[i].push_back(b);
  }
  std::vector<Box> out;
  std::array<std::size_t, kMaxDim> idx{};
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= cuts[i].size() - 1;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    Point lo(n), hi(n);
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t m = cuts[i].size() - 1;
      idx[i] = r % m;
      r /= m;
      lo(i) = cuts[i][idx[i]];
      hi(i) = cuts[i][idx[i] + 1];
    }
    refine(Box(lo, hi), opts, out, 0);
  }
  return out;
}

void for_each_graded_node(const Box& root, const GradedOptions& opts,
                          const std::function<void(const Point&, double)>& visit) {
  const int n = root.dim();
  const GaussRule& g = gauss_legendre(opts.order);
  const int order = opts.order;
  std::size_t per_cell = 1;
  for (int i = 0; i < n; ++i) per_cell *= static_cast<std::size_t>(order);
  Point x(n);
  for (const Box& c : graded_cells(root, opts)) {
    for (std::size_t flat = 0; flat < per_cell; ++flat) {
      std::size_t r = flat;
      double w = 1.0;
      for (int i = n - 1; i >= 0; --i) {
        const int k = static_cast<int>(r % order);
        r /= order;
        const double mid = 0.5 * (c.lower(i) + c.upper(i));
        const double half = 0.5 * (c.upper(i) - c.lower(i));
        x(i) = mid + half * g.nodes[k];
        w *= half * g.weights[k];
      }
      visit(x, w);
    }
  }
}

double integrate_graded(const ScalarFn& f, const Box& root, const GradedOptions& opts) {
  double sum = 0.0;
  for_each_graded_node(root, opts, [&](const Point& x, double w) {
    const double v = f(x);
    if (!std::isfinite(v)) throw_poisoned(x, v);
    sum += w * v;
  });
  return sum;
}

NodeSet graded_nodes(const Box& root, const GradedOptions& opts) {
  NodeSet s;
  for_each_graded_node(root, opts, [&](const Point& x, double w) {
    s.points.push_back(x);
    s.weights.push_back(w);
  });
  return s;
}

}  // namespace distgeom
