#include "distgeom/chart.hpp"

#include "distgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace distgeom {

namespace {

std::string format_point(const Point& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p(i);
  os << ")";
  return os.str();
}

}  // namespace

Box::Box(Point lo, Point hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() < 1 || lower.size() > kMaxDim)
    throw ContractViolation("box corners have inconsistent dimension");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower(i) < upper(i))) throw ContractViolation("box needs lower < upper on every axis");
}

Box Box::around(const Point& center, double radius) {
  return Box(center.array() - radius, center.array() + radius);
}

bool Box::contains(const Point& p, double margin) const {
  for (int i = 0; i < dim(); ++i)
    if (p(i) < lower(i) + margin || p(i) > upper(i) - margin) return false;
  return true;
}

bool Box::contains(const Box& inner) const {
  for (int i = 0; i < dim(); ++i)
    if (inner.lower(i) < lower(i) || inner.upper(i) > upper(i)) return false;
  return true;
}

double Box::distance_to(const Point& p) const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double d = std::max({lower(i) - p(i), 0.0, p(i) - upper(i)});
    s += d * d;
  }
  return std::sqrt(s);
}

Box Box::shrunk(double margin) const {
  return Box(lower.array() + margin, upper.array() - margin);
}

Chart::Chart(Box domain, std::vector<Point> excluded)
    : domain_(std::move(domain)), excluded_(std::move(excluded)) {
  if (domain_.dim() < 2 || domain_.dim() > kMaxDim)
    throw ContractViolation("chart dimension must be 2, 3 or 4");
  for (const Point& p : excluded_) {
    if (p.size() != domain_.dim() || !domain_.contains(p))
      throw ContractViolation("excluded point " + format_point(p) + " lies outside the chart");
  }
}

Chart Chart::cube(int dim, double half_width, std::vector<Point> excluded) {
  Point lo = Point::Constant(dim, -half_width);
  Point hi = Point::Constant(dim, half_width);
  return Chart(Box(lo, hi), std::move(excluded));
}

void Jet::resize(int dim, std::size_t comps, int ord) {
  order = ord;
  value.assign(comps, 0.0);
  first.assign(ord >= 1 ? comps * dim : 0, 0.0);
  second.assign(ord >= 2 ? comps * dim * dim : 0, 0.0);
}

TensorField::TensorField(Chart chart, Valence valence, Evaluator eval, Smoothness smoothness,
                         double eps, JetEvaluator jet)
    : chart_(std::move(chart)),
      valence_(valence),
      eval_(std::move(eval)),
      smoothness_(smoothness),
      eps_(eps),
      jet_(std::move(jet)) {
  if (!eval_) throw ContractViolation("tensor field needs an evaluator");
  if (smoothness_ == Smoothness::regularized && !(eps_ > 0.0))
    throw ContractViolation("regularized field needs eps > 0");
}

TensorField TensorField::constant(Chart chart, const Tensor& value) {
  if (value.valence().rank() > 0 && value.dim() != chart.dim())
    throw ContractViolation("constant field dimension does not match chart");
  std::vector<double> comps(value.components().begin(), value.components().end());
  const int n = chart.dim();
  return TensorField(
      std::move(chart), value.valence(),
      [comps](const Point&, std::span<double> out) { std::copy(comps.begin(), comps.end(), out.begin()); },
      Smoothness::closed_form, 0.0,
      [comps, n](const Point&, int order, Jet& j) {
        j.resize(n, comps.size(), order);
        j.value = comps;
      });
}

TensorField TensorField::zero(Chart chart, Valence valence) {
  const int n = chart.dim();
  return constant(chart, Tensor(n, valence));
}

Tensor TensorField::operator()(const Point& x) const {
  Tensor t(dim(), valence_);
  eval_(x, t.components());
  return t;
}

double TensorField::default_step() const {
  if (smoothness_ == Smoothness::regularized) return eps_ / 20.0;
  return 1e-5 * chart_.diameter();
}

Jet TensorField::jet(const Point& x, int order, std::optional<double> step) const {
  if (jet_) {
    Jet j;
    jet_(x, order, j);
    return j;
  }
  const double h = step.value_or(default_step());
  return fd_jet(*this, x, order, h, 2.0 * h);
}

TensorField TensorField::with_evaluator(Valence valence, Evaluator eval, JetEvaluator jet) const {
  return TensorField(chart_, valence, std::move(eval), smoothness_, eps_, std::move(jet));
}

TensorField linear_combination(double a, const TensorField& f, double b, const TensorField& g) {
  if (f.valence() != g.valence() || f.dim() != g.dim())
    throw ContractViolation("linear combination of fields with different valence");
  const std::size_t m = f.components();
  const bool reg = f.smoothness() == Smoothness::regularized || g.smoothness() == Smoothness::regularized;
  const Smoothness sm = reg ? Smoothness::regularized
                            : (f.smoothness() == Smoothness::sampled || g.smoothness() == Smoothness::sampled
                                   ? Smoothness::sampled
                                   : Smoothness::closed_form);
  TensorField::Evaluator eval = [=](const Point& x, std::span<double> out) {
    std::vector<double> tmp(m);
    f.evaluate(x, out);
    g.evaluate(x, tmp);
    for (std::size_t k = 0; k < m; ++k) out[k] = a * out[k] + b * tmp[k];
  };
  TensorField::JetEvaluator jet;
  if (f.has_exact_jet() && g.has_exact_jet()) {
    jet = [=](const Point& x, int order, Jet& out) {
      out = f.jet(x, order);
      const Jet jg = g.jet(x, order);
      for (std::size_t k = 0; k < out.value.size(); ++k) out.value[k] = a * out.value[k] + b * jg.value[k];
      for (std::size_t k = 0; k < out.first.size(); ++k) out.first[k] = a * out.first[k] + b * jg.first[k];
      for (std::size_t k = 0; k < out.second.size(); ++k)
        out.second[k] = a * out.second[k] + b * jg.second[k];
    };
  }
  return TensorField(f.chart(), f.valence(), std::move(eval), sm, std::max(f.eps(), g.eps()), std::move(jet));
}

TensorField scaled(const TensorField& f, double s) {
  const std::size_t m = f.components();
  TensorField::JetEvaluator jet;
  if (f.has_exact_jet()) {
    jet = [f, s](const Point& x, int order, Jet& out) {
      out = f.jet(x, order);
      for (double& v : out.value) v *= s;
      for (double& v : out.first) v *= s;
      for (double& v : out.second) v *= s;
    };
  }
  return f.with_evaluator(
      f.valence(),
      [f, s, m](const Point& x, std::span<double> out) {
        f.evaluate(x, out);
        for (std::size_t k = 0; k < m; ++k) out[k] *= s;
      },
      std::move(jet));
}

void check_stencil(const Chart& chart, const Point& x, double step) {
  if (!chart.domain().contains(x, step))
    throw BoundaryProximityError("stencil of width " + std::to_string(step) + " at " +
                                 format_point(x) + " leaves the chart domain");
  for (const Point& p : chart.excluded_points())
    if ((x - p).lpNorm<Eigen::Infinity>() <= step)
      throw BoundaryProximityError("stencil at " + format_point(x) +
                                   " reaches the excluded point " + format_point(p));
}

Jet fd_jet(const TensorField& f, const Point& x, int order, double h1, double h2) {
  const int n = f.dim();
  const std::size_t m = f.components();
  Jet j;
  j.resize(n, m, order);
  check_stencil(f.chart(), x, order >= 2 ? std::max(h1, h2) : h1);
  f.evaluate(x, j.value);
  if (order < 1) return j;
  std::vector<double> plus(m), minus(m);
  for (int c = 0; c < n; ++c) {
    Point xp = x, xm = x;
    xp(c) += h1;
    xm(c) -= h1;
    f.evaluate(xp, plus);
    f.evaluate(xm, minus);
    for (std::size_t k = 0; k < m; ++k) j.first[c * m + k] = (plus[k] - minus[k]) / (2.0 * h1);
  }
  if (order < 2) return j;
  std::vector<double> pp(m), pm(m), mp(m), mm(m);
  for (int c = 0; c < n; ++c) {
    Point xp = x, xm = x;
    xp(c) += h2;
    xm(c) -= h2;
    f.evaluate(xp, plus);
    f.evaluate(xm, minus);
    for (std::size_t k = 0; k < m; ++k)
      j.second[(c * n + c) * m + k] = (plus[k] - 2.0 * j.value[k] + minus[k]) / (h2 * h2);
    for (int d = c + 1; d < n; ++d) {
      Point a = x, b = x, e = x, g = x;
      a(c) += h2, a(d) += h2;
      b(c) += h2, b(d) -= h2;
      e(c) -= h2, e(d) += h2;
      g(c) -= h2, g(d) -= h2;
      f.evaluate(a, pp);
      f.evaluate(b, pm);
      f.evaluate(e, mp);
      f.evaluate(g, mm);
      for (std::size_t k = 0; k < m; ++k) {
        const double v = (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h2 * h2);
        j.second[(c * n + d) * m + k] = v;
        j.second[(d * n + c) * m + k] = v;
      }
    }
  }
  return j;
}

VectorField::VectorField(int dim, Evaluator eval, JacobianFn jacobian, std::string label)
    : dim_(dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)), label_(std::move(label)) {
  if (!eval_) throw ContractViolation("vector field needs an evaluator");
}

VectorField VectorField::zero(int dim) {
  return VectorField(
      dim, [dim](const Point&) { return Point(Point::Zero(dim)); },
      [dim](const Point&) { return Mat(Mat::Zero(dim, dim)); }, "0");
}

VectorField VectorField::constant(const Point& value) {
  const int n = static_cast<int>(value.size());
  return VectorField(
      n, [value](const Point&) { return value; },
      [n](const Point&) { return Mat(Mat::Zero(n, n)); }, "const");
}

VectorField VectorField::affine(const Mat& m, const Point& b, std::string label) {
  return VectorField(
      static_cast<int>(b.size()), [m, b](const Point& x) { return Point(m * x + b); },
      [m](const Point&) { return m; }, std::move(label));
}

Mat VectorField::jacobian(const Point& x) const {
  if (jacobian_) return jacobian_(x);
  const double h = 1e-5 * std::max(1.0, x.norm());
  Mat jac(dim_, dim_);
  for (int c = 0; c < dim_; ++c) {
    Point xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    jac.col(c) = (eval_(xp) - eval_(xm)) / (2.0 * h);
  }
  return jac;
}

TensorField VectorField::as_tensor_field(const Chart& chart) const {
  if (chart.dim() != dim_) throw ContractViolation("vector field dimension does not match chart");
  VectorField self = *this;
  const int n = dim_;
  return TensorField(
      chart, {1, 0},
      [self](const Point& x, std::span<double> out) {
        const Point v = self(x);
        for (int i = 0; i < v.size(); ++i) out[i] = v(i);
      },
      Smoothness::closed_form, 0.0,
      self.has_closed_form_jacobian()
          ? TensorField::JetEvaluator([self, n](const Point& x, int order, Jet& j) {
              if (order > 1) throw ContractViolation("vector field jet limited to first order");
              j.resize(n, n, order);
              const Point v = self(x);
              for (int i = 0; i < n; ++i) j.value[i] = v(i);
              if (order == 1) {
                const Mat jac = self.jacobian(x);
                for (int c = 0; c < n; ++c)
                  for (int a = 0; a < n; ++a) j.first[c * n + a] = jac(a, c);
              }
            })
          : TensorField::JetEvaluator{});
}

TestDensity::TestDensity(int dim, Valence valence, Box support, TensorField::Evaluator eval,
                         std::string label)
    : dim_(dim), valence_(valence), support_(std::move(support)), eval_(std::move(eval)),
      label_(std::move(label)) {
  if (support_.dim() != dim_) throw ContractViolation("test density support has wrong dimension");
}

namespace {

// exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere; equals 1 at s = 0.
double unit_bump(double s) {
  const double a = 1.0 - s * s;
  if (a <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / a);
}

// Smooth step: 1 for s <= 0, 0 for s >= 1.
double smooth_step_down(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return b / (a + b);
}

}  // namespace

TestDensity TestDensity::bump(const Point& center, double radius, double value) {
  const int n = static_cast<int>(center.size());
  return TestDensity(
      n, {0, 0}, Box::around(center, radius),
      [center, radius, value](const Point& x, std::span<double> out) {
        out[0] = value * unit_bump((x - center).norm() / radius);
      },
      "bump");
}

TestDensity TestDensity::plateau(const Point& center, double inner, double outer, double value) {
  if (!(inner < outer)) throw ContractViolation("plateau needs inner < outer");
  const int n = static_cast<int>(center.size());
  return TestDensity(
      n, {0, 0}, Box::around(center, outer),
      [center, inner, outer, value](const Point& x, std::span<double> out) {
        const double r = (x - center).norm();
        out[0] = value * smooth_step_down((r - inner) / (outer - inner));
      },
      "plateau");
}

TestDensity TestDensity::tensor_valued(const TestDensity& scalar_profile, const Tensor& components) {
  if (scalar_profile.valence().rank() != 0)
    throw ContractViolation("tensor_valued needs a scalar profile");
  std::vector<double> comps(components.components().begin(), components.components().end());
  TestDensity profile = scalar_profile;
  return TestDensity(
      components.dim(), components.valence(), scalar_profile.support(),
      [profile, comps](const Point& x, std::span<double> out) {
        double s = 0.0;
        profile.evaluate(x, std::span<double>(&s, 1));
        for (std::size_t k = 0; k < comps.size(); ++k) out[k] = s * comps[k];
      },
      scalar_profile.label() + "*tensor");
}

Tensor TestDensity::operator()(const Point& x) const {
  Tensor t(dim_, valence_);
  evaluate(x, t.components());
  return t;
}

void TestDensity::evaluate(const Point& x, std::span<double> out) const {
  if (!support_.contains(x)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  eval_(x, out);
}

TensorField differentiate(const TensorField& f, int direction, std::optional<double> step) {
  if (direction < 0 || direction >= f.dim()) throw ContractViolation("direction out of range");
  const double h = step.value_or(f.default_step());
  if (!(h > 0.0)) throw ContractViolation("differentiation step must be positive");
  const std::size_t m = f.components();
  return f.with_evaluator(f.valence(), [f, direction, h, m](const Point& x, std::span<double> out) {
    check_stencil(f.chart(), x, h);
    std::vector<double> plus(m), minus(m);
    Point xp = x, xm = x;
    xp(direction) += h;
    xm(direction) -= h;
    f.evaluate(xp, plus);
    f.evaluate(xm, minus);
    for (std::size_t k = 0; k < m; ++k) out[k] = (plus[k] - minus[k]) / (2.0 * h);
  });
}

TensorField gradient(const TensorField& f, std::optional<double> step) {
  const int n = f.dim();
  const std::size_t m = f.components();
  const Valence v{f.valence().upper, f.valence().lower + 1};
  return f.with_evaluator(v, [f, step, n, m](const Point& x, std::span<double> out) {
    const Jet j = f.jet(x, 1, step);
    for (std::size_t k = 0; k < m; ++k)
      for (int c = 0; c < n; ++c) out[k * n + c] = j.first[c * m + k];
  });
}

TensorField lie_derivative(const TensorField& f, const VectorField& x, std::optional<double> step) {
  if (x.dim() != f.dim()) throw ContractViolation("vector field dimension does not match tensor field");
  const int n = f.dim();
  const Valence v = f.valence();
  const std::size_t m = f.components();
  return f.with_evaluator(v, [f, x, step, n, v, m](const Point& p, std::span<double> out) {
    const Jet j = f.jet(p, 1, step);
    const Point xv = x(p);
    const Mat jac = x.jacobian(p);
    for (std::size_t k = 0; k < m; ++k) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += xv(c) * j.first[c * m + k];
      out[k] = s;
    }
    std::vector<const Mat*> maps(v.rank(), nullptr);
    std::vector<double> tmp(m);
    for (int slot = 0; slot < v.rank(); ++slot) {
      maps[slot] = &jac;
      transform_slots(n, v, j.value, maps, tmp);
      maps[slot] = nullptr;
      const double sign = slot < v.upper ? -1.0 : 1.0;
      for (std::size_t k = 0; k < m; ++k) out[k] += sign * tmp[k];
    }
  });
}

}  // namespace distgeom
