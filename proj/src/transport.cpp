#include "distgeom/transport.hpp"

#include "distgeom/errors.hpp"
#include "distgeom/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace distgeom {

namespace {

std::string fmt(const Point& p) {
  std::ostringstream os;
  os.precision(12);
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p(i);
  os << ")";
  return os.str();
}

// Every point of a samples_per_axis^n grid over `k`.
std::vector<Point> sample_grid(const Box& k, int samples_per_axis) {
  const int n = k.dim();
  std::vector<Point> out;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= samples_per_axis;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    Point p(n);
    for (int i = n - 1; i >= 0; --i) {
      const int j = static_cast<int>(r % samples_per_axis);
      r /= samples_per_axis;
      const double s = samples_per_axis == 1 ? 0.5 : static_cast<double>(j) / (samples_per_axis - 1);
      p(i) = k.lower(i) + s * (k.upper(i) - k.lower(i));
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

BackgroundConnection::BackgroundConnection(TensorField gamma, std::string label)
    : gamma_(std::move(gamma)), label_(std::move(label)) {
  if (gamma_.valence() != Valence{1, 2}) throw ContractViolation("connection coefficients need valence (1,2)");
}

BackgroundConnection BackgroundConnection::flat(const Chart& chart) {
  BackgroundConnection c(TensorField::zero(chart, {1, 2}), "flat");
  c.flat_ = true;
  return c;
}

BackgroundConnection BackgroundConnection::constant(const Chart& chart, std::vector<double> gamma) {
  const int n = chart.dim();
  if (gamma.size() != static_cast<std::size_t>(n * n * n))
    throw ContractViolation("constant connection needs n^3 coefficients");
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (gamma[(a * n + b) * n + c] != gamma[(a * n + c) * n + b])
          throw ContractViolation("connection coefficients must be symmetric in the lower pair");
  const bool zero = std::all_of(gamma.begin(), gamma.end(), [](double v) { return v == 0.0; });
  BackgroundConnection bc(TensorField::constant(chart, Tensor(n, {1, 2}, std::move(gamma))), "constant");
  bc.flat_ = zero;
  return bc;
}

double BackgroundConnection::symmetry_defect(int samples_per_axis) const {
  const int n = dim();
  std::vector<double> g(n * n * n);
  double worst = 0.0;
  for (const Point& x : sample_grid(gamma_.chart().domain(), samples_per_axis)) {
    evaluate(x, g);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          worst = std::max(worst, std::abs(g[(a * n + b) * n + c] - g[(a * n + c) * n + b]));
  }
  return worst;
}

FlatteningMap FlatteningMap::quadratic_shear(int dim, double s) {
  FlatteningMap m;
  m.phi = [dim, s](const Point& x) {
    Point y = x;
    for (int i = 0; i < dim; ++i) {
      const double v = x((i + 1) % dim);
      y(i) += s * v * v;
    }
    return y;
  };
  m.jacobian = [dim, s](const Point& x) {
    Mat j = Mat::Identity(dim, dim);
    for (int i = 0; i < dim; ++i) j(i, (i + 1) % dim) += 2.0 * s * x((i + 1) % dim);
    return j;
  };
  m.hessian = [dim, s](const Point&) {
    std::vector<Mat> h(dim, Mat::Zero(dim, dim));
    for (int i = 0; i < dim; ++i) {
      const int k = (i + 1) % dim;
      h[k](i, k) = 2.0 * s;
    }
    return h;
  };
  m.third = {};
  std::ostringstream os;
  os << "quadratic_shear(" << s << ")";
  m.label = os.str();
  return m;
}

BackgroundConnection FlatteningMap::connection(const Chart& chart) const {
  const int n = chart.dim();
  FlatteningMap self = *this;
  TensorField gamma(chart, {1, 2}, [self, n](const Point& x, std::span<double> out) {
    const Mat finv = self.jacobian(x).inverse();
    const std::vector<Mat> h = self.hessian(x);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += finv(a, k) * h[c](k, b);
          out[(a * n + b) * n + c] = s;
        }
  });
  return BackgroundConnection(gamma, "flat connection of " + label);
}

namespace {

struct OdeState {
  Point x;
  Point v;
  Mat p;
};

// Right-hand side of the geodesic and parallel-transport equations.
OdeState rhs(const BackgroundConnection& gamma, const OdeState& s, bool with_transport,
             std::vector<double>& g) {
  const int n = static_cast<int>(s.x.size());
  gamma.evaluate(s.x, g);
  OdeState d{s.v, Point::Zero(n), with_transport ? Mat(Mat::Zero(n, n)) : Mat()};
  for (int a = 0; a < n; ++a) {
    double acc = 0.0;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) acc += g[(a * n + b) * n + c] * s.v(b) * s.v(c);
    d.v(a) = -acc;
  }
  if (with_transport) {
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int e = 0; e < n; ++e)
          for (int c = 0; c < n; ++c) acc += g[(a * n + e) * n + c] * s.p(e, j) * s.v(c);
        d.p(a, j) = -acc;
      }
  }
  return d;
}

void check_inside(const Chart& chart, const Point& x) {
  if (!x.allFinite() || !chart.domain().contains(x))
    throw DomainEscapeError("geodesic left the chart at " + fmt(x));
}

OdeState axpy(const OdeState& s, double h, const OdeState& d, bool with_transport) {
  OdeState r{s.x + h * d.x, s.v + h * d.v, with_transport ? Mat(s.p + h * d.p) : Mat()};
  return r;
}

// Integrates from t = 0 to 1 with RK4; returns the end state and the state at
// t = 1/2 (steps is even).
std::pair<OdeState, Point> integrate_geodesic(const BackgroundConnection& gamma, const Point& from,
                                              const Point& v0, int steps, bool with_transport) {
  const int n = static_cast<int>(from.size());
  const Chart& chart = gamma.field().chart();
  std::vector<double> g(n * n * n);
  OdeState s{from, v0, with_transport ? Mat(Mat::Identity(n, n)) : Mat()};
  Point mid = from;
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const OdeState k1 = rhs(gamma, s, with_transport, g);
    OdeState s2 = axpy(s, 0.5 * h, k1, with_transport);
    check_inside(chart, s2.x);
    const OdeState k2 = rhs(gamma, s2, with_transport, g);
    OdeState s3 = axpy(s, 0.5 * h, k2, with_transport);
    check_inside(chart, s3.x);
    const OdeState k3 = rhs(gamma, s3, with_transport, g);
    OdeState s4 = axpy(s, h, k3, with_transport);
    check_inside(chart, s4.x);
    const OdeState k4 = rhs(gamma, s4, with_transport, g);
    s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    if (with_transport) s.p += h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    check_inside(chart, s.x);
    if (2 * (k + 1) == steps) mid = s.x;
  }
  return {s, mid};
}

}  // namespace

GeodesicSolution solve_geodesic(const BackgroundConnection& gamma, const Point& from, const Point& to,
                                const ShootingOptions& opts) {
  const int n = gamma.dim();
  if (from.size() != n || to.size() != n) throw ContractViolation("geodesic endpoints have wrong dimension");
  check_inside(gamma.field().chart(), from);
  check_inside(gamma.field().chart(), to);
  GeodesicSolution sol;
  if (from == to) {
    sol.initial_velocity = Point::Zero(n);
    sol.transport = Mat::Identity(n, n);
    sol.midpoint = from;
    return sol;
  }
  int steps = std::max(opts.min_steps,
                       static_cast<int>(std::ceil(opts.steps_per_unit * (to - from).norm())));
  steps *= std::max(1, opts.refinement);
  if (steps % 2) ++steps;
  Point v = to - from;
  double err = 0.0;
  int it = 0;
  for (;; ++it) {
    const Point end = integrate_geodesic(gamma, from, v, steps, false).first.x;
    const Point r = end - to;
    err = r.norm();
    if (err <= opts.tolerance) break;
    if (it >= opts.max_iterations)
      throw NoGeodesicError("shooting from " + fmt(from) + " to " + fmt(to) + " did not converge (error " +
                            std::to_string(err) + ")");
    Mat jac(n, n);
    const double h = 1e-7 * std::max(1.0, v.norm());
    for (int k = 0; k < n; ++k) {
      Point vk = v;
      vk(k) += h;
      jac.col(k) = (integrate_geodesic(gamma, from, vk, steps, false).first.x - end) / h;
    }
    const Eigen::FullPivLU<Mat> lu(jac);
    if (!lu.isInvertible())
      throw NoGeodesicError("singular shooting Jacobian from " + fmt(from) + " to " + fmt(to));
    v -= lu.solve(r);
  }
  auto [state, mid] = integrate_geodesic(gamma, from, v, steps, true);
  sol.initial_velocity = v;
  sol.transport = state.p;
  sol.iterations = it;
  sol.endpoint_error = err;
  sol.midpoint = mid;
  return sol;
}

Mat parallel_transport(const BackgroundConnection& gamma, const Point& x, const Point& y,
                       const ShootingOptions& opts) {
  if (x == y) return Mat::Identity(gamma.dim(), gamma.dim());
  return solve_geodesic(gamma, y, x, opts).transport;
}

TransportOperator TransportOperator::identity(const Chart& chart) {
  TransportOperator t;
  t.chart_ = std::make_shared<const Chart>(chart);
  const int n = chart.dim();
  t.eval_ = [n](const Point&, const Point&) { return Mat(Mat::Identity(n, n)); };
  t.provenance_ = TransportProvenance::identity;
  t.label_ = "identity";
  t.frame_kind_ = FrameKind::identity;
  t.connection_ = BackgroundConnection::flat(chart);
  t.invertibility_radius_ = chart.diameter();
  return t;
}

TransportOperator TransportOperator::parallel(const Chart& chart, const BackgroundConnection& gamma,
                                              ShootingOptions opts) {
  TransportOperator t;
  t.chart_ = std::make_shared<const Chart>(chart);
  t.eval_ = [gamma, opts](const Point& x, const Point& y) { return parallel_transport(gamma, x, y, opts); };
  t.provenance_ = TransportProvenance::parallel_transport;
  t.label_ = "parallel(" + gamma.label() + ")";
  t.connection_ = gamma;
  return t;
}

TransportOperator TransportOperator::flat_frame(const Chart& chart, const FlatteningMap& map) {
  TransportOperator t;
  t.chart_ = std::make_shared<const Chart>(chart);
  auto m = std::make_shared<const FlatteningMap>(map);
  t.map_ = m;
  t.eval_ = [m](const Point& x, const Point& y) {
    return Mat(m->jacobian(x).partialPivLu().solve(m->jacobian(y)));
  };
  t.provenance_ = TransportProvenance::parallel_transport;
  t.label_ = "flat_frame(" + map.label + ")";
  t.frame_kind_ = FrameKind::map;
  t.connection_ = map.connection(chart);
  return t;
}

TransportOperator TransportOperator::custom(const Chart& chart, TwoPointFn eval, std::string label) {
  if (!eval) throw ContractViolation("custom transport needs an evaluator");
  TransportOperator t;
  t.chart_ = std::make_shared<const Chart>(chart);
  t.eval_ = std::move(eval);
  t.provenance_ = TransportProvenance::custom;
  t.label_ = std::move(label);
  return t;
}

Mat TransportOperator::operator()(const Point& x, const Point& y) const {
  if (x == y) return Mat::Identity(dim(), dim());
  return eval_(x, y);
}

Mat TransportOperator::frame(const Point& x) const {
  switch (frame_kind_) {
    case FrameKind::identity:
      return Mat::Identity(dim(), dim());
    case FrameKind::map:
      return map_->jacobian(x);
    case FrameKind::none:
      break;
  }
  throw ContractViolation("transport operator " + label_ + " has no frame");
}

std::vector<Mat> TransportOperator::frame_d1(const Point& x) const {
  const int n = dim();
  if (frame_kind_ == FrameKind::identity) return std::vector<Mat>(n, Mat::Zero(n, n));
  if (frame_kind_ == FrameKind::map) return map_->hessian(x);
  throw ContractViolation("transport operator " + label_ + " has no frame");
}

std::vector<Mat> TransportOperator::frame_d2(const Point& x) const {
  const int n = dim();
  if (frame_kind_ == FrameKind::identity || (frame_kind_ == FrameKind::map && !map_->third))
    return std::vector<Mat>(n * n, Mat::Zero(n, n));
  if (frame_kind_ == FrameKind::map) return map_->third(x);
  throw ContractViolation("transport operator " + label_ + " has no frame");
}

TransportOperator TransportOperator::with_invertibility_radius(double r) const {
  TransportOperator t = *this;
  t.invertibility_radius_ = r;
  return t;
}

TwoPointFn TransportOperator::as_function() const {
  TransportOperator self = *this;
  return [self](const Point& x, const Point& y) { return self(x, y); };
}

TransportPerturbation::TransportPerturbation(int dim, TwoPointFn eval, std::string label,
                                             bool vanishes_on_diagonal)
    : dim_(dim), eval_(std::move(eval)), label_(std::move(label)),
      vanishes_on_diagonal_(vanishes_on_diagonal) {
  if (!eval_) throw ContractViolation("transport perturbation needs an evaluator");
}

TransportPerturbation TransportPerturbation::difference(const TransportOperator& a,
                                                        const TransportOperator& b) {
  return TransportPerturbation(
      a.dim(), [a, b](const Point& x, const Point& y) { return Mat(a(x, y) - b(x, y)); },
      a.label() + " - " + b.label(), true);
}

TransportPerturbation TransportPerturbation::bump_matrix(const Mat& m) {
  return TransportPerturbation(
      static_cast<int>(m.rows()),
      [m](const Point& x, const Point& y) {
        const double r2 = (y - x).squaredNorm();
        const double b = r2 < 1.0 ? r2 * std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
        return Mat(b * m);
      },
      "bump_matrix", true);
}

namespace {

TransportPerturbation lie_two_point(const TwoPointFn& f, int n, const std::string& label,
                                    const VectorField& x, TransportSlot slot, double h,
                                    bool diag_zero_input) {
  auto first = [f, x, h, n](const Point& p, const Point& q) {
    const Point xv = x(p);
    Mat out = -x.jacobian(p) * f(p, q);
    for (int c = 0; c < n; ++c) {
      if (xv(c) == 0.0) continue;
      Point a = p, b = p;
      a(c) += h;
      b(c) -= h;
      out += xv(c) * (f(a, q) - f(b, q)) / (2.0 * h);
    }
    return out;
  };
  auto second = [f, x, h, n](const Point& p, const Point& q) {
    const Point yv = x(q);
    Mat out = f(p, q) * x.jacobian(q);
    for (int c = 0; c < n; ++c) {
      if (yv(c) == 0.0) continue;
      Point a = q, b = q;
      a(c) += h;
      b(c) -= h;
      out += yv(c) * (f(p, a) - f(p, b)) / (2.0 * h);
    }
    return out;
  };
  const std::string name = x.label().empty() ? "X" : x.label();
  switch (slot) {
    case TransportSlot::first:
      return TransportPerturbation(n, first, "L_(" + name + ",0) " + label, false);
    case TransportSlot::second:
      return TransportPerturbation(n, second, "L_(0," + name + ") " + label, false);
    case TransportSlot::both:
      break;
  }
  return TransportPerturbation(
      n, [first, second](const Point& p, const Point& q) { return Mat(first(p, q) + second(p, q)); },
      "L_" + name + " " + label, diag_zero_input);
}

}  // namespace

TransportPerturbation transport_lie_derivative(const TransportOperator& upsilon, const VectorField& x,
                                               TransportSlot slot, std::optional<double> step) {
  if (x.dim() != upsilon.dim()) throw ContractViolation("vector field dimension does not match transport");
  const double h = step.value_or(1e-5 * upsilon.chart().diameter());
  if (upsilon.has_frame() && !step) {
    // Upsilon = F(x)^-1 F(y): the x-part is A(x) F(y) with
    // A = -(X^c F^-1 d_c F + DX) F^-1, the y-part F(x)^-1 (X^c d_c F + F DX)(y).
    const std::string name = x.label().empty() ? "X" : x.label();
    const int n = upsilon.dim();
    if (upsilon.is_identity()) {
      switch (slot) {
        case TransportSlot::first:
          return TransportPerturbation(n, [x](const Point& p, const Point&) { return Mat(-x.jacobian(p)); },
                                       "L_(" + name + ",0) " + upsilon.label(), false);
        case TransportSlot::second:
          return TransportPerturbation(n, [x](const Point&, const Point& q) { return x.jacobian(q); },
                                       "L_(0," + name + ") " + upsilon.label(), false);
        case TransportSlot::both:
          break;
      }
      return TransportPerturbation(
          n, [x](const Point& p, const Point& q) { return Mat(x.jacobian(q) - x.jacobian(p)); },
          "L_" + name + " " + upsilon.label(), true);
    }
    auto a_part = [upsilon, x, n](const Point& p) {
      const Mat finv = small_inverse(upsilon.frame(p));
      const std::vector<Mat> d = upsilon.frame_d1(p);
      const Point xv = x(p);
      Mat s = x.jacobian(p);
      for (int c = 0; c < n; ++c)
        if (xv(c) != 0.0) s += xv(c) * (finv * d[c]);
      return Mat(-s * finv);
    };
    auto b_part = [upsilon, x, n](const Point& q) {
      const Mat f = upsilon.frame(q);
      const std::vector<Mat> d = upsilon.frame_d1(q);
      const Point yv = x(q);
      Mat s = f * x.jacobian(q);
      for (int c = 0; c < n; ++c)
        if (yv(c) != 0.0) s += yv(c) * d[c];
      return s;
    };
    switch (slot) {
      case TransportSlot::first:
        return TransportPerturbation(
            n, [upsilon, a_part](const Point& p, const Point& q) { return Mat(a_part(p) * upsilon.frame(q)); },
            "L_(" + name + ",0) " + upsilon.label(), false);
      case TransportSlot::second:
        return TransportPerturbation(
            n, [upsilon, b_part](const Point& p, const Point& q) { return Mat(small_inverse(upsilon.frame(p)) * b_part(q)); },
            "L_(0," + name + ") " + upsilon.label(), false);
      case TransportSlot::both:
        break;
    }
    return TransportPerturbation(
        n,
        [upsilon, a_part, b_part](const Point& p, const Point& q) {
          return Mat(a_part(p) * upsilon.frame(q) + small_inverse(upsilon.frame(p)) * b_part(q));
        },
        "L_" + name + " " + upsilon.label(), true);
  }
  // L^TO of an operator vanishes on the diagonal because Upsilon(x, x) = I.
  return lie_two_point(upsilon.as_function(), upsilon.dim(), upsilon.label(), x, slot, h, true);
}

TransportPerturbation transport_lie_derivative(const TransportPerturbation& upsilon,
                                               const VectorField& x, TransportSlot slot,
                                               std::optional<double> step) {
  if (x.dim() != upsilon.dim()) throw ContractViolation("vector field dimension does not match transport");
  const double h = step.value_or(1e-5);
  return lie_two_point(upsilon.function(), upsilon.dim(), upsilon.label(), x, slot, h,
                       upsilon.vanishes_on_diagonal());
}

nlohmann::json AdmissibilityReport::to_json() const {
  nlohmann::json j;
  j["eps"] = eps;
  j["sups"] = sups;
  j["slopes"] = slopes;
  j["bounded"] = bounded;
  j["diagonal_exact"] = diagonal_exact;
  j["diagonal_defect"] = diagonal_defect;
  return j;
}

namespace {

// Sup over sample pairs of the Frobenius norms of all derivatives of total
// order `order` (central differences, step h in each variable).
double derivative_sup(const TransportOperator& u, const std::vector<std::pair<Point, Point>>& pairs,
                      int order, double h) {
  const int n = u.dim();
  double sup = 0.0;
  // Variables 0..n-1 are x, n..2n-1 are y.
  std::vector<int> vars(order, 0);
  const int nv = 2 * n;
  std::function<void(int, int)> rec;
  for (const auto& [x, y] : pairs) {
    std::function<Mat(int, Point, Point)> eval = [&](int depth, Point px, Point py) -> Mat {
      if (depth == order) return u(px, py);
      const int var = vars[depth];
      Point ax = px, bx = px, ay = py, by = py;
      if (var < n) {
        ax(var) += h;
        bx(var) -= h;
      } else {
        ay(var - n) += h;
        by(var - n) -= h;
      }
      return Mat((eval(depth + 1, ax, ay) - eval(depth + 1, bx, by)) / (2.0 * h));
    };
    rec = [&](int depth, int start) {
      if (depth == order) {
        sup = std::max(sup, eval(0, x, y).norm());
        return;
      }
      for (int v = start; v < nv; ++v) {
        vars[depth] = v;
        rec(depth + 1, v);
      }
    };
    rec(0, 0);
  }
  return sup;
}

}  // namespace

AdmissibilityReport check_admissibility(const TransportNet& net, const Box& k, const EpsNet& eps,
                                        const AdmissibilityOptions& opts) {
  AdmissibilityReport rep;
  rep.eps = eps.values();
  const double emax = rep.eps.front();
  const std::vector<Point> xs = sample_grid(k, opts.samples_per_axis);
  const int n = k.dim();
  std::vector<std::pair<Point, Point>> pairs;
  for (const Point& x : xs) {
    pairs.emplace_back(x, x);
    for (double off : opts.offsets)
      for (int i = 0; i < n; ++i) {
        Point y = x;
        y(i) += off * emax;
        pairs.emplace_back(x, y);
      }
  }
  rep.sups.assign(opts.max_order + 1, std::vector<double>(rep.eps.size(), 0.0));
  rep.diagonal_exact = true;
  for (std::size_t e = 0; e < rep.eps.size(); ++e) {
    const TransportOperator u = net(rep.eps[e]);
    for (const Point& x : xs) {
      const Mat d = u(x, x) - Mat::Identity(n, n);
      const double defect = d.cwiseAbs().maxCoeff();
      rep.diagonal_defect = std::max(rep.diagonal_defect, defect);
      if (defect != 0.0) rep.diagonal_exact = false;
    }
    const double h = 1e-3 * rep.eps[e];
    for (int order = 0; order <= opts.max_order; ++order)
      rep.sups[order][e] = derivative_sup(u, pairs, order, h);
  }
  rep.bounded = true;
  for (int order = 0; order <= opts.max_order; ++order) {
    const LogLogFit f = fit_loglog(rep.eps, rep.sups[order]);
    const double slope = f.exact_zero || std::isnan(f.slope) ? 0.0 : f.slope;
    rep.slopes.push_back(slope);
    if (slope < -opts.slope_tolerance) rep.bounded = false;
  }
  return rep;
}

double estimate_invertibility_radius(const TransportOperator& upsilon, const Box& k,
                                     std::span<const double> radii, double min_det,
                                     int samples_per_axis) {
  const int n = upsilon.dim();
  std::vector<double> rs(radii.begin(), radii.end());
  std::sort(rs.begin(), rs.end());
  double best = 0.0;
  const Box& dom = upsilon.chart().domain();
  for (double r : rs) {
    bool ok = true;
    for (const Point& x : sample_grid(k, samples_per_axis)) {
      for (int i = 0; i < n && ok; ++i)
        for (double sgn : {-1.0, 1.0}) {
          Point y = x;
          y(i) += sgn * r;
          if (!dom.contains(y)) continue;
          if (std::abs(upsilon(x, y).determinant()) < min_det) {
            ok = false;
            break;
          }
        }
      if (!ok) break;
    }
    if (!ok) break;
    best = r;
  }
  return best;
}

}  // namespace distgeom
