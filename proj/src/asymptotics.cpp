#include "distgeom/asymptotics.hpp"

#include "distgeom/errors.hpp"
#include "distgeom/parallel.hpp"
#include "distgeom/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace distgeom {

namespace {

std::vector<Point> grid_points(const Box& k, int samples) {
  const int n = k.dim();
  int total = 1;
  for (int i = 0; i < n; ++i) total *= samples;
  std::vector<Point> pts;
  pts.reserve(total);
  for (int f = 0; f < total; ++f) {
    Point x(n);
    int rem = f;
    for (int i = 0; i < n; ++i) {
      const int j = rem % samples;
      rem /= samples;
      x(i) = samples == 1 ? k.center()(i) : k.lower(i) + (k.upper(i) - k.lower(i)) * j / (samples - 1);
    }
    pts.push_back(x);
  }
  return pts;
}

nlohmann::json fit_json(const LogLogFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual},
          {"r2", f.r2},       {"points", f.points},       {"exact_zero", f.exact_zero}};
}

nlohmann::json fit2_json(const PowerLaw2Fit& f) {
  return {{"log_c", f.log_c}, {"alpha", f.alpha}, {"beta", f.beta},
          {"residual", f.residual}, {"points", f.points}, {"sparse", f.sparse}};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

RichardsonResult richardson(std::span<const double> eps, std::span<const double> values, std::optional<double> order) {
  if (eps.size() != values.size()) throw ContractViolation("richardson: size mismatch");
  RichardsonResult r;
  const std::size_t k = values.size();
  if (k == 0) {
    r.limit = std::nan("");
    return r;
  }
  r.limit = values[k - 1];
  if (k < 2) return r;
  double p = 1.0;
  if (order) {
    p = *order;
  } else if (k >= 4) {
    std::vector<double> est;
    for (std::size_t i = 0; i + 2 < k; ++i) {
      const double d0 = values[i] - values[i + 1];
      const double d1 = values[i + 1] - values[i + 2];
      const double ratio = eps[i + 1] / eps[i];
      if (d0 == 0.0 || d1 == 0.0 || d0 * d1 < 0.0) {
        est.push_back(std::nan(""));
        continue;
      }
      est.push_back(std::log(d1 / d0) / std::log(ratio));
    }
    if (est.size() >= 3) {
      const double a = est[est.size() - 3], b = est[est.size() - 2], c = est[est.size() - 1];
      const bool finite = std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
      if (finite && c > 0.0 && std::max({a, b, c}) - std::min({a, b, c}) <= 0.2) {
        p = c;
        r.auto_detected = true;
      }
    }
  }
  r.order = p;
  const double ratio = eps[k - 1] / eps[k - 2];
  const double rp = std::pow(ratio, p);
  r.limit = values[k - 1] + (values[k - 1] - values[k - 2]) * rp / (1.0 - rp);
  r.correction = std::abs(r.limit - values[k - 1]);
  return r;
}

double pair_field(const TensorField& rep, const TestDensity& psi, const Focus& focus, double eps,
                  const PairingOptions& opts) {
  if (psi.valence() != rep.valence().dual()) throw ContractViolation("test density valence does not match the field");
  GradedOptions g;
  g.order = opts.order;
  g.min_cell = std::max(opts.min_cell_factor * eps, 1e-12);
  g.box_min_cell = 0.25 * g.min_cell;
  g.grading = opts.grading;
  g.base_cells = opts.base_cells;
  const Box& root = psi.support();
  g.focus_planes = focus.planes;
  const double reach = 2.0 * eps * std::sqrt(static_cast<double>(rep.dim()));
  for (const Point& p : focus.points)
    if (root.distance_to(p) < reach) g.focus_points.push_back(p);
  // Faces of the kernel support box around each delta.
  for (const Point& p : focus.deltas)
    if (root.distance_to(p) < reach) g.focus_boxes.push_back(Box::around(p, eps));
  const NodeSet nodes = graded_nodes(root, g);
  constexpr std::size_t chunk = 256;
  const std::size_t chunks = (nodes.points.size() + chunk - 1) / chunk;
  std::vector<double> partial(chunks, 0.0);
  const int n = rep.dim();
  const Valence v = rep.valence();
  parallel_for(
      chunks,
      [&](std::size_t c) {
        Tensor t(n, v);
        double s = 0.0;
        const std::size_t end = std::min(nodes.points.size(), (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
          const Point& y = nodes.points[i];
          const Tensor ps = psi(y);
          if (ps.max_abs() == 0.0) continue;
          rep.evaluate(y, t.components());
          const double val = full_pairing(t, ps);
          if (!std::isfinite(val)) throw_poisoned(y, val);
          s += nodes.weights[i] * val;
        }
        partial[c] = s;
      },
      opts.threads);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double pair_smooth(const TensorField& f, const TestDensity& psi, int order, int cells) {
  return integrate(
      [&](const Point& y) {
        const Tensor ps = psi(y);
        if (ps.max_abs() == 0.0) return 0.0;
        return full_pairing(f(y), ps);
      },
      psi.support(), order, cells);
}

std::string ScalingVerdict::to_string() const {
  switch (kind) {
    case Kind::moderate: return "moderate(" + std::to_string(order) + ")";
    case Kind::negligible:
      return order < 0 ? std::string("negligible_to_all_orders") : "negligible_to_order(" + std::to_string(order) + ")";
    case Kind::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ScalingVerdict classify_slope(const LogLogFit& fit, const ScalingOptions& opts) {
  ScalingVerdict v;
  if (fit.exact_zero) {
    v.kind = ScalingVerdict::Kind::negligible;
    v.order = -1;
    return v;
  }
  if (!std::isfinite(fit.slope) || fit.residual > opts.residual_cutoff) return v;
  if (fit.slope + opts.slope_tolerance >= 1.0) {
    v.kind = ScalingVerdict::Kind::negligible;
    v.order = static_cast<int>(std::floor(fit.slope + opts.slope_tolerance));
    return v;
  }
  v.kind = ScalingVerdict::Kind::moderate;
  v.order = std::max(0, static_cast<int>(std::ceil(-fit.slope - opts.slope_tolerance)));
  return v;
}

nlohmann::json ScalingReport::to_json() const {
  return {{"schema", kReportSchemaVersion}, {"quantity", quantity}, {"net", net.to_json()},
          {"eps", eps},                     {"sup_norms", sup_norms}, {"fit", fit_json(fit)},
          {"verdict", verdict.to_string()}};
}

ScalingReport scaling_exponent(const GeneralizedField& t, const SmoothingChoice& choice, const Box& k,
                               const EpsNet& net, const ScalingTest& test, const ScalingOptions& opts) {
  net.validate();
  ScalingReport r;
  r.quantity = test.label.empty() ? t.label() : test.label;
  r.net = net;
  r.eps = net.values();
  r.sup_norms.assign(r.eps.size(), 0.0);
  const std::vector<Point> grid = grid_points(k, opts.samples_per_axis);
  parallel_for(
      r.eps.size(),
      [&](std::size_t i) {
        TensorField f = t.vary(choice, r.eps[i], test.variation);
        for (const VectorField& x : test.lie) f = lie_derivative(f, x);
        std::vector<Point> pts = grid;
        if (opts.focus_samples >= 2)
          for (const Point& c : t.focus().points) {
            if (!k.contains(c, 0.0)) continue;
            for (const Point& p : grid_points(Box::around(c, r.eps[i]), opts.focus_samples))
              if (k.contains(p, 0.0)) pts.push_back(p);
          }
        double sup = 0.0;
        std::vector<double> v(f.components());
        for (const Point& p : pts) {
          f.evaluate(p, v);
          double s = 0.0;
          for (double c : v) s += c * c;
          sup = std::max(sup, std::sqrt(s));
        }
        r.sup_norms[i] = sup;
      },
      opts.threads);
  r.fit = fit_loglog(r.eps, r.sup_norms);
  r.verdict = classify_slope(r.fit, opts);
  return r;
}

double sup_difference(const TensorField& a, const TensorField& b, const Box& k, int samples_per_axis) {
  double sup = 0.0;
  std::vector<double> va(a.components()), vb(b.components());
  for (const Point& p : grid_points(k, samples_per_axis)) {
    a.evaluate(p, va);
    b.evaluate(p, vb);
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) s += (va[i] - vb[i]) * (va[i] - vb[i]);
    sup = std::max(sup, std::sqrt(s));
  }
  return sup;
}

std::string to_string(AssociationReport::Verdict v) {
  switch (v) {
    case AssociationReport::Verdict::associated: return "associated";
    case AssociationReport::Verdict::not_associated: return "not_associated";
    case AssociationReport::Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

nlohmann::json AssociationReport::to_json() const {
  nlohmann::json f = nlohmann::json::array();
  for (const auto& [e, msg] : failures) f.push_back({{"eps", e}, {"error", msg}});
  return {{"schema", kReportSchemaVersion},
          {"quantity", quantity},
          {"choice", choice},
          {"test_density", test_density},
          {"eps", eps},
          {"pairings", pairings},
          {"failures", f},
          {"convergence", fit_json(convergence)},
          {"extrapolated_limit", extrapolated.limit},
          {"richardson_order", extrapolated.order},
          {"richardson_auto", extrapolated.auto_detected},
          {"target", target ? nlohmann::json(*target) : nlohmann::json(nullptr)},
          {"verdict", to_string(verdict)}};
}

bool AssociationSuite::all_associated() const {
  return !reports.empty() && std::all_of(reports.begin(), reports.end(), [](const AssociationReport& r) {
    return r.verdict == AssociationReport::Verdict::associated;
  });
}

nlohmann::json AssociationSuite::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : reports) rs.push_back(r.to_json());
  return {{"schema", kReportSchemaVersion}, {"reports", rs}, {"spread", spread}, {"spread_shrinks", spread_shrinks}};
}

namespace {

void finish_report(AssociationReport& r, const AssociationOptions& opts) {
  std::vector<double> d_eps, diffs;
  for (std::size_t i = 0; i + 1 < r.pairings.size(); ++i) {
    d_eps.push_back(r.eps[i]);
    diffs.push_back(std::abs(r.pairings[i] - r.pairings[i + 1]));
  }
  r.convergence = fit_loglog(d_eps, diffs);
  r.extrapolated = richardson(r.eps, r.pairings, opts.richardson_order);
  const bool exact = r.convergence.exact_zero && !r.pairings.empty();
  // Sequences that are already stationary to roundoff count as converged.
  double scale = 1.0, max_diff = 0.0;
  for (double p : r.pairings) scale = std::max(scale, std::abs(p));
  for (double d : diffs) max_diff = std::max(max_diff, d);
  const bool stationary = !diffs.empty() && max_diff <= kStationaryTolerance * scale;
  const bool converging = exact || stationary || (std::isfinite(r.convergence.slope) && r.convergence.slope > 0.0);
  if (r.pairings.size() < 3 || !std::isfinite(r.extrapolated.limit)) {
    r.verdict = AssociationReport::Verdict::inconclusive;
    return;
  }
  if (!r.target) {
    r.verdict = converging ? AssociationReport::Verdict::associated : AssociationReport::Verdict::inconclusive;
    return;
  }
  const double tol = opts.abs_tol + opts.rel_tol * std::abs(*r.target);
  const bool close = std::abs(r.extrapolated.limit - *r.target) <= tol;
  r.verdict = close && converging ? AssociationReport::Verdict::associated : AssociationReport::Verdict::not_associated;
}

}  // namespace

AssociationReport associate_values(const std::string& quantity, const std::string& choice, const std::string& psi,
                                   const std::function<double(double)>& pairing, std::optional<double> target,
                                   const EpsNet& net, const AssociationOptions& opts) {
  net.validate();
  AssociationReport r;
  r.quantity = quantity;
  r.choice = choice;
  r.test_density = psi;
  r.target = target;
  const std::vector<double> eps = net.values();
  std::vector<double> vals(eps.size(), std::nan(""));
  std::vector<std::string> errs(eps.size());
  parallel_for(
      eps.size(),
      [&](std::size_t i) {
        try {
          vals[i] = pairing(eps[i]);
        } catch (const Error& e) {
          errs[i] = e.what();
        }
      },
      opts.pairing.threads);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!errs[i].empty() || !std::isfinite(vals[i])) {
      r.failures.emplace_back(eps[i], errs[i].empty() ? std::string("non-finite pairing") : errs[i]);
      continue;
    }
    r.eps.push_back(eps[i]);
    r.pairings.push_back(vals[i]);
  }
  finish_report(r, opts);
  return r;
}

AssociationSuite associate(const GeneralizedField& t, const TestDensity& psi, std::optional<double> target,
                           const std::vector<SmoothingChoice>& choices, const EpsNet& net,
                           const AssociationOptions& opts) {
  AssociationSuite s;
  PairingOptions inner = opts.pairing;
  AssociationOptions outer = opts;
  // Parallelism is spent over eps; each pairing runs single-threaded.
  inner.threads = 1;
  for (const SmoothingChoice& c : choices) {
    s.reports.push_back(associate_values(
        t.label(), c.label, psi.label(),
        [&](double eps) { return pair_field(t.represent(c, eps), psi, t.focus(), eps, inner); }, target, net, outer));
  }
  const std::vector<double> eps = net.values();
  for (double e : eps) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool all = true;
    for (const auto& r : s.reports) {
      const auto it = std::find(r.eps.begin(), r.eps.end(), e);
      if (it == r.eps.end()) {
        all = false;
        break;
      }
      const double v = r.pairings[it - r.eps.begin()];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    s.spread.push_back(all ? hi - lo : std::nan(""));
  }
  if (s.spread.size() >= 4) {
    s.spread_shrinks = true;
    for (std::size_t i = s.spread.size() - 4; i + 1 < s.spread.size(); ++i)
      if (!(s.spread[i + 1] < s.spread[i])) s.spread_shrinks = false;
  }
  return s;
}

RegimeFit fit_regimes(const std::vector<DecaySample>& samples, double r0) {
  std::vector<double> ie, ir, iv, oe, orr, ov;
  for (const DecaySample& s : samples) {
    if (s.r < s.eps * r0) {
      ie.push_back(s.eps);
      ir.push_back(s.r);
      iv.push_back(s.value);
    } else {
      oe.push_back(s.eps);
      orr.push_back(s.r);
      ov.push_back(s.value);
    }
  }
  RegimeFit f;
  f.r0 = r0;
  f.inner = fit_power_law2(ie, ir, iv);
  f.outer = fit_power_law2(oe, orr, ov);
  return f;
}

nlohmann::json DecayProfile::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : samples) rows.push_back({s.eps, s.r, s.value});
  nlohmann::json sens = nlohmann::json::array();
  for (const auto& f : sensitivity) sens.push_back({{"r0", f.r0}, {"inner", fit2_json(f.inner)}, {"outer", fit2_json(f.outer)}});
  return {{"schema", kReportSchemaVersion},
          {"columns", {"eps", "r", "max_abs_value"}},
          {"samples", rows},
          {"r0", fit.r0},
          {"inner", fit2_json(fit.inner)},
          {"outer", fit2_json(fit.outer)},
          {"r0_sensitivity", sens}};
}

DecayProfile decay_profile(const GeneralizedField& t, const SmoothingChoice& choice, const Point& center,
                           std::span<const double> radii, const EpsNet& net, const DecayOptions& opts) {
  if (t.valence().rank() != 0) throw ContractViolation("decay profile needs a scalar field");
  if (center.size() != 2 || t.dim() != 2) throw ContractViolation("decay profile samples circles in two dimensions");
  net.validate();
  const std::vector<double> eps = net.values();
  const std::size_t nr = radii.size();
  std::vector<DecaySample> samples(eps.size() * nr);
  parallel_for(
      eps.size(),
      [&](std::size_t i) {
        const TensorField f = t.represent(choice, eps[i]);
        for (std::size_t j = 0; j < nr; ++j) {
          double mx = 0.0;
          for (int a = 0; a < opts.angles; ++a) {
            const double th = 2.0 * M_PI * (a + 0.5) / opts.angles;
            Point x = center;
            x(0) += radii[j] * std::cos(th);
            x(1) += radii[j] * std::sin(th);
            double v = 0.0;
            f.evaluate(x, std::span<double>(&v, 1));
            mx = std::max(mx, std::abs(v));
          }
          samples[i * nr + j] = {eps[i], radii[j], mx};
        }
      },
      opts.threads);
  DecayProfile p;
  p.samples = std::move(samples);
  p.fit = fit_regimes(p.samples, opts.r0);
  for (double r0 : opts.r0_sweep) p.sensitivity.push_back(fit_regimes(p.samples, r0));
  return p;
}

std::string to_csv(const ScalingReport& r) {
  std::string s = "eps,sup_norm\n";
  for (std::size_t i = 0; i < r.eps.size(); ++i) s += num(r.eps[i]) + "," + num(r.sup_norms[i]) + "\n";
  return s;
}

std::string to_csv(const AssociationReport& r) {
  std::string s = "eps,pairing\n";
  for (std::size_t i = 0; i < r.eps.size(); ++i) s += num(r.eps[i]) + "," + num(r.pairings[i]) + "\n";
  return s;
}

std::string to_csv(const DecayProfile& r) {
  std::string s = "eps,r,max_abs_value\n";
  for (const auto& x : r.samples) s += num(x.eps) + "," + num(x.r) + "," + num(x.value) + "\n";
  return s;
}

}  // namespace distgeom
