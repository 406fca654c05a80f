#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"
#include "experiments_internal.hpp"

#include <cmath>
#include <functional>

namespace distgeom {

using nlohmann::json;
using namespace detail;

namespace {

// Closed-form metric with independent symbolic curvature.
struct MetricSpec {
  std::string kind;
  Chart chart = Chart::cube(2, 1.0);
  std::optional<GeneralizedMetric> metric;
  std::optional<TensorField> closed;
  std::function<double(const Point&)> scalar;
  std::function<void(const Point&, std::span<double>)> ricci;
  std::function<void(const Point&, std::span<double>)> einstein;
};

MetricSpec metric_spec(const Config& cfg) {
  MetricSpec s;
  s.kind = cfg.string("metric.kind");
  const double hw = cfg.number_or("metric.half_width", 1.0);
  const EmbeddingQuadrature quad = embedding_quadrature(cfg);
  if (s.kind == "cone") {
    s.chart = Chart::cube(2, hw);
    s.metric = cone_metric(s.chart, cfg.number("metric.A"), quad);
    return s;
  }
  if (s.kind == "conformal") {
    const int n = cfg.integer_or("metric.dim", 3);
    const double c = cfg.number_or("metric.coefficient", 0.1);
    if (n < 2 || n > kMaxDim) throw ConfigError("config field 'metric.dim' must lie in [2, 4]");
    s.chart = Chart::cube(n, hw);
    s.closed = TensorField(s.chart, Valence{0, 2}, [n, c](const Point& x, std::span<double> o) {
      const double e = std::exp(2.0 * c * x(0) * x(1));
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) o[a * n + b] = a == b ? e : 0.0;
    });
    // phi = c x1 x2: d phi = c (x2, x1, 0..), dd phi = c (e1 e2 + e2 e1), Laplacian 0.
    auto dphi = [c, n](const Point& x) {
      Point d = Point::Zero(n);
      d(0) = c * x(1);
      d(1) = c * x(0);
      return d;
    };
    s.ricci = [n, c, dphi](const Point& x, std::span<double> o) {
      const Point d = dphi(x);
      const double g2 = d.squaredNorm();
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double hess = (a == 0 && b == 1) || (a == 1 && b == 0) ? c : 0.0;
          o[a * n + b] = -(n - 2) * (hess - d(a) * d(b)) - (a == b ? (n - 2) * g2 : 0.0);
        }
    };
    s.scalar = [n, c, dphi](const Point& x) {
      return -std::exp(-2.0 * c * x(0) * x(1)) * (n - 2) * (n - 1) * dphi(x).squaredNorm();
    };
  } else if (s.kind == "sphere") {
    const double a = cfg.number("metric.radius");
    if (!(a > 0.0)) throw ConfigError("config field 'metric.radius' must be positive");
    s.chart = Chart::cube(2, hw);
    s.closed = TensorField(s.chart, Valence{0, 2}, [a](const Point& x, std::span<double> o) {
      const double q = 1.0 + x.squaredNorm();
      const double f = 4.0 * a * a / (q * q);
      o[0] = f;
      o[1] = o[2] = 0.0;
      o[3] = f;
    });
    s.scalar = [a](const Point&) { return 2.0 / (a * a); };
    s.ricci = [a](const Point& x, std::span<double> o) {
      const double q = 1.0 + x.squaredNorm();
      const double f = 4.0 / (q * q);
      o[0] = f;
      o[1] = o[2] = 0.0;
      o[3] = f;
    };
  } else if (s.kind == "flat_disguised") {
    const int n = cfg.integer_or("metric.dim", 3);
    if (n < 2 || n > kMaxDim) throw ConfigError("config field 'metric.dim' must lie in [2, 4]");
    const double sh = cfg.number_or("metric.shear", 0.2);
    const std::vector<double> lin = cfg.numbers("metric.linear");
    if (lin.size() != static_cast<std::size_t>(n * n)) throw ConfigError("config field 'metric.linear' must have dim^2 entries");
    Mat l(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) l(i, j) = lin[i * n + j];
    if (std::abs(l.determinant()) < 1e-6) throw ConfigError("config field 'metric.linear' must be invertible");
    s.chart = Chart::cube(n, hw);
    // psi(x) = L (x + sh (x_2^2, x_3^2, .., x_1^2)), g = D psi^T D psi.
    s.closed = TensorField(s.chart, Valence{0, 2}, [n, sh, l](const Point& x, std::span<double> o) {
      Mat j = Mat::Identity(n, n);
      for (int i = 0; i < n; ++i) {
        const int k = (i + 1) % n;
        j(i, k) += 2.0 * sh * x(k);
      }
      const Mat f = l * j;
      const Mat g = f.transpose() * f;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) o[a * n + b] = g(a, b);
    });
    s.scalar = [](const Point&) { return 0.0; };
    s.ricci = [](const Point&, std::span<double> o) {
      for (double& v : o) v = 0.0;
    };
  } else {
    throw ConfigError("config field 'metric.kind' must be cone, conformal, sphere or flat_disguised");
  }
  if (s.ricci && s.scalar && s.closed) {
    const TensorField g = *s.closed;
    const auto ric = s.ricci;
    const auto sc = s.scalar;
    const int n = s.chart.dim();
    s.einstein = [g, ric, sc, n](const Point& x, std::span<double> o) {
      std::vector<double> gv(n * n);
      g.evaluate(x, gv);
      ric(x, o);
      const double r = sc(x);
      for (int k = 0; k < n * n; ++k) o[k] -= 0.5 * gv[k] * r;
    };
  }
  s.metric = GeneralizedMetric(iota(RoughTensorField::from_smooth(*s.closed, "g_" + s.kind), quad).relabeled("g_" + s.kind));
  return s;
}

struct PsiSpec {
  TestDensity profile;
  std::optional<Tensor> components;
};

std::vector<PsiSpec> psi_specs(const Config& cfg, int n) {
  std::vector<PsiSpec> out;
  int idx = 0;
  for (const json& t : cfg.tables("psi")) {
    const std::string ctx = "psi[" + std::to_string(idx++) + "]";
    const std::string kind = field_string(t, "kind", ctx);
    const std::vector<double> c = field_numbers_or(t, "center", std::vector<double>(n, 0.0));
    if (static_cast<int>(c.size()) != n) throw ConfigError("config field '" + ctx + ".center' has the wrong length");
    Point center(n);
    for (int i = 0; i < n; ++i) center(i) = c[i];
    const double value = field_number_or(t, "value", 1.0);
    TestDensity d = kind == "plateau"
                        ? TestDensity::plateau(center, field_number(t, "inner", ctx), field_number(t, "outer", ctx), value)
                        : TestDensity::bump(center, field_number(t, "radius", ctx), value);
    std::optional<Tensor> comps;
    if (t.contains("components")) {
      const std::vector<double> v = field_numbers(t, "components", ctx);
      if (v.size() != static_cast<std::size_t>(n * n)) throw ConfigError("config field '" + ctx + ".components' must have dim^2 entries");
      comps = Tensor(n, Valence{2, 0}, v);
    }
    out.push_back({d, comps});
  }
  if (out.empty()) throw ConfigError("missing required config field 'psi'");
  return out;
}

double psi_l1(const TestDensity& psi) {
  return integrate([&](const Point& y) { return psi(y).frobenius_norm(); }, psi.support(), 8, 4);
}

}  // namespace

RunRecord run_compatibility(const Config& cfg, const NetOverride& ov) {
  const MetricSpec spec = metric_spec(cfg);
  if (spec.kind == "cone") throw ConfigError("config field 'metric.kind' = cone is handled by the cone experiment");
  const int n = spec.chart.dim();
  const EpsNet net = net_from_config(cfg, ov);
  const SmoothingChoice choice = choices_from_config(cfg, spec.chart).front();
  const AssociationOptions opts = association_options(cfg);
  const GeneralizedMetric& g = *spec.metric;
  const ConnectionCorrection conn = levi_civita(g, BackgroundConnection::flat(spec.chart));
  const CurvatureBundle cb = curvature(conn, g);
  const std::vector<PsiSpec> psis = psi_specs(cfg, n);
  const std::vector<double> eps = net.values();

  RunRecord rec = start_record(cfg, "compat", net);
  rec.results["metric"] = spec.kind;
  rec.results["dim"] = n;
  rec.results["choice"] = choice.label;
  json assoc = json::array();
  const std::vector<std::string> quantities =
      cfg.has("metric.quantities")
          ? cfg.at("metric.quantities").get<std::vector<std::string>>()
          : std::vector<std::string>{"scalar"};
  for (std::size_t ip = 0; ip < psis.size(); ++ip) {
    const PsiSpec& ps = psis[ip];
    for (const std::string& q : quantities) {
      const GeneralizedField* field = nullptr;
      std::function<void(const Point&, std::span<double>)> oracle;
      TestDensity psi = ps.profile;
      if (q == "scalar") {
        field = &cb.scalar;
        const auto sc = spec.scalar;
        oracle = [sc](const Point& x, std::span<double> o) { o[0] = sc(x); };
      } else if (q == "ricci" || q == "einstein") {
        if (!ps.components) throw ConfigError("config field 'psi[" + std::to_string(ip) + "].components' is needed for " + q);
        field = q == "ricci" ? &cb.ricci : &cb.einstein;
        oracle = q == "ricci" ? spec.ricci : spec.einstein;
        psi = TestDensity::tensor_valued(ps.profile, *ps.components);
      } else {
        throw ConfigError("config field 'metric.quantities' has unknown entry '" + q + "'");
      }
      const TensorField oracle_field(spec.chart, field->valence(), oracle);
      const double target = pair_smooth(oracle_field, psi, 10, n == 2 ? 8 : 4);
      const AssociationSuite s = associate(*field, psi, target, {choice}, net, opts);
      const AssociationReport& r = s.reports[0];
      const std::string tag = q + "/psi" + std::to_string(ip);
      json j = r.to_json();
      j["oracle"] = target;
      assoc.push_back(j);
      rec.tables["pairings_" + q + "_psi" + std::to_string(ip)] = to_csv(r);
      rec.checks.push_back(make_check(
          "association/" + tag, r.verdict == AssociationReport::Verdict::associated,
          {{"limit", r.extrapolated.limit},
           {"oracle", target},
           {"relative_error", target != 0.0 ? std::abs(r.extrapolated.limit - target) / std::abs(target) : std::abs(r.extrapolated.limit)}}));
      if (spec.kind == "flat_disguised" && !r.pairings.empty()) {
        std::vector<double> absval;
        for (double v : r.pairings) absval.push_back(std::abs(v));
        const LogLogFit fit = fit_loglog(r.eps, absval);
        const double min_slope = cfg.number_or("checks.vacuum_min_slope", 1.0);
        rec.checks.push_back(make_check("vacuum_slope/" + tag, fit.slope >= min_slope,
                                        {{"slope", fit.slope}, {"residual", fit.residual}, {"min_slope", min_slope}}));
        // Scale of the curvature terms before cancellation: sup |d Gamma^| at
        // eps0 times the L1 mass of the test density.
        const TensorField gh = conn.gamma_hat.represent(choice, eps[0]);
        const TensorField dgh = gradient(gh, eps[0] / 10.0);
        Box k = psi.support();
        double sup = 0.0;
        std::vector<double> v(dgh.components());
        const int samples = 5;
        for (int f = 0, total = static_cast<int>(std::pow(samples, n)); f < total; ++f) {
          Point x(n);
          int rem = f;
          for (int i = 0; i < n; ++i) {
            x(i) = k.lower(i) + (k.upper(i) - k.lower(i)) * (rem % samples) / (samples - 1.0);
            rem /= samples;
          }
          dgh.evaluate(x, v);
          double s2 = 0.0;
          for (double c : v) s2 += c * c;
          sup = std::max(sup, std::sqrt(s2));
        }
        const double scale = sup * psi_l1(psi);
        const double frac = cfg.number_or("checks.vacuum_terminal_fraction", 1e-4);
        const double terminal = absval.back();
        rec.checks.push_back(make_check("vacuum_terminal/" + tag, terminal <= frac * scale,
                                        {{"terminal", terminal}, {"curvature_scale", scale}, {"fraction", frac},
                                         {"ratio", scale > 0.0 ? terminal / scale : 0.0}}));
      }
    }
  }
  rec.results["associations"] = assoc;
  return rec;
}

RunRecord run_curvature(const Config& cfg, const NetOverride& ov) {
  const MetricSpec spec = metric_spec(cfg);
  const int n = spec.chart.dim();
  const EpsNet net = net_from_config(cfg, ov);
  const SmoothingChoice choice = choices_from_config(cfg, spec.chart).front();
  const GeneralizedMetric& g = *spec.metric;
  const CurvatureBundle cb = curvature(levi_civita(g, BackgroundConnection::flat(spec.chart)), g);
  const double half = cfg.number_or("grid.half_width", 0.5);
  const int samples = cfg.integer_or("grid.samples", 9);
  if (samples < 2) throw ConfigError("config field 'grid.samples' must be >= 2");
  RunRecord rec = start_record(cfg, "curvature", net);
  rec.results["metric"] = spec.kind;
  rec.results["choice"] = choice.label;
  std::string csv = "eps";
  for (int i = 0; i < n; ++i) csv += ",x" + std::to_string(i + 1);
  csv += ",scalar,scalar_oracle,error\n";
  json levels = json::array();
  for (double e : net.values()) {
    const TensorField r = cb.scalar.represent(choice, e);
    double max_err = 0.0;
    int failed = 0;
    const int total = static_cast<int>(std::pow(samples, n));
    for (int f = 0; f < total; ++f) {
      Point x(n);
      int rem = f;
      for (int i = 0; i < n; ++i) {
        x(i) = -half + 2.0 * half * (rem % samples) / (samples - 1.0);
        rem /= samples;
      }
      double v = std::nan("");
      try {
        r.evaluate(x, std::span<double>(&v, 1));
      } catch (const Error&) {
        ++failed;
      }
      const double o = spec.scalar ? spec.scalar(x) : std::nan("");
      if (std::isfinite(v) && std::isfinite(o)) max_err = std::max(max_err, std::abs(v - o));
      csv += csv_number(e);
      for (int i = 0; i < n; ++i) csv += "," + csv_number(x(i));
      csv += "," + csv_number(v) + "," + csv_number(o) + "," + csv_number(v - o) + "\n";
    }
    levels.push_back({{"eps", e}, {"max_abs_error", spec.scalar ? json(max_err) : json(nullptr)}, {"failed_points", failed}});
  }
  rec.results["levels"] = levels;
  rec.tables["grid"] = csv;
  return rec;
}

}  // namespace distgeom
