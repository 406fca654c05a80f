#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"
#include "experiments_internal.hpp"

#include <cmath>

namespace distgeom {

using nlohmann::json;
using namespace detail;

namespace {

// Closed-form L_X T for T = frame_tensor and X = shear_flow:
// X^c d_c T^a_b - T^c_b d_c X^a + T^a_c d_b X^c.
void frame_tensor_lie(const Point& y, std::span<double> o) {
  const double t[2][2] = {{std::cos(y(1)), y(0)}, {y(1) * y(1), 1.0 + std::sin(y(0))}};
  // dt[c][a][b] = d_c T^a_b
  const double dt[2][2][2] = {{{0.0, 1.0}, {0.0, std::cos(y(0))}}, {{-std::sin(y(1)), 0.0}, {2.0 * y(1), 0.0}}};
  const double x[2] = {1.0 + 0.3 * y(1) * y(1), 0.2 * std::sin(y(0))};
  // dx[a][c] = d_c X^a
  const double dx[2][2] = {{0.0, 0.6 * y(1)}, {0.2 * std::cos(y(0)), 0.0}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int c = 0; c < 2; ++c) s += x[c] * dt[c][a][b] - t[c][b] * dx[a][c] + t[a][c] * dx[c][b];
      o[a * 2 + b] = s;
    }
}

Tensor components_for(const json& t, const std::string& ctx, Valence v) {
  const std::vector<double> c = field_numbers(t, "components", ctx);
  if (c.size() != component_count(2, v))
    throw ConfigError("config field '" + ctx + ".components' must have " + std::to_string(component_count(2, v)) + " entries");
  return Tensor(2, v, c);
}

}  // namespace

RunRecord run_commutation(const Config& cfg, const NetOverride& ov) {
  const EpsNet net = net_from_config(cfg, ov);
  const Chart chart = Chart::cube(2, cfg.number_or("chart.half_width", 1.0));
  const std::vector<SmoothingChoice> choices = choices_from_config(cfg, chart);
  const std::vector<TestDensity> profiles = densities_from_config(cfg, 2, Valence{0, 0});
  const AssociationOptions opts = association_options(cfg);
  const EmbeddingQuadrature quad = embedding_quadrature(cfg);
  const double k_half = cfg.number_or("checks.grid_half_width", 0.4);
  const Box k = centered_box(2, k_half);
  RunRecord rec = start_record(cfg, "commute", net);
  json cases = json::array();
  int idx = 0;
  for (const json& c : cfg.tables("cases")) {
    const std::string ctx = "cases[" + std::to_string(idx++) + "]";
    const std::string kind = field_string(c, "kind", ctx);
    const std::string label = field_string_or(c, "label", kind + std::to_string(idx - 1));
    json cj = {{"label", label}, {"kind", kind}};

    if (kind == "sigma_equality") {
      const TensorField f = corpus_smooth("frame_tensor", chart);
      const VectorField x = corpus_vector("shear_flow", 2);
      const GeneralizedField lhs = gen_lie_derivative(sigma(f, "frame_tensor"), x);
      const TensorField exact(chart, Valence{1, 1}, frame_tensor_lie);
      const double tol = field_number_or(c, "tolerance", 1e-6);
      double worst = 0.0;
      json per = json::array();
      for (const SmoothingChoice& ch : choices)
        for (double e : net.values()) {
          const double d = sup_difference(lhs.represent(ch, e), exact, k, 7);
          worst = std::max(worst, d);
          per.push_back({{"choice", ch.label}, {"eps", e}, {"sup_difference", d}});
        }
      cj["sup_differences"] = per;
      rec.checks.push_back(make_check("sigma_equality/" + label, worst <= tol, {{"worst", worst}, {"tolerance", tol}}));
      cases.push_back(cj);
      continue;
    }

    const VectorField x = corpus_vector(field_string(c, "vector", ctx), 2);
    RoughTensorField s = corpus_rough(field_string(c, "field", ctx), chart);
    GeneralizedField t = iota(s, quad);
    RoughTensorField paired = s;
    if (kind == "contraction") {
      // <S, w> with w = (cos x2, 1 + x1^2): contraction of iota(S) (x) sigma(w).
      const TensorField w(chart, Valence{0, 1}, [](const Point& y, std::span<double> o) {
        o[0] = std::cos(y(1));
        o[1] = 1.0 + y(0) * y(0);
      });
      t = contract(tensor_product(t, sigma(w, "w")), 0, 0);
      std::vector<Plane> kinks = s.kinks();
      paired = RoughTensorField::loc_integrable(
          s.chart(), Valence{0, 0},
          [s, w](const Point& y, std::span<double> o) {
            double sv[2], wv[2];
            s.evaluate(y, sv);
            w.evaluate(y, wv);
            o[0] = sv[0] * wv[0] + sv[1] * wv[1];
          },
          kinks, "S.w");
    } else if (kind != "lie_iota") {
      throw ConfigError("config field '" + ctx + ".kind' must be sigma_equality, lie_iota or contraction");
    }
    const GeneralizedField lhs = gen_lie_derivative(t, x);
    const Valence dual = lhs.valence().dual();
    const std::string rhs_name = field_string_or(c, "rhs", "");
    std::optional<GeneralizedField> rhs;
    if (rhs_name == "zero")
      rhs = sigma(TensorField::zero(chart, lhs.valence()), "0");
    else if (!rhs_name.empty())
      rhs = iota(corpus_rough(rhs_name, chart), quad);

    json assoc = json::array();
    for (std::size_t ip = 0; ip < profiles.size(); ++ip) {
      const TestDensity psi = dual.rank() == 0 ? profiles[ip] : TestDensity::tensor_valued(profiles[ip], components_for(c, ctx, dual));
      // <L_X S, Psi> = -<S, L_X Psi> for a density Psi.
      const double target = -paired.pair(density_lie_derivative(psi, x));
      const AssociationSuite sl = associate(lhs, psi, target, choices, net, opts);
      json aj = {{"psi", ip}, {"target", target}, {"lie_of_iota", sl.to_json()}};
      for (const AssociationReport& r : sl.reports)
        rec.checks.push_back(make_check("association/" + label + "/psi" + std::to_string(ip) + "/" + r.choice,
                                        r.verdict == AssociationReport::Verdict::associated,
                                        {{"limit", r.extrapolated.limit}, {"target", target},
                                         {"convergence_slope", r.convergence.slope}}));
      if (rhs && rhs_name != "zero") {
        const AssociationSuite sr = associate(*rhs, psi, target, choices, net, opts);
        aj["iota_of_lie"] = sr.to_json();
        for (const AssociationReport& r : sr.reports)
          rec.checks.push_back(make_check("association_rhs/" + label + "/psi" + std::to_string(ip) + "/" + r.choice,
                                          r.verdict == AssociationReport::Verdict::associated,
                                          {{"limit", r.extrapolated.limit}, {"target", target}}));
      }
      assoc.push_back(aj);
    }
    cj["associations"] = assoc;
    if (rhs) {
      // Pointwise comparison of L^_X iota(S) and iota(L_X S) on K.
      json per = json::array();
      double worst = 0.0, scale = 0.0;
      for (const SmoothingChoice& ch : choices)
        for (double e : net.values()) {
          const TensorField l = lhs.represent(ch, e);
          const double d = sup_difference(l, rhs->represent(ch, e), k, 7);
          const double sz = sup_difference(l, TensorField::zero(chart, l.valence()), k, 7);
          worst = std::max(worst, d);
          scale = std::max(scale, sz);
          per.push_back({{"choice", ch.label}, {"eps", e}, {"sup_difference", d}, {"sup_lhs", sz}});
        }
      cj["pointwise"] = per;
      const double tol = field_number_or(c, "pointwise_tolerance", 1e-4);
      rec.checks.push_back(make_check("pointwise/" + label, worst <= tol * std::max(1.0, scale),
                                      {{"worst", worst}, {"sup_lhs", scale}, {"tolerance", tol}},
                                      c.contains("pointwise_tolerance")));
    }
    cases.push_back(cj);
  }
  if (cases.empty()) throw ConfigError("missing required config field 'cases'");
  rec.results["cases"] = cases;
  return rec;
}

}  // namespace distgeom
