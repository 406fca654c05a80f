#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"
#include "experiments_internal.hpp"

#include <cmath>

namespace distgeom {

using nlohmann::json;
using namespace detail;

namespace {

// "iota:NAME", "sigma:NAME" or "iota_minus_sigma:NAME".
GeneralizedField corpus_expression(const std::string& spec, const Chart& chart, EmbeddingQuadrature quad) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("field expression '" + spec + "' must look like iota:NAME");
  const std::string op = spec.substr(0, colon);
  const std::string name = spec.substr(colon + 1);
  if (op == "iota") return iota(corpus_rough(name, chart), quad);
  if (op == "sigma") return sigma(corpus_smooth(name, chart), name);
  if (op == "iota_minus_sigma") {
    const TensorField f = corpus_smooth(name, chart);
    return (iota(RoughTensorField::from_smooth(f, name), quad) - sigma(f, name)).relabeled("(iota-sigma)(" + name + ")");
  }
  throw ConfigError("field expression '" + spec + "' has unknown operator '" + op + "'");
}

std::vector<std::string> string_list(const json& t, const std::string& key, const std::string& ctx) {
  if (!t.contains(key)) return {};
  if (!t[key].is_array()) throw ConfigError("config field '" + ctx + "." + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const json& e : t[key]) {
    if (!e.is_string()) throw ConfigError("config field '" + ctx + "." + key + "' must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

RunRecord run_association(const Config& cfg, const NetOverride& ov) {
  const EpsNet net = net_from_config(cfg, ov);
  const Chart chart = Chart::cube(2, cfg.number_or("chart.half_width", 1.0));
  const std::vector<SmoothingChoice> choices = choices_from_config(cfg, chart);
  const AssociationOptions opts = association_options(cfg);
  const EmbeddingQuadrature quad = embedding_quadrature(cfg);
  const std::vector<json> fields = cfg.tables("fields");
  if (fields.empty()) throw ConfigError("missing required config field 'fields'");
  RunRecord rec = start_record(cfg, "associate", net);
  json out = json::array();
  int fi = 0;
  for (const json& f : fields) {
    const std::string ctx = "fields[" + std::to_string(fi++) + "]";
    const std::string name = field_string(f, "name", ctx);
    const RoughTensorField s = corpus_rough(name, chart);
    const GeneralizedField t = iota(s, quad);
    const std::vector<TestDensity> psis = densities_from_config(cfg, 2, s.valence().dual());
    json fj = {{"field", name}, {"tests", json::array()}};
    for (std::size_t ip = 0; ip < psis.size(); ++ip) {
      const double target = s.pair(psis[ip]);
      const AssociationSuite suite = associate(t, psis[ip], target, choices, net, opts);
      json j = suite.to_json();
      j["target"] = target;
      fj["tests"].push_back(j);
      const std::string tag = name + "/psi" + std::to_string(ip);
      for (const AssociationReport& r : suite.reports) {
        rec.checks.push_back(make_check("association/" + tag + "/" + r.choice,
                                        r.verdict == AssociationReport::Verdict::associated,
                                        {{"limit", r.extrapolated.limit}, {"target", target},
                                         {"convergence_slope", r.convergence.slope}}));
        rec.tables["pairings_" + name + "_psi" + std::to_string(ip) + "_" + std::to_string(&r - suite.reports.data())] = to_csv(r);
      }
      if (choices.size() > 1)
        rec.checks.push_back(make_check("spread_shrinks/" + tag, suite.spread_shrinks, {{"spread", suite.spread}}));
    }
    out.push_back(fj);
  }
  rec.results["fields"] = out;
  return rec;
}

RunRecord run_embedding(const Config& cfg, const NetOverride& ov) {
  const EpsNet net = net_from_config(cfg, ov);
  const Chart chart = Chart::cube(2, cfg.number_or("chart.half_width", 1.0));
  const EmbeddingQuadrature quad = embedding_quadrature(cfg);
  const Box k = centered_box(2, cfg.number_or("checks.grid_half_width", 0.5));
  const int samples = cfg.integer_or("checks.samples", 7);
  const double tol = cfg.number_or("checks.slope_tolerance", 0.2);
  const std::vector<json> cases = cfg.tables("cases");
  if (cases.empty()) throw ConfigError("missing required config field 'cases'");
  RunRecord rec = start_record(cfg, "embed", net);
  const std::vector<double> eps = net.values();
  json out = json::array();
  int ci = 0;
  for (const json& c : cases) {
    const std::string ctx = "cases[" + std::to_string(ci++) + "]";
    const std::string name = field_string(c, "field", ctx);
    const int q = field_integer_or(c, "kernel_q", 0);
    const SmoothingChoice choice = make_choice(chart, q, field_string_or(c, "transport", "identity"));
    const TensorField f = corpus_smooth(name, chart);
    const RoughTensorField rough = RoughTensorField::from_smooth(f, name);
    std::vector<double> sups(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) sups[i] = sup_difference(iota_at(rough, choice, eps[i], quad), f, k, samples);
    const LogLogFit fit = fit_loglog(eps, sups);
    const double min_slope = field_number_or(c, "min_slope", q + 1.0);
    const std::string tag = name + "/" + choice.label;
    out.push_back({{"field", name}, {"choice", choice.label}, {"eps", eps}, {"sup_difference", sups},
                   {"slope", fit.slope}, {"residual", fit.residual}, {"min_slope", min_slope}});
    rec.checks.push_back(make_check("consistency/" + tag, fit.slope >= min_slope - tol,
                                    {{"slope", fit.slope}, {"min_slope", min_slope}, {"tolerance", tol}}));
    std::string csv = "eps,sup_difference\n";
    for (std::size_t i = 0; i < eps.size(); ++i) csv += csv_number(eps[i]) + "," + csv_number(sups[i]) + "\n";
    rec.tables["consistency_" + std::to_string(ci - 1)] = csv;

    if (ci == 1) {
      // Grid dump of the first case at the coarsest and finest eps.
      const double half = cfg.number_or("grid.half_width", 0.5);
      const int gs = cfg.integer_or("grid.samples", 11);
      if (gs < 2) throw ConfigError("config field 'grid.samples' must be >= 2");
      std::string g = "eps,x1,x2";
      for (std::size_t m = 0; m < f.components(); ++m) g += ",iota_" + std::to_string(m) + ",exact_" + std::to_string(m);
      g += "\n";
      for (double e : {eps.front(), eps.back()}) {
        const TensorField r = iota_at(rough, choice, e, quad);
        std::vector<double> v(f.components()), w(f.components());
        for (int i = 0; i < gs; ++i)
          for (int j = 0; j < gs; ++j) {
            const Point x = make_point({-half + 2.0 * half * i / (gs - 1.0), -half + 2.0 * half * j / (gs - 1.0)});
            r.evaluate(x, v);
            f.evaluate(x, w);
            g += csv_number(e) + "," + csv_number(x(0)) + "," + csv_number(x(1));
            for (std::size_t m = 0; m < v.size(); ++m) g += "," + csv_number(v[m]) + "," + csv_number(w[m]);
            g += "\n";
          }
      }
      rec.tables["grid"] = g;
    }
  }
  rec.results["cases"] = out;
  return rec;
}

RunRecord run_exponents(const Config& cfg, const NetOverride& ov) {
  const EpsNet net = net_from_config(cfg, ov);
  const Chart chart = Chart::cube(2, cfg.number_or("chart.half_width", 1.0));
  const EmbeddingQuadrature quad = embedding_quadrature(cfg);
  ScalingOptions sopt;
  sopt.slope_tolerance = cfg.number_or("checks.slope_tolerance", sopt.slope_tolerance);
  sopt.residual_cutoff = cfg.number_or("checks.residual_cutoff", sopt.residual_cutoff);
  sopt.samples_per_axis = cfg.integer_or("checks.samples", sopt.samples_per_axis);
  sopt.focus_samples = cfg.integer_or("checks.focus_samples", sopt.focus_samples);
  const std::vector<json> cases = cfg.tables("cases");
  if (cases.empty()) throw ConfigError("missing required config field 'cases'");
  RunRecord rec = start_record(cfg, "exponents", net);
  std::map<std::string, std::string> verdicts;
  json out = json::array();
  int ci = 0;
  for (const json& c : cases) {
    const std::string ctx = "cases[" + std::to_string(ci++) + "]";
    const std::string label = field_string(c, "label", ctx);
    const int q = field_integer_or(c, "kernel_q", 0);
    const SmoothingChoice choice = make_choice(chart, q, field_string_or(c, "transport", "identity"));
    std::optional<GeneralizedField> t;
    if (c.contains("field")) {
      t = corpus_expression(field_string(c, "field", ctx), chart, quad);
    } else if (c.contains("product")) {
      for (const std::string& s : string_list(c, "product", ctx))
        t = t ? tensor_product(*t, corpus_expression(s, chart, quad)) : corpus_expression(s, chart, quad);
    } else if (c.contains("sum")) {
      for (const std::string& s : string_list(c, "sum", ctx))
        t = t ? *t + corpus_expression(s, chart, quad) : corpus_expression(s, chart, quad);
    }
    if (!t) throw ConfigError("config field '" + ctx + "' needs one of field, product or sum");
    for (const std::string& v : string_list(c, "lie", ctx)) t = gen_lie_derivative(*t, corpus_vector(v, 2));
    ScalingTest test;
    test.label = label;
    const std::string variation = field_string_or(c, "variation", "");
    if (variation == "kernel_axis0") {
      test.variation.kernel.push_back(KernelPerturbation::axis_derivative(2, MollifierProfile::make(q), 0));
    } else if (variation == "transport_bump") {
      Mat m(2, 2);
      m << 0.0, 1.0, -1.0, 0.5;
      test.variation.transport.push_back(TransportPerturbation::bump_matrix(m));
    } else if (!variation.empty()) {
      throw ConfigError("config field '" + ctx + ".variation' must be kernel_axis0 or transport_bump");
    }
    const std::vector<double> center = field_numbers_or(c, "k_center", {0.0, 0.0});
    if (center.size() != 2) throw ConfigError("config field '" + ctx + ".k_center' must have 2 entries");
    const Box k = Box::around(make_point({center[0], center[1]}), field_number_or(c, "k_half_width", 0.3));
    const ScalingReport r = scaling_exponent(*t, choice, k, net, test, sopt);
    verdicts[label] = r.verdict.to_string();
    json j = r.to_json();
    j["choice"] = choice.label;
    out.push_back(j);
    rec.tables["scaling_" + label] = to_csv(r);

    const std::string expect = field_string(c, "expect", ctx);
    bool ok = false;
    json detail = {{"verdict", r.verdict.to_string()}, {"slope", r.fit.slope}, {"residual", r.fit.residual}};
    using Kind = ScalingVerdict::Kind;
    if (expect == "moderate") {
      ok = r.verdict.kind == Kind::moderate || r.verdict.kind == Kind::negligible;
      if (c.contains("order")) {
        const int n = field_integer_or(c, "order", 0);
        ok = r.verdict.kind == Kind::moderate && r.verdict.order == n;
        detail["expected_order"] = n;
      }
    } else if (expect == "negligible") {
      const int m = field_integer_or(c, "min_order", 1);
      ok = r.verdict.kind == Kind::negligible && (r.verdict.order < 0 || r.verdict.order >= m);
      detail["min_order"] = m;
    } else if (expect == "same_as") {
      const std::string other = field_string(c, "other", ctx);
      if (!verdicts.count(other)) throw ConfigError("config field '" + ctx + ".other' must name an earlier case");
      ok = verdicts[other] == r.verdict.to_string();
      detail["other"] = other;
      detail["other_verdict"] = verdicts[other];
    } else {
      throw ConfigError("config field '" + ctx + ".expect' must be moderate, negligible or same_as");
    }
    if (c.contains("slope")) {
      const double s = field_number(c, "slope", ctx);
      const double st = field_number_or(c, "slope_tolerance", 0.2);
      ok = ok && std::abs(r.fit.slope - s) <= st;
      detail["expected_slope"] = s;
      detail["slope_tolerance"] = st;
    }
    rec.checks.push_back(make_check("exponent/" + label, ok, detail));
  }
  rec.results["cases"] = out;
  return rec;
}

}  // namespace distgeom
