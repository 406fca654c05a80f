#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"
#include "experiments_internal.hpp"

#include <cmath>

namespace distgeom {

using nlohmann::json;
using namespace detail;

namespace {

std::vector<double> decay_radii(const Config& cfg) {
  const double lo = cfg.number_or("decay.radii_min", 2e-4);
  const double hi = cfg.number_or("decay.radii_max", 0.5);
  const double f = cfg.number_or("decay.radii_factor", 1.5);
  if (!(lo > 0.0 && hi > lo && f > 1.0)) throw ConfigError("config table 'decay' needs 0 < radii_min < radii_max and radii_factor > 1");
  std::vector<double> r;
  for (double x = lo; x <= hi * (1.0 + 1e-12); x *= f) r.push_back(x);
  return r;
}

json fit2(const PowerLaw2Fit& f) {
  return {{"alpha", f.alpha}, {"beta", f.beta}, {"residual", f.residual}, {"points", f.points}, {"sparse", f.sparse}};
}

}  // namespace

RunRecord run_cone(const Config& cfg, const NetOverride& ov) {
  const double a = cfg.number("cone.A");
  const double hw = cfg.number_or("cone.half_width", 1.0);
  if (!(hw > 0.0)) throw ConfigError("config field 'cone.half_width' must be positive");
  const bool density = cfg.boolean_or("cone.density_factor", true);
  const EpsNet net = net_from_config(cfg, ov);
  const Chart chart = Chart::cube(2, hw);
  const EmbeddingQuadrature quad = embedding_quadrature(cfg);
  const GeneralizedMetric g = cone_metric(chart, a, quad);
  const CurvatureBundle cb = curvature(levi_civita(g, BackgroundConnection::flat(chart)), g);
  const std::vector<SmoothingChoice> choices = choices_from_config(cfg, chart);
  const std::vector<TestDensity> psis = densities_from_config(cfg, 2, Valence{0, 0});
  const AssociationOptions opts = association_options(cfg);
  const double inv_rel = cfg.number_or("checks.invariance_rel", opts.rel_tol);

  RunRecord rec = start_record(cfg, "cone", net);
  rec.results["A"] = a;
  rec.results["deficit_angle"] = 2.0 * M_PI * (1.0 - a);
  rec.results["weight"] = cone_weight(a);
  rec.results["pairing"] = density ? "R sqrt|g|" : "R";
  const GeneralizedField& quantity = density ? cb.scalar_density : cb.scalar;

  json assoc = json::array();
  const bool pairings = cfg.boolean_or("cone.pairings", true);
  for (std::size_t i = 0; pairings && i < psis.size(); ++i) {
    const TestDensity& psi = psis[i];
    const double psi0 = psi(Point::Zero(2))[0];
    const double target = cone_weight(a) * psi0;
    const AssociationSuite s = associate(quantity, psi, target, choices, net, opts);
    json j = s.to_json();
    j["psi_at_origin"] = psi0;
    j["target"] = target;
    assoc.push_back(j);
    const std::string tag = "psi" + std::to_string(i);
    for (const AssociationReport& r : s.reports) {
      rec.checks.push_back(make_check("association/" + tag + "/" + r.choice,
                                      r.verdict == AssociationReport::Verdict::associated,
                                      {{"limit", r.extrapolated.limit},
                                       {"target", target},
                                       {"relative_error", target != 0.0 ? std::abs(r.extrapolated.limit - target) / std::abs(target)
                                                                        : std::abs(r.extrapolated.limit)},
                                       {"convergence_slope", r.convergence.slope},
                                       {"failures", r.failures.size()}}));
      rec.tables["pairings_" + tag + "_" + std::to_string(&r - s.reports.data())] = to_csv(r);
    }
    if (s.reports.size() > 1) {
      double lo = s.reports[0].extrapolated.limit, hi = lo;
      for (const auto& r : s.reports) {
        lo = std::min(lo, r.extrapolated.limit);
        hi = std::max(hi, r.extrapolated.limit);
      }
      const double tol = opts.abs_tol + inv_rel * std::abs(target);
      rec.checks.push_back(make_check("choice_invariance/" + tag, hi - lo <= tol, {{"limit_spread", hi - lo}, {"tolerance", tol}}));
    }
    if (i == 0 && !s.reports.empty() && psi0 != 0.0)
      rec.results["linearity_point"] = {{"one_minus_a", 1.0 - a}, {"normalized_limit", s.reports[0].extrapolated.limit / psi0}};
  }
  if (pairings) rec.results["associations"] = assoc;

  if (cfg.boolean_or("cone.compare_plain", false)) {
    const GeneralizedField& other = density ? cb.scalar : cb.scalar_density;
    const double target = cone_weight(a) * psis[0](Point::Zero(2))[0];
    const AssociationSuite s = associate(other, psis[0], target, {choices[0]}, net, opts);
    rec.results["comparison_pairing"] = s.to_json();
    rec.results["comparison_pairing"]["pairing"] = density ? "R" : "R sqrt|g|";
    const AssociationReport& r = s.reports[0];
    rec.checks.push_back(make_check("comparison_pairing", r.verdict == AssociationReport::Verdict::associated,
                                    {{"limit", r.extrapolated.limit}, {"target", target}}, false));
  }

  if (cfg.boolean_or("decay.enabled", false)) {
    DecayOptions dopt;
    dopt.r0 = cfg.number_or("decay.r0", dopt.r0);
    dopt.r0_sweep = cfg.numbers_or("decay.r0_sweep", dopt.r0_sweep);
    dopt.angles = cfg.integer_or("decay.angles", dopt.angles);
    const EpsNet dnet = cfg.has("decay.net") ? net_from_config(cfg, {}, "decay.net") : net;
    const std::vector<double> radii = decay_radii(cfg);
    const GeneralizedField& field = cfg.string_or("decay.quantity", "scalar") == "scalar" ? cb.scalar : cb.scalar_density;
    const DecayProfile p = decay_profile(field, choices[0], Point::Zero(2), radii, dnet, dopt);
    rec.results["decay"] = p.to_json();
    rec.results["decay"]["net"] = dnet.to_json();
    rec.tables["decay"] = to_csv(p);
    const bool gating = cfg.boolean_or("decay.gating", true);
    const double tol = cfg.number_or("decay.tolerance", 0.3);
    const double in_alpha = cfg.number_or("decay.inner_alpha", -2.0);
    const double out_alpha = cfg.number_or("decay.outer_alpha", 1.0);
    const double out_beta = cfg.number_or("decay.outer_beta", -3.0);
    const bool inner_ok = !p.fit.inner.sparse && std::abs(p.fit.inner.alpha - in_alpha) <= tol;
    const bool outer_ok = !p.fit.outer.sparse && std::abs(p.fit.outer.alpha - out_alpha) <= tol &&
                          std::abs(p.fit.outer.beta - out_beta) <= tol;
    rec.checks.push_back(make_check("decay_inner", inner_ok,
                                    {{"fit", fit2(p.fit.inner)}, {"expected_alpha", in_alpha}, {"tolerance", tol}}, gating));
    rec.checks.push_back(make_check("decay_outer", outer_ok,
                                    {{"fit", fit2(p.fit.outer)}, {"expected_alpha", out_alpha}, {"expected_beta", out_beta},
                                     {"tolerance", tol}},
                                    gating));
  }
  return rec;
}

}  // namespace distgeom
