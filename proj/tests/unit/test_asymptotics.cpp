#include "doctest.h"

#include "distgeom/asymptotics.hpp"
#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"

#include <cmath>

using namespace distgeom;

TEST_CASE("Richardson extrapolation recovers the limit and the order") {
  const EpsNet net{0.1, 0.5, 5};
  const std::vector<double> eps = net.values();
  std::vector<double> v;
  for (double e : eps) v.push_back(3.0 + 2.0 * e * e);
  const RichardsonResult r = richardson(eps, v);
  CHECK(r.auto_detected);
  CHECK(r.order == doctest::Approx(2.0));
  CHECK(r.limit == doctest::Approx(3.0).epsilon(1e-12));
  const RichardsonResult fixed = richardson(eps, v, 1.0);
  CHECK_FALSE(fixed.auto_detected);
}

TEST_CASE("slope classification") {
  const auto verdict = [](double slope, double residual = 0.0) {
    LogLogFit f;
    f.slope = slope;
    f.residual = residual;
    f.points = 6;
    return classify_slope(f).to_string();
  };
  CHECK(verdict(-2.0) == "moderate(2)");
  CHECK(verdict(-2.15) == "moderate(2)");
  CHECK(verdict(-2.3) == "moderate(3)");
  CHECK(verdict(-0.1) == "moderate(0)");
  CHECK(verdict(0.85) == "negligible_to_order(1)");
  CHECK(verdict(2.9) == "negligible_to_order(3)");
  CHECK(verdict(-2.0, 0.6) == "inconclusive");
  LogLogFit zero;
  zero.exact_zero = true;
  CHECK(classify_slope(zero).to_string() == "negligible_to_all_orders");
}

TEST_CASE("association of synthetic pairing sequences") {
  const EpsNet net{0.1, 0.5, 6};
  AssociationOptions opts;
  opts.abs_tol = 1e-6;
  opts.rel_tol = 1e-4;
  const auto conv = [](double e) { return 1.0 + e * e; };
  CHECK(associate_values("q", "c", "p", conv, 1.0, net, opts).verdict == AssociationReport::Verdict::associated);
  CHECK(associate_values("q", "c", "p", conv, 1.1, net, opts).verdict == AssociationReport::Verdict::not_associated);
  const AssociationReport none = associate_values("q", "c", "p", conv, std::nullopt, net, opts);
  CHECK(none.verdict == AssociationReport::Verdict::associated);
  CHECK(none.extrapolated.limit == doctest::Approx(1.0).epsilon(1e-10));
  const auto flat = [](double) { return 0.25; };
  CHECK(associate_values("q", "c", "p", flat, 0.25, net, opts).verdict == AssociationReport::Verdict::associated);
  const auto diverge = [](double e) { return 1.0 / e; };
  CHECK(associate_values("q", "c", "p", diverge, std::nullopt, net, opts).verdict !=
        AssociationReport::Verdict::associated);
}

TEST_CASE("failing levels are recorded") {
  const EpsNet net{0.1, 0.5, 4};
  const auto f = [](double e) -> double {
    if (e < 0.02) throw DegenerateMetricError("det below floor");
    return e;
  };
  const AssociationReport r = associate_values("q", "c", "p", f, 0.0, net);
  CHECK(r.failures.size() == 1);
  CHECK(r.pairings.size() == 3);
}

TEST_CASE("two-regime fit separates inner and outer power laws") {
  std::vector<DecaySample> s;
  for (double e : {0.1, 0.05, 0.025})
    for (double u : {0.2, 0.4, 0.8, 1.2, 3.0, 4.0, 6.0, 8.0}) {
      const double r = u * e;
      s.push_back({e, r, u < 2.0 ? 3.0 * std::pow(e, -2) * std::pow(r, 0.5) : 0.7 * e * e * std::pow(r, -4)});
    }
  const RegimeFit f = fit_regimes(s, 2.0);
  CHECK(f.inner.alpha == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(f.inner.beta == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(f.outer.alpha == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f.outer.beta == doctest::Approx(-4.0).epsilon(1e-9));
}

TEST_CASE("scaling exponents of sigma and of an embedded delta") {
  const Chart chart = Chart::cube(2, 1.0);
  const SmoothingChoice c = make_choice(chart, 0, "identity");
  const Box k = Box::around(Point::Zero(2), 0.4);
  const EpsNet net{0.1, 0.5, 5};
  const TensorField f(chart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = 2.0 + y(0); });
  const ScalingReport s = scaling_exponent(sigma(f), c, k, net);
  CHECK(s.fit.slope == doctest::Approx(0.0).scale(1.0));
  CHECK(s.verdict.to_string() == "moderate(0)");
  const GeneralizedField d = iota(RoughTensorField::delta(chart, make_point({0.03, 0.01}), Tensor::scalar(1.0)));
  const ScalingReport r = scaling_exponent(d, c, k, net);
  CHECK(r.fit.slope == doctest::Approx(-2.0).epsilon(0.02));
  CHECK(r.verdict.to_string() == "moderate(2)");
}

TEST_CASE("pairing a delta representative gives the delta weight") {
  const Chart chart = Chart::cube(2, 1.0);
  const SmoothingChoice c = make_choice(chart, 2, "identity");
  const RoughTensorField delta = RoughTensorField::delta(chart, make_point({0.05, -0.02}), Tensor::scalar(2.0));
  const TestDensity psi = TestDensity::plateau(Point::Zero(2), 0.2, 0.5, 1.0);
  const GeneralizedField d = iota(delta);
  for (double eps : {0.05, 0.0125}) {
    const double p = pair_field(d.represent(c, eps), psi, d.focus(), eps);
    CHECK(p == doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK(delta.pair(psi) == doctest::Approx(2.0));
}

TEST_CASE("pairing of a smooth field matches a direct integral") {
  const Chart chart = Chart::cube(2, 1.0);
  const TensorField f(chart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::cos(y(0)) * y(1) + 1.0; });
  const TestDensity psi = TestDensity::bump(make_point({0.1, 0.0}), 0.5, 1.0);
  const double direct = integrate([&](const Point& y) { return f(y)[0] * psi(y)[0]; }, psi.support(), 20, 16);
  CHECK(pair_smooth(f, psi) == doctest::Approx(direct).epsilon(1e-8));
  CHECK(pair_field(f, psi, Focus{}, 0.1) == doctest::Approx(direct).epsilon(1e-6));
}
