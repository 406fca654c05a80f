#include "doctest.h"

#include "distgeom/kernels.hpp"

#include <cmath>

using namespace distgeom;

namespace {

// Independent fine composite rule on (-1, 1).
double profile_moment(const MollifierProfile& p, int k) {
  const GaussRule& g = gauss_legendre(24);
  const int cells = 400;
  double s = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double lo = -1.0 + 2.0 * c / cells, h = 2.0 / cells;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double t = lo + 0.5 * h * (g.nodes[i] + 1.0);
      s += 0.5 * h * g.weights[i] * p(t) * std::pow(t, k);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("mollifier profiles have unit mass and vanishing moments") {
  for (int q : {0, 2, 4, 6}) {
    const MollifierProfile p = MollifierProfile::make(q);
    CHECK(profile_moment(p, 0) == doctest::Approx(1.0).epsilon(1e-10));
    for (int k = 1; k <= q + 1; ++k) CHECK(std::abs(profile_moment(p, k)) < 1e-10);
    CHECK(p.moment(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(1.0) == 0.0);
    CHECK(p(-1.5) == 0.0);
  }
  // q = 0: the second moment does not vanish.
  CHECK(profile_moment(MollifierProfile::make(0), 2) > 0.01);
}

TEST_CASE("profile round-trips through json") {
  const MollifierProfile p = MollifierProfile::make(4);
  const MollifierProfile r = MollifierProfile::from_json(p.to_json());
  CHECK(r.coefficients() == p.coefficients());
  CHECK(r(0.3) == p(0.3));
}

TEST_CASE("profile derivatives match central differences") {
  const MollifierProfile p = MollifierProfile::make(2);
  const double h = 1e-5;
  for (double t : {-0.7, 0.1, 0.55}) {
    CHECK(p.value(t, 1) == doctest::Approx((p(t + h) - p(t - h)) / (2 * h)).epsilon(1e-7));
    CHECK(p.value(t, 2) == doctest::Approx((p.value(t + h, 1) - p.value(t - h, 1)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("product kernel has unit mass on its support box") {
  const SmoothingKernelFamily k = SmoothingKernelFamily::product(2, MollifierProfile::make(2));
  const Point x = make_point({0.1, -0.2});
  const double eps = 0.05;
  const double m = integrate([&](const Point& y) { return k(x, eps, y); }, k.support(x, eps), 20, 16);
  CHECK(m == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("axis weights with moment correction reproduce polynomial smoothing") {
  const MollifierProfile p = MollifierProfile::make(0);
  const double x = 0.2, eps = 0.1;
  const double br[] = {x};
  const AxisRule r = composite_rule(x - eps, x + eps, br, 2, 6);
  const AxisKernelWeights w = axis_kernel_weights(p, r, x, eps, 2, 11);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < r.nodes.size(); ++j) {
    const double y3 = std::pow(r.nodes[j], 3);
    s0 += w.w[0][j] * y3;
    s1 += w.w[1][j] * y3;
    s2 += w.w[2][j] * y3;
  }
  // int eps^-1 rho((y - x)/eps) y^3 dy = x^3 + 3 x eps^2 m2
  const double m2 = profile_moment(p, 2);
  CHECK(s0 == doctest::Approx(x * x * x + 3 * x * eps * eps * m2).epsilon(1e-12));
  CHECK(s1 == doctest::Approx(3 * x * x + 3 * eps * eps * m2).epsilon(1e-10));
  CHECK(s2 == doctest::Approx(6 * x).epsilon(1e-9));
}

TEST_CASE("kernel Lie derivative parts") {
  const SmoothingKernelFamily k = SmoothingKernelFamily::product(2, MollifierProfile::make(0));
  const VectorField xf(
      2, [](const Point& y) { return make_point({1.0 + 0.3 * y(1) * y(1), 0.2 * std::sin(y(0))}); },
      [](const Point& y) {
        Mat j(2, 2);
        j << 0.0, 0.6 * y(1), 0.2 * std::cos(y(0)), 0.0;
        return j;
      });
  const KernelLieDerivative l = kernel_lie_derivative(k, xf);
  const Point x = make_point({0.3, 0.4});
  const double eps = 0.05;
  const Box b = k.support(x, eps);
  auto mass = [&](const KernelPerturbation& p) {
    return integrate([&](const Point& y) { return p(x, eps, y); }, b, 12, 8);
  };
  // The density part is a divergence: its integral vanishes.
  CHECK(std::abs(mass(l.density_part)) < 1e-9);
  CHECK(std::abs(mass(l.total)) < 1e-9);
  // The advective part integrates to -<div X, omega_x> = -div X(x) + O(eps^2).
  CHECK(mass(l.advective_part) == doctest::Approx(-xf.divergence(x)).epsilon(1e-3));
  // Base-point part: X^c(x) d/dx^c of a unit-mass family integrates to 0.
  CHECK(std::abs(mass(l.base_point_part)) < 1e-9);
}

TEST_CASE("eps net values and validation") {
  EpsNet net{0.05, 0.5, 4};
  const std::vector<double> v = net.values();
  REQUIRE(v.size() == 4);
  CHECK(v[3] == doctest::Approx(0.00625));
  CHECK(net.smallest() == doctest::Approx(0.00625));
  EpsNet bad{0.05, 1.5, 4};
  CHECK_THROWS(bad.validate());
}
