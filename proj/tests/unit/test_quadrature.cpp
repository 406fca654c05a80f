#include "doctest.h"

#include "distgeom/errors.hpp"
#include "distgeom/quadrature.hpp"

#include <cmath>

using namespace distgeom;

TEST_CASE("gauss rule integrates polynomials of degree 2n-1 exactly") {
  for (int n : {1, 4, 8, 16}) {
    const GaussRule& g = gauss_legendre(n);
    for (int k = 0; k < 2 * n; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("composite rule splits at breakpoints") {
  const double br[] = {0.3};
  const AxisRule r = composite_rule(0.0, 1.0, br, 2, 4);
  CHECK(r.edges.size() == 5);
  CHECK(r.edges[2] == doctest::Approx(0.3));
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::abs(r.nodes[i] - 0.3);
  CHECK(s == doctest::Approx(0.5 * 0.09 + 0.5 * 0.49).epsilon(1e-14));
}

TEST_CASE("duffy rule integrates 1/|y| over a square with the singular corner") {
  // int_[0,1]^2 1/|y| dy = 2 asinh(1)
  const Box cell(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
  double s = 0.0;
  duffy_rule(cell, make_point({0.0, 0.0}), 10, [&](const Point& y, double w) { s += w / y.norm(); });
  CHECK(s == doctest::Approx(2.0 * std::asinh(1.0)).epsilon(1e-12));
}

TEST_CASE("graded cells tile the root and refine toward a focus") {
  GradedOptions g;
  g.min_cell = 1e-3;
  g.focus_points.push_back(make_point({0.1, -0.2}));
  g.focus_planes.push_back({0, 0.35});
  g.focus_boxes.push_back(Box::around(make_point({-0.5, 0.5}), 0.1));
  const Box root(make_point({-1.0, -1.0}), make_point({1.0, 1.0}));
  double area = 0.0, smallest = 1.0;
  for (const Box& c : graded_cells(root, g)) {
    area += (c.upper - c.lower).prod();
    smallest = std::min(smallest, c.max_side());
  }
  CHECK(area == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(smallest <= 1e-3);
  const double v = integrate_graded([](const Point& y) { return std::exp(y(0)) * y(1) * y(1); }, root, g);
  CHECK(v == doctest::Approx((std::exp(1.0) - std::exp(-1.0)) * 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("integrate rejects non-finite samples") {
  const Box b(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
  CHECK_THROWS_AS(integrate([](const Point&) { return std::nan(""); }, b, 2), IntegrationPoisonedError);
}
