#include "doctest.h"

#include "distgeom/chart.hpp"
#include "distgeom/errors.hpp"

#include <cmath>

using namespace distgeom;

namespace {

const Chart kChart = Chart::cube(2, 1.0);

VectorField rotation() {
  Mat m(2, 2);
  m << 0.0, -1.0, 1.0, 0.0;
  return VectorField::affine(m, Point::Zero(2), "rotation");
}

}  // namespace

TEST_CASE("box geometry") {
  const Box b = Box::around(make_point({0.5, 0.0}), 0.25);
  CHECK(b.contains(make_point({0.6, 0.1})));
  CHECK_FALSE(b.contains(make_point({0.6, 0.1}), 0.2));
  CHECK(b.distance_to(make_point({1.0, 0.0})) == doctest::Approx(0.25));
  CHECK(Chart::cube(3, 1.0).diameter() == doctest::Approx(2.0 * std::sqrt(3.0)));
}

TEST_CASE("test densities") {
  const TestDensity b = TestDensity::bump(make_point({0.1, 0.2}), 0.3, 2.0);
  CHECK(b(make_point({0.1, 0.2}))[0] == doctest::Approx(2.0));
  CHECK(b(make_point({0.1, 0.55}))[0] == 0.0);
  const TestDensity p = TestDensity::plateau(Point::Zero(2), 0.2, 0.5, 1.5);
  CHECK(p(make_point({0.15, 0.0}))[0] == 1.5);
  CHECK(p(make_point({0.0, 0.5}))[0] == 0.0);
  const TestDensity t = TestDensity::tensor_valued(b, Tensor::covector(make_point({1.0, -2.0})));
  CHECK(t.valence() == Valence{0, 1});
  CHECK(t(make_point({0.1, 0.2}))[1] == doctest::Approx(-4.0));
}

TEST_CASE("central differences are second order") {
  const TensorField f(kChart, Valence{0, 0}, [](const Point& x, std::span<double> o) { o[0] = std::sin(x(0)) * x(1); });
  const Point x = make_point({0.3, 0.7});
  const double exact = std::cos(0.3) * 0.7;
  const double e1 = std::abs(differentiate(f, 0, 1e-2)(x)[0] - exact);
  const double e2 = std::abs(differentiate(f, 0, 5e-3)(x)[0] - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.01));
  CHECK_THROWS_AS(differentiate(f, 0, 0.1)(make_point({0.95, 0.0})), BoundaryProximityError);
}

TEST_CASE("Lie derivative of a vector field is the bracket") {
  // Y = (x1^2, 0), X = rotation: [X, Y] = (-2 x1 x2, -x1^2).
  const TensorField y(kChart, Valence{1, 0}, [](const Point& p, std::span<double> o) {
    o[0] = p(0) * p(0);
    o[1] = 0.0;
  });
  const Point p = make_point({0.4, -0.3});
  const Tensor l = lie_derivative(y, rotation())(p);
  CHECK(l[0] == doctest::Approx(-2.0 * 0.4 * -0.3).epsilon(1e-8));
  CHECK(l[1] == doctest::Approx(-0.16).epsilon(1e-8));
}

TEST_CASE("Lie derivative of a covector field") {
  // w = x2 dx1, X = rotation: L_X w = x1 dx1 - x2 dx2.
  const TensorField w(kChart, Valence{0, 1}, [](const Point& p, std::span<double> o) {
    o[0] = p(1);
    o[1] = 0.0;
  });
  const Point p = make_point({0.25, 0.6});
  const Tensor l = lie_derivative(w, rotation())(p);
  CHECK(l[0] == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(l[1] == doctest::Approx(-0.6).epsilon(1e-8));
}

TEST_CASE("exact and finite-difference jets agree") {
  const TensorField f(
      kChart, Valence{0, 0}, [](const Point& x, std::span<double> o) { o[0] = std::exp(x(0)) * x(1); },
      Smoothness::closed_form, 0.0, [](const Point& x, int order, Jet& j) {
        j.resize(2, 1, order);
        const double e = std::exp(x(0));
        j.value[0] = e * x(1);
        if (order >= 1) {
          j.first[0] = e * x(1);
          j.first[1] = e;
        }
        if (order >= 2) {
          j.second[0] = e * x(1);
          j.second[1] = j.second[2] = e;
          j.second[3] = 0.0;
        }
      });
  const Point x = make_point({0.2, 0.5});
  const Jet exact = f.jet(x, 2);
  const Jet fd = fd_jet(f, x, 2, 1e-4, 1e-3);
  for (int c = 0; c < 2; ++c) CHECK(fd.d1(c, 0) == doctest::Approx(exact.d1(c, 0)).epsilon(1e-7));
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) CHECK(fd.d2(c, d, 2, 0) == doctest::Approx(exact.d2(c, d, 2, 0)).epsilon(1e-5));
}

TEST_CASE("linear combination keeps exact jets") {
  const TensorField a = TensorField::constant(kChart, Tensor::scalar(2.0));
  const TensorField b = TensorField::zero(kChart, Valence{0, 0});
  const TensorField c = linear_combination(3.0, a, -1.0, b);
  CHECK(c(make_point({0.1, 0.1}))[0] == doctest::Approx(6.0));
  CHECK(scaled(a, 0.5)(Point::Zero(2))[0] == doctest::Approx(1.0));
}
