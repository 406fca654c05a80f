#include "doctest.h"

#include "distgeom/embedding.hpp"
#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"

#include <cmath>

using namespace distgeom;

namespace {

const Chart kChart = Chart::cube(2, 1.0);

SmoothingChoice choice(int q, bool frame = false, double shear = 0.2) {
  return SmoothingChoice{frame ? TransportOperator::flat_frame(kChart, FlatteningMap::quadratic_shear(2, shear))
                               : TransportOperator::identity(kChart),
                         SmoothingKernelFamily::product(2, MollifierProfile::make(q)), "c"};
}

double value(const TensorField& f, const Point& x, std::size_t k = 0) { return f(x)[k]; }

}  // namespace

TEST_CASE("iota of a delta is the kernel at the delta point") {
  const Point p = make_point({0.05, -0.03});
  const RoughTensorField d = RoughTensorField::delta(kChart, p, Tensor::scalar(1.5));
  const SmoothingChoice c = choice(2);
  const MollifierProfile rho = MollifierProfile::make(2);
  const double eps = 0.04;
  for (const Point& x : {make_point({0.06, -0.01}), make_point({0.03, -0.05}), make_point({0.2, 0.0})}) {
    const double expect = 1.5 * rho((p(0) - x(0)) / eps) * rho((p(1) - x(1)) / eps) / (eps * eps);
    CHECK(value(iota_at(d, c, eps), x) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("iota is linear") {
  const RoughTensorField a = RoughTensorField::loc_integrable(
      kChart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::abs(y(0)) + y(1); }, {{0, 0.0}});
  const RoughTensorField b = RoughTensorField::delta(kChart, make_point({0.01, 0.02}), Tensor::scalar(0.7));
  const RoughTensorField s = a.scaled(2.0) + b.scaled(-3.0);
  const SmoothingChoice c = choice(0);
  const Point x = make_point({0.015, 0.0});
  const double lhs = value(iota_at(s, c, 0.05), x);
  const double rhs = 2.0 * value(iota_at(a, c, 0.05), x) - 3.0 * value(iota_at(b, c, 0.05), x);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("sigma does not depend on the smoothing choice") {
  const TensorField f(kChart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::sin(y(0) + y(1)); });
  const GeneralizedField s = sigma(f, "f");
  const Point x = make_point({0.3, -0.4});
  const double a = value(s.represent(choice(0), 0.1), x);
  const double b = value(s.represent(choice(2, true), 0.001), x);
  CHECK(a == b);
  CHECK(a == value(f, x));
}

TEST_CASE("kernels with vanishing moments reproduce low-degree polynomials") {
  // Moments 1..3 vanish for q = 2, so iota(x1^2 x2 + x2^3) equals the polynomial.
  const TensorField f(kChart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = y(0) * y(0) * y(1) + std::pow(y(1), 3); });
  const TensorField r = iota_at(RoughTensorField::from_smooth(f), choice(2), 0.1);
  const Point x = make_point({0.3, -0.2});
  CHECK(value(r, x) == doctest::Approx(value(f, x)).epsilon(1e-12));
  const Jet j = r.jet(x, 2);
  CHECK(j.d1(0, 0) == doctest::Approx(2 * 0.3 * -0.2).epsilon(1e-10));
  CHECK(j.d1(1, 0) == doctest::Approx(0.09 + 3 * 0.04).epsilon(1e-10));
  CHECK(j.d2(1, 1, 2, 0) == doctest::Approx(6 * -0.2).epsilon(1e-8));
}

TEST_CASE("iota of |x1| at the kink is eps times the first absolute moment") {
  const RoughTensorField k = RoughTensorField::loc_integrable(
      kChart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::abs(y(0)); }, {{0, 0.0}});
  const MollifierProfile rho = MollifierProfile::make(0);
  const double m = 2.0 * integrate([&](const Point& t) { return t(0) * rho(t(0)); },
                                   Box(make_point({0.0}), make_point({1.0})), 20, 64);
  const double eps = 0.03;
  CHECK(value(iota_at(k, choice(0), eps), make_point({0.0, 0.1})) == doctest::Approx(eps * m).epsilon(1e-6));
}

TEST_CASE("flat frame smoothing fixes parallel fields") {
  // v(y) = F(y)^-1 c is parallel for the flat connection, so the transported
  // average is v(x) for every eps.
  const FlatteningMap map = FlatteningMap::quadratic_shear(2, 0.2);
  const Point c = make_point({1.0, -0.5});
  const TensorField v(kChart, Valence{1, 0}, [map, c](const Point& y, std::span<double> o) {
    const Point w = map.jacobian(y).inverse() * c;
    o[0] = w(0);
    o[1] = w(1);
  });
  const TensorField r = iota_at(RoughTensorField::from_smooth(v), choice(0, true), 0.08);
  const Point x = make_point({0.3, 0.2});
  CHECK(value(r, x, 0) == doctest::Approx(value(v, x, 0)).epsilon(1e-12));
  CHECK(value(r, x, 1) == doctest::Approx(value(v, x, 1)).epsilon(1e-12));
}

TEST_CASE("cone matrix smoothing near the apex against brute-force quadrature") {
  const Chart apex = Chart::cube(2, 1.0, {Point::Zero(2)});
  const RoughTensorField m = RoughTensorField::loc_integrable(apex, Valence{0, 2}, cone_m);
  const SmoothingChoice c = choice(0);
  const double eps = 0.05;
  const Point x = make_point({0.02, 0.01});
  const Tensor got = iota_at(m, c, eps)(x);
  // Oracle: uniform Gauss cells on the four quadrants of the support around the apex.
  const Box b = Box::around(x, eps);
  for (int k = 0; k < 4; ++k) {
    double s = 0.0;
    for (int qx = 0; qx < 2; ++qx)
      for (int qy = 0; qy < 2; ++qy) {
        const Box q(make_point({qx ? 0.0 : b.lower(0), qy ? 0.0 : b.lower(1)}),
                    make_point({qx ? b.upper(0) : 0.0, qy ? b.upper(1) : 0.0}));
        s += integrate(
            [&](const Point& y) {
              double o[4];
              cone_m(y, o);
              return o[k] * c.kernel(x, eps, y);
            },
            q, 8, 60);
      }
    CHECK(got[k] == doctest::Approx(s).epsilon(1e-6));
  }
}

TEST_CASE("query points must keep away from the boundary") {
  const TensorField f(kChart, Valence{0, 0}, [](const Point&, std::span<double> o) { o[0] = 1.0; });
  const TensorField r = iota_at(RoughTensorField::from_smooth(f), choice(0), 0.1);
  CHECK_THROWS_AS(r(make_point({0.95, 0.0})), BoundaryProximityError);
}

TEST_CASE("pullback of a covector field is the chain rule") {
  Mat l(2, 2);
  l << 1.0, 0.3, -0.2, 0.8;
  const Diffeomorphism mu = Diffeomorphism::linear(l, make_point({0.05, 0.0}));
  // df for f = x1 x2.
  const TensorField df(kChart, Valence{0, 1}, [](const Point& y, std::span<double> o) {
    o[0] = y(1);
    o[1] = y(0);
  });
  const Chart src = Chart::cube(2, 0.5);
  const TensorField pb = pullback_field(df, mu, src);
  const Point x = make_point({0.2, -0.1});
  const Point y = mu.forward(x);
  const Point expect = l.transpose() * make_point({y(1), y(0)});
  CHECK(value(pb, x, 0) == doctest::Approx(expect(0)).epsilon(1e-12));
  CHECK(value(pb, x, 1) == doctest::Approx(expect(1)).epsilon(1e-12));
}

TEST_CASE("pullback of iota by a translation is iota of the translated field") {
  const Point b = make_point({0.1, -0.05});
  const Diffeomorphism mu = Diffeomorphism::translation(b);
  const RoughTensorField k = RoughTensorField::loc_integrable(
      kChart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::abs(y(0)) * (1.0 + y(1)); }, {{0, 0.0}});
  const Chart src = Chart::cube(2, 0.8);
  const RoughTensorField shifted = RoughTensorField::loc_integrable(
      src, Valence{0, 0}, [b](const Point& y, std::span<double> o) { o[0] = std::abs(y(0) + b(0)) * (1.0 + y(1) + b(1)); },
      {{0, -b(0)}});
  const SmoothingChoice cs{TransportOperator::identity(src), SmoothingKernelFamily::product(2, MollifierProfile::make(0)), "c"};
  const TensorField lhs = pullback_diffeo(iota(k), mu, src).represent(cs, 0.05);
  const Point x = make_point({-0.11, 0.2});
  CHECK(value(lhs, x) == doctest::Approx(value(iota_at(shifted, cs, 0.05), x)).epsilon(1e-7));
}

TEST_CASE("reference pairing of a kinked field against a separable density") {
  // |x1| against a product of 1D bumps: the integral factorizes.
  const RoughTensorField k = RoughTensorField::loc_integrable(
      kChart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::abs(y(0)); }, {{0, 0.0}});
  const MollifierProfile rho = MollifierProfile::make(0);
  const Box sup(make_point({-0.35, -0.4}), make_point({0.45, 0.4}));
  const TestDensity psi(2, Valence{0, 0}, sup, [&](const Point& y, std::span<double> o) {
    o[0] = rho((y(0) - 0.05) / 0.4) * rho(y(1) / 0.4);
  });
  const Box left(make_point({-0.35}), make_point({0.0})), right(make_point({0.0}), make_point({0.45}));
  const auto f = [&](const Point& t) { return std::abs(t(0)) * rho((t(0) - 0.05) / 0.4); };
  const double ix = integrate(f, left, 20, 32) + integrate(f, right, 20, 32);
  const double iy = integrate([&](const Point& t) { return rho(t(0) / 0.4); }, Box(make_point({-0.4}), make_point({0.4})), 20, 32);
  CHECK(k.pair(psi) == doctest::Approx(ix * iy).epsilon(1e-8));
}
