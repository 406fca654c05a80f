#include "doctest.h"

#include "distgeom/calculus.hpp"
#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"

#include <cmath>

using namespace distgeom;

namespace {

TensorField sphere_metric(const Chart& chart, double a) {
  return TensorField(chart, Valence{0, 2}, [a](const Point& x, std::span<double> o) {
    const double c = 4.0 * a * a / std::pow(1.0 + x.squaredNorm(), 2);
    o[0] = o[3] = c;
    o[1] = o[2] = 0.0;
  });
}

// e^{2 phi} delta in 3D with phi = 0.1 x1 x2.
TensorField conformal_metric(const Chart& chart) {
  return TensorField(chart, Valence{0, 2}, [](const Point& x, std::span<double> o) {
    const double c = std::exp(0.2 * x(0) * x(1));
    for (int i = 0; i < 9; ++i) o[i] = (i % 4 == 0) ? c : 0.0;
  });
}

}  // namespace

TEST_CASE("sphere in stereographic coordinates has scalar curvature 2/a^2") {
  const Chart chart = Chart::cube(2, 1.0);
  for (const Point& x : {make_point({0.0, 0.0}), make_point({0.3, -0.4})}) {
    const PointCurvature pc = metric_curvature(sphere_metric(chart, 1.5), x);
    CHECK(pc.scalar == doctest::Approx(2.0 / 2.25).epsilon(1e-4));
  }
}

TEST_CASE("conformally flat metric matches the symbolic Ricci tensor") {
  const Chart chart = Chart::cube(3, 1.0);
  const Point x = make_point({0.3, -0.2, 0.5});
  const PointCurvature pc = metric_curvature(conformal_metric(chart), x);
  // n = 3, Hessian of phi is 0.1 (e1 e2 + e2 e1), Laplacian 0:
  // Ric = -(Hess phi - dphi dphi) - |dphi|^2 delta.
  const double d[3] = {0.1 * x(1), 0.1 * x(0), 0.0};
  const double grad2 = d[0] * d[0] + d[1] * d[1];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double hess = (a + b == 1) ? 0.1 : 0.0;
      const double expect = -(hess - d[a] * d[b]) - (a == b ? grad2 : 0.0);
      CHECK(pc.ricci[a * 3 + b] == doctest::Approx(expect).epsilon(1e-5).scale(1e-3));
    }
  CHECK(pc.scalar == doctest::Approx(-2.0 * grad2 * std::exp(-0.2 * x(0) * x(1))).epsilon(1e-4));
}

TEST_CASE("Riemann tensor symmetries") {
  const Chart chart = Chart::cube(3, 1.0);
  const PointCurvature pc = metric_curvature(conformal_metric(chart), make_point({0.2, 0.4, -0.1}));
  const auto r = [&](int a, int b, int c, int d) { return pc.riemann[((a * 3 + b) * 3 + c) * 3 + d]; };
  double scale = 0.0;
  for (double v : pc.riemann) scale = std::max(scale, std::abs(v));
  REQUIRE(scale > 1e-3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          CHECK(std::abs(r(a, b, c, d) + r(a, b, d, c)) < 1e-6 * scale);
          CHECK(std::abs(r(a, b, c, d) + r(a, c, d, b) + r(a, d, b, c)) < 1e-6 * scale);
        }
}

TEST_CASE("curvature of an embedded smooth metric does not depend on the background") {
  const Chart chart = Chart::cube(2, 1.0);
  const GeneralizedMetric g(sigma(sphere_metric(chart, 1.5), "sphere"));
  std::vector<double> gamma(8, 0.0);
  gamma[0 * 4 + 0 * 2 + 1] = gamma[0 * 4 + 1 * 2 + 0] = 0.3;
  gamma[1 * 4 + 1 * 2 + 0] = gamma[1 * 4 + 0 * 2 + 1] = -0.2;
  gamma[1 * 4 + 0 * 2 + 0] = 0.1;
  const SmoothingChoice c = make_choice(chart, 0, "identity");
  const Point x = make_point({0.1, 0.2});
  const CurvatureBundle flat = curvature(levi_civita(g, BackgroundConnection::flat(chart)), g);
  const BackgroundConnection bg = BackgroundConnection::constant(chart, gamma);
  const CurvatureBundle other = curvature(levi_civita(g, bg), g);
  const double a = flat.scalar.represent(c, 0.05)(x)[0];
  const double b = other.scalar.represent(c, 0.05)(x)[0];
  CHECK(a == doctest::Approx(2.0 / 2.25).epsilon(1e-4));
  CHECK(b == doctest::Approx(a).epsilon(1e-6));
}

TEST_CASE("generalized Lie derivative obeys the Leibniz rule") {
  const Chart chart = Chart::cube(2, 1.0);
  const RoughTensorField kink = RoughTensorField::loc_integrable(
      chart, Valence{0, 0}, [](const Point& y, std::span<double> o) { o[0] = std::abs(y(0)) + y(1); }, {{0, 0.0}});
  const TensorField v(chart, Valence{1, 0}, [](const Point& y, std::span<double> o) {
    o[0] = y(1);
    o[1] = 1.0 + y(0) * y(0);
  });
  EmbeddingQuadrature quad;
  quad.cells_per_radius = 2;
  const GeneralizedField a = iota(kink, quad);
  const GeneralizedField b = iota(RoughTensorField::from_smooth(v), quad);
  Mat m(2, 2);
  m << 0.2, -1.0, 1.0, 0.1;
  const VectorField x = VectorField::affine(m, make_point({0.3, 0.0}), "flow");
  const SmoothingChoice c = make_choice(chart, 0, "flat_frame", 0.1);
  const double eps = 0.1;
  const Point p = make_point({0.02, 0.1});
  const Tensor lhs = gen_lie_derivative(tensor_product(a, b), x).represent(c, eps)(p);
  const Tensor rhs = (tensor_product(gen_lie_derivative(a, x), b) + tensor_product(a, gen_lie_derivative(b, x)))
                         .represent(c, eps)(p);
  for (std::size_t k = 0; k < lhs.size(); ++k) CHECK(lhs[k] == doctest::Approx(rhs[k]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("generalized Lie derivative of sigma is the ordinary one") {
  const Chart chart = Chart::cube(2, 1.0);
  const TensorField f(chart, Valence{0, 1}, [](const Point& y, std::span<double> o) {
    o[0] = std::sin(y(1));
    o[1] = y(0) * y(1);
  });
  const VectorField x = VectorField::constant(make_point({0.5, -1.0}));
  const SmoothingChoice c = make_choice(chart, 2, "flat_frame", 0.1);
  const Point p = make_point({0.1, 0.3});
  const Tensor got = gen_lie_derivative(sigma(f), x).represent(c, 0.01)(p);
  const Tensor expect = lie_derivative(f, x)(p);
  CHECK(got[0] == doctest::Approx(expect[0]).epsilon(1e-8));
  CHECK(got[1] == doctest::Approx(expect[1]).epsilon(1e-8));
}

TEST_CASE("metric inverse and volume factor") {
  const Chart chart = Chart::cube(2, 1.0);
  const GeneralizedMetric g(sigma(sphere_metric(chart, 1.0)));
  const SmoothingChoice c = make_choice(chart, 0, "identity");
  const Point x = make_point({0.2, 0.1});
  const double conf = 4.0 / std::pow(1.05, 2);
  CHECK(g.inverse().represent(c, 0.1)(x)[0] == doctest::Approx(1.0 / conf));
  CHECK(g.volume_factor().represent(c, 0.1)(x)[0] == doctest::Approx(conf));
  const GeneralizedMetric degenerate(sigma(TensorField::zero(chart, Valence{0, 2})));
  CHECK_THROWS_AS(degenerate.inverse().represent(c, 0.1)(x), DegenerateMetricError);
}
