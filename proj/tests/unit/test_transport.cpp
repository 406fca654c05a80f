#include "doctest.h"

#include "distgeom/errors.hpp"
#include "distgeom/transport.hpp"

#include <cmath>

using namespace distgeom;

TEST_CASE("flat frame transport is the identity on the diagonal and composes") {
  const Chart chart = Chart::cube(2, 1.0);
  const TransportOperator u = TransportOperator::flat_frame(chart, FlatteningMap::quadratic_shear(2, 0.2));
  const Point x = make_point({0.3, -0.1}), y = make_point({-0.2, 0.4}), z = make_point({0.1, 0.1});
  CHECK((u(x, x) - Mat::Identity(2, 2)).norm() == 0.0);
  CHECK((u(x, y) * u(y, z) - u(x, z)).norm() < 1e-13);
  CHECK(u.has_frame());
  CHECK_FALSE(u.is_identity());
  CHECK(TransportOperator::identity(chart).is_identity());
}

TEST_CASE("flat frame connection is torsion free") {
  const Chart chart = Chart::cube(3, 1.0);
  const BackgroundConnection g = FlatteningMap::quadratic_shear(3, 0.3).connection(chart);
  CHECK(g.symmetry_defect() < 1e-12);
  CHECK_FALSE(g.is_flat());
  CHECK(BackgroundConnection::flat(chart).is_flat());
}

TEST_CASE("shooting transport agrees with the closed-form flat transport") {
  const Chart chart = Chart::cube(2, 1.0);
  const FlatteningMap map = FlatteningMap::quadratic_shear(2, 0.25);
  const BackgroundConnection gamma = map.connection(chart);
  const TransportOperator closed = TransportOperator::flat_frame(chart, map);
  const Point x = make_point({0.2, 0.1}), y = make_point({-0.3, 0.35});
  ShootingOptions o;
  o.refinement = 4;
  const GeodesicSolution s = solve_geodesic(gamma, y, x, o);
  CHECK(s.endpoint_error < 1e-9);
  CHECK((parallel_transport(gamma, x, y, o) - closed(x, y)).norm() < 1e-7);
  // The geodesic of a flat connection is the preimage of a straight line.
  const Point mid = 0.5 * (map.phi(x) + map.phi(y));
  CHECK((map.phi(s.midpoint) - mid).norm() < 1e-7);
}

TEST_CASE("transport Lie derivative vanishes for the identity and a constant field") {
  const Chart chart = Chart::cube(2, 1.0);
  const TransportOperator id = TransportOperator::identity(chart);
  const TransportPerturbation l = transport_lie_derivative(id, VectorField::constant(make_point({1.0, 0.5})), TransportSlot::both);
  CHECK(l(make_point({0.1, 0.2}), make_point({-0.3, 0.0})).norm() < 1e-9);
  // For a linear field X = M x: L_(X,X) id = -M + M = 0 as well.
  Mat m(2, 2);
  m << 0.0, -1.0, 1.0, 0.0;
  const TransportPerturbation r = transport_lie_derivative(id, VectorField::affine(m, Point::Zero(2)), TransportSlot::both);
  CHECK(r(make_point({0.1, 0.2}), make_point({-0.3, 0.0})).norm() < 1e-9);
  const TransportPerturbation first = transport_lie_derivative(id, VectorField::affine(m, Point::Zero(2)), TransportSlot::first);
  CHECK((first(make_point({0.1, 0.2}), make_point({-0.3, 0.0})) + m).norm() < 1e-9);
}

TEST_CASE("bump perturbation vanishes on the diagonal") {
  Mat m(2, 2);
  m << 0.0, 1.0, -1.0, 0.5;
  const TransportPerturbation p = TransportPerturbation::bump_matrix(m);
  CHECK(p.vanishes_on_diagonal());
  CHECK(p(make_point({0.2, 0.3}), make_point({0.2, 0.3})).norm() == 0.0);
  CHECK(p(make_point({0.2, 0.3}), make_point({0.4, 0.3})).norm() > 0.0);
}

TEST_CASE("admissibility of a fixed flat frame transport") {
  const Chart chart = Chart::cube(2, 1.0);
  const TransportOperator u = TransportOperator::flat_frame(chart, FlatteningMap::quadratic_shear(2, 0.1));
  const AdmissibilityReport r =
      check_admissibility([&](double) { return u; }, Box::around(Point::Zero(2), 0.3), EpsNet{0.1, 0.5, 4});
  CHECK(r.bounded);
  CHECK(r.diagonal_exact);
  const double radii[] = {0.1, 0.2, 0.4};
  CHECK(estimate_invertibility_radius(u, Box::around(Point::Zero(2), 0.3), radii) == doctest::Approx(0.4));
}

TEST_CASE("closed-form transport Lie derivative of a frame operator matches differences") {
  const Chart chart = Chart::cube(2, 1.0);
  const TransportOperator u = TransportOperator::flat_frame(chart, FlatteningMap::quadratic_shear(2, 0.3));
  Mat m(2, 2);
  m << 0.2, -1.0, 0.7, 0.1;
  const VectorField x = VectorField::affine(m, make_point({0.3, -0.1}), "flow");
  const Point p = make_point({0.1, 0.2}), q = make_point({-0.05, 0.25});
  for (const TransportOperator& op : {u, TransportOperator::identity(chart)})
    for (TransportSlot slot : {TransportSlot::first, TransportSlot::second, TransportSlot::both}) {
      const Mat exact = transport_lie_derivative(op, x, slot)(p, q);
      const Mat fd = transport_lie_derivative(op, x, slot, 1e-5)(p, q);
      CHECK((exact - fd).norm() < 1e-8);
    }
  CHECK(transport_lie_derivative(u, x, TransportSlot::both)(p, p).norm() < 1e-14);
}
