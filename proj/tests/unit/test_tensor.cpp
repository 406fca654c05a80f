#include "doctest.h"

#include "distgeom/tensor.hpp"

using namespace distgeom;

TEST_CASE("component layout puts upper slots first") {
  Tensor t(3, Valence{1, 2});
  CHECK(t.size() == 27);
  t.at({2, 0, 1}) = 5.0;
  CHECK(t[(2 * 3 + 0) * 3 + 1] == 5.0);
  CHECK(component_count(4, Valence{2, 2}) == 256);
}

TEST_CASE("outer product and contraction") {
  const Tensor v = Tensor::vector(make_point({1.0, 2.0}));
  const Tensor w = Tensor::covector(make_point({3.0, -1.0}));
  const Tensor vw = outer(v, w);
  CHECK(vw.valence() == Valence{1, 1});
  CHECK(vw.at({1, 0}) == doctest::Approx(6.0));
  const Tensor s = contract(vw, 0, 0);
  CHECK(s[0] == doctest::Approx(1.0 * 3.0 - 2.0));
  CHECK(full_pairing(v, w) == doctest::Approx(1.0));
}

TEST_CASE("trace of the identity is the dimension") {
  for (int n = 2; n <= 4; ++n) CHECK(contract(Tensor::identity(n), 0, 0)[0] == doctest::Approx(n));
}

TEST_CASE("transform_slots applies the map on each slot") {
  Mat m(2, 2);
  m << 1.0, 2.0, 0.0, 1.0;
  const Tensor t = Tensor::from_matrix(Mat::Identity(2, 2), Valence{1, 1});
  std::vector<double> out(4);
  const Mat* maps[2] = {&m, nullptr};
  transform_slots(2, Valence{1, 1}, t.components(), maps, out);
  // Upper slot mapped by m, lower slot untouched: result is m itself.
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 2.0);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 1.0);

  // A (0,2) tensor transforms as M^T T M.
  Mat g(2, 2);
  g << 2.0, 0.5, 0.5, 1.0;
  const Tensor gt = Tensor::from_matrix(g, Valence{0, 2});
  const Mat* both[2] = {&m, &m};
  transform_slots(2, Valence{0, 2}, gt.components(), both, out);
  const Mat expect = m.transpose() * g * m;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) CHECK(out[a * 2 + b] == doctest::Approx(expect(a, b)));
}
