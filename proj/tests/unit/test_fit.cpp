#include "doctest.h"

#include "distgeom/fit.hpp"

#include <cmath>
#include <vector>

using namespace distgeom;

TEST_CASE("loglog fit recovers an exact power law") {
  std::vector<double> x, y;
  for (int k = 0; k < 6; ++k) {
    x.push_back(0.1 * std::pow(0.5, k));
    y.push_back(-3.0 * std::pow(x.back(), -2.0));
  }
  const LogLogFit f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.residual < 1e-12);
  CHECK(f.points == 6);
}

TEST_CASE("loglog fit skips zeros and flags all-zero data") {
  const std::vector<double> x{1.0, 0.5, 0.25};
  const std::vector<double> z{0.0, 0.0, 0.0};
  CHECK(fit_loglog(x, z).exact_zero);
  const std::vector<double> y{1.0, 0.0, 0.0625};
  const LogLogFit f = fit_loglog(x, y);
  CHECK(f.points == 2);
  CHECK(f.slope == doctest::Approx(2.0));
}

TEST_CASE("two-variable power law") {
  std::vector<double> a, b, v;
  for (double e : {0.1, 0.05, 0.025})
    for (double r : {0.3, 0.5, 0.8}) {
      a.push_back(e);
      b.push_back(r);
      v.push_back(2.5 * e * e * std::pow(r, -4.0));
    }
  const PowerLaw2Fit f = fit_power_law2(a, b, v);
  CHECK_FALSE(f.sparse);
  CHECK(f.alpha == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(f.beta == doctest::Approx(-4.0).epsilon(1e-10));
  CHECK(std::exp(f.log_c) == doctest::Approx(2.5).epsilon(1e-10));
  const std::vector<double> one{1.0};
  CHECK(fit_power_law2(one, one, one).sparse);
}
