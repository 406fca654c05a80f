#include "distgeom/fit.hpp"

#include "distgeom/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace distgeom {

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("fit_loglog: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(y[i]) || !(x[i] > 0.0)) continue;
    if (y[i] == 0.0) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  LogLogFit f;
  f.points = static_cast<int>(lx.size());
  if (lx.empty()) {
    f.exact_zero = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    f.slope = std::nan("");
    f.intercept = std::nan("");
    return f;
  }
  if (lx.size() == 1) {
    f.slope = std::nan("");
    f.intercept = ly[0];
    return f;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : std::nan("");
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double d = ly[i] - (f.intercept + f.slope * lx[i]);
    f.residual = std::max(f.residual, std::abs(d));
    ss_res += d * d;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

PowerLaw2Fit fit_power_law2(std::span<const double> a, std::span<const double> b,
                            std::span<const double> v) {
  if (a.size() != b.size() || a.size() != v.size())
    throw ContractViolation("fit_power_law2: size mismatch");
  std::vector<int> use;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::isfinite(v[i]) && v[i] != 0.0 && a[i] > 0.0 && b[i] > 0.0) use.push_back(static_cast<int>(i));
  PowerLaw2Fit f;
  f.points = static_cast<int>(use.size());
  if (use.size() < 4) {
    f.sparse = true;
    return f;
  }
  Eigen::MatrixXd m(use.size(), 3);
  Eigen::VectorXd rhs(use.size());
  for (std::size_t r = 0; r < use.size(); ++r) {
    const int i = use[r];
    m(r, 0) = 1.0;
    m(r, 1) = std::log(a[i]);
    m(r, 2) = std::log(b[i]);
    rhs(r) = std::log(std::abs(v[i]));
  }
  const auto qr = m.colPivHouseholderQr();
  if (qr.rank() < 3) {
    f.sparse = true;
    return f;
  }
  const Eigen::Vector3d c = qr.solve(rhs);
  f.log_c = c(0);
  f.alpha = c(1);
  f.beta = c(2);
  f.residual = (m * c - rhs).cwiseAbs().maxCoeff();
  return f;
}

}  // namespace distgeom
