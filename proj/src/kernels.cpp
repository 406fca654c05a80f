#include "distgeom/kernels.hpp"

#include "distgeom/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <mutex>

namespace distgeom {

namespace {

double base_bump(double t) {
  const double a = 1.0 - t * t;
  if (a <= 0.0) return 0.0;
  return std::exp(-1.0 / a);
}

constexpr int kBaseMoments = 2 * MollifierProfile::kMaxMoment + 40;

// Moments int t^k exp(-1/(1-t^2)) dt on a fine composite rule; computed once.
const std::vector<double>& base_moments() {
  static std::vector<double> nu;
  static std::once_flag flag;
  std::call_once(flag, [] {
    nu.assign(kBaseMoments + 1, 0.0);
    const GaussRule& g = gauss_legendre(20);
    const int cells = 256;
    const double h = 1.0 / cells;
    // Integrate over [0, 1] and use symmetry; odd moments are zero.
    for (int c = 0; c < cells; ++c) {
      const double mid = (c + 0.5) * h;
      for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const double t = mid + 0.5 * h * g.nodes[k];
        const double w = 0.5 * h * g.weights[k] * base_bump(t);
        double p = 1.0;
        for (int j = 0; j <= kBaseMoments; ++j) {
          if (j % 2 == 0) nu[j] += 2.0 * w * p;
          p *= t;
        }
      }
    }
  });
  return nu;
}

std::vector<double> solve_coefficients(int q) {
  const std::vector<double>& nu = base_moments();
  const int m = q / 2;
  Eigen::MatrixXd h(m + 1, m + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs(0) = 1.0;
  for (int k = 0; k <= m; ++k)
    for (int i = 0; i <= m; ++i) h(k, i) = nu[2 * i + 2 * k];
  const Eigen::VectorXd c = h.fullPivLu().solve(rhs);
  const double residual = (h * c - rhs).norm();
  if (!(residual < 1e-9)) throw ContractViolation("mollifier moment system is singular");
  return std::vector<double>(c.data(), c.data() + c.size());
}

// Monomial coefficients of the Legendre polynomials P_0..P_deg.
std::vector<std::vector<double>> legendre_monomials(int deg) {
  std::vector<std::vector<double>> p(deg + 1, std::vector<double>(deg + 1, 0.0));
  p[0][0] = 1.0;
  if (deg >= 1) p[1][1] = 1.0;
  for (int n = 1; n < deg; ++n) {
    for (int j = 0; j <= deg; ++j) {
      double v = -n * p[n - 1][j];
      if (j >= 1) v += (2.0 * n + 1.0) * p[n][j - 1];
      p[n + 1][j] = v / (n + 1.0);
    }
  }
  return p;
}

}  // namespace

MollifierProfile MollifierProfile::make(int q) {
  if (q < 0) throw ContractViolation("moment order must be non-negative");
  if (q > 12) throw ContractViolation("moment order above 12 is not supported");
  MollifierProfile p;
  p.q_ = q;
  p.coeffs_ = solve_coefficients(q);
  const std::vector<double>& nu = base_moments();
  p.moments_.assign(kMaxMoment + 1, 0.0);
  for (int k = 0; k <= kMaxMoment; k += 2)
    for (std::size_t i = 0; i < p.coeffs_.size(); ++i) p.moments_[k] += p.coeffs_[i] * nu[k + 2 * i];
  return p;
}

MollifierProfile MollifierProfile::from_json(const nlohmann::json& j) {
  const int q = j.at("q").get<int>();
  MollifierProfile p = make(q);
  const auto stored = j.at("coefficients").get<std::vector<double>>();
  if (stored.size() != p.coeffs_.size())
    throw ConfigError("profile record has the wrong number of coefficients");
  for (std::size_t i = 0; i < stored.size(); ++i)
    if (std::abs(stored[i] - p.coeffs_[i]) > 1e-9 * (1.0 + std::abs(p.coeffs_[i])))
      throw ConfigError("profile record coefficients do not match q = " + std::to_string(q));
  p.coeffs_ = stored;
  return p;
}

nlohmann::json MollifierProfile::to_json() const {
  return {{"q", q_}, {"coefficients", coeffs_}};
}

void MollifierProfile::values(double t, double out[3]) const {
  const double a = 1.0 - t * t;
  if (a <= 0.0) {
    out[0] = out[1] = out[2] = 0.0;
    return;
  }
  const double b = std::exp(-1.0 / a);
  const double l1 = -2.0 * t / (a * a);
  const double l2 = -2.0 / (a * a) - 8.0 * t * t / (a * a * a);
  const double s = t * t;
  double p = 0.0, dp = 0.0, ddp = 0.0;
  for (std::size_t i = coeffs_.size(); i-- > 0;) {
    ddp = ddp * s + 2.0 * dp;
    dp = dp * s + p;
    p = p * s + coeffs_[i];
  }
  // p = P(s), dp = P'(s), ddp = P''(s) by Horner with derivatives.
  const double q0 = p;
  const double q1 = 2.0 * t * dp;
  const double q2 = 2.0 * dp + 4.0 * s * ddp;
  out[0] = q0 * b;
  out[1] = (q1 + q0 * l1) * b;
  out[2] = (q2 + 2.0 * q1 * l1 + q0 * (l2 + l1 * l1)) * b;
}

double MollifierProfile::value(double t, int derivative) const {
  if (derivative < 0 || derivative > 2) throw ContractViolation("profile derivative order above 2");
  double v[3];
  values(t, v);
  return v[derivative];
}

double MollifierProfile::derivative_moment(int d, std::span<const double> poly) const {
  double s = 0.0;
  for (std::size_t j = static_cast<std::size_t>(d); j < poly.size(); ++j) {
    double f = 1.0;
    for (int k = 0; k < d; ++k) f *= static_cast<double>(j - k);
    if (static_cast<int>(j) - d > kMaxMoment) throw ContractViolation("moment degree too high");
    s += poly[j] * f * moments_[j - d];
  }
  return d % 2 == 0 ? s : -s;
}

SmoothingKernelFamily::SmoothingKernelFamily(int dim, KernelEval eval, KernelSupport support,
                                             std::string label, int moment_order)
    : dim_(dim), eval_(std::move(eval)), support_(std::move(support)), label_(std::move(label)),
      q_(moment_order) {
  if (!eval_ || !support_) throw ContractViolation("kernel family needs eval and support");
}

SmoothingKernelFamily SmoothingKernelFamily::product(int dim, const MollifierProfile& profile) {
  auto prof = std::make_shared<const MollifierProfile>(profile);
  SmoothingKernelFamily k(
      dim,
      [prof, dim](const Point& x, double eps, const Point& y) {
        double v = std::pow(eps, -dim);
        for (int i = 0; i < dim; ++i) {
          v *= (*prof)((y(i) - x(i)) / eps);
          if (v == 0.0) break;
        }
        return v;
      },
      [](const Point& x, double eps) { return Box::around(x, eps); },
      "product(q=" + std::to_string(profile.moment_order()) + ")", profile.moment_order());
  k.profile_ = prof;
  return k;
}

KernelPerturbation::KernelPerturbation(int dim, KernelEval eval, KernelSupport support,
                                       std::string label)
    : dim_(dim), eval_(std::move(eval)), support_(std::move(support)), label_(std::move(label)) {
  if (!eval_ || !support_) throw ContractViolation("kernel perturbation needs eval and support");
}

KernelPerturbation KernelPerturbation::axis_derivative(int dim, const MollifierProfile& profile,
                                                       int axis) {
  if (axis < 0 || axis >= dim) throw ContractViolation("perturbation axis out of range");
  auto prof = std::make_shared<const MollifierProfile>(profile);
  return KernelPerturbation(
      dim,
      [prof, dim, axis](const Point& x, double eps, const Point& y) {
        double v = std::pow(eps, -dim);
        for (int i = 0; i < dim; ++i) v *= prof->value((y(i) - x(i)) / eps, i == axis ? 1 : 0);
        return v;
      },
      [](const Point& x, double eps) { return Box::around(x, eps); },
      "d_t" + std::to_string(axis) + " product");
}

KernelPerturbation KernelPerturbation::difference(const SmoothingKernelFamily& a,
                                                  const SmoothingKernelFamily& b) {
  if (a.dim() != b.dim()) throw ContractViolation("kernel families of different dimension");
  return KernelPerturbation(
      a.dim(), [a, b](const Point& x, double eps, const Point& y) { return a(x, eps, y) - b(x, eps, y); },
      [a, b](const Point& x, double eps) {
        const Box sa = a.support(x, eps), sb = b.support(x, eps);
        return Box(sa.lower.cwiseMin(sb.lower), sa.upper.cwiseMax(sb.upper));
      },
      a.label() + " - " + b.label());
}

std::vector<double> EpsNet::values() const {
  validate();
  std::vector<double> v(levels);
  double e = eps0;
  for (int k = 0; k < levels; ++k, e *= ratio) v[k] = e;
  return v;
}

double EpsNet::smallest() const { return values().back(); }

void EpsNet::validate() const {
  if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("ratio must lie in (0, 1)");
  if (levels < 2) throw ConfigError("levels must be at least 2");
}

nlohmann::json EpsNet::to_json() const {
  return {{"eps0", eps0}, {"ratio", ratio}, {"levels", levels}};
}

namespace {

KernelLieDerivative assemble(int dim, const KernelSupport& support, const std::string& label,
                             std::function<double(const Point&, double, const Point&, int)> dy,
                             std::function<double(const Point&, double, const Point&, int)> dx,
                             KernelEval value, const VectorField& x) {
  auto advective = [dy, x, dim](const Point& p, double eps, const Point& y) {
    const Point v = x(y);
    double s = 0.0;
    for (int c = 0; c < dim; ++c)
      if (v(c) != 0.0) s += v(c) * dy(p, eps, y, c);
    return s;
  };
  auto density = [advective, value, x](const Point& p, double eps, const Point& y) {
    return advective(p, eps, y) + x.divergence(y) * value(p, eps, y);
  };
  auto base = [dx, x, dim](const Point& p, double eps, const Point& y) {
    const Point v = x(p);
    double s = 0.0;
    for (int c = 0; c < dim; ++c)
      if (v(c) != 0.0) s += v(c) * dx(p, eps, y, c);
    return s;
  };
  auto total = [density, base](const Point& p, double eps, const Point& y) {
    return density(p, eps, y) + base(p, eps, y);
  };
  const std::string tag = "L_" + (x.label().empty() ? std::string("X") : x.label()) + " " + label;
  return KernelLieDerivative{
      KernelPerturbation(dim, density, support, tag + " [density]"),
      KernelPerturbation(dim, advective, support, tag + " [advective]"),
      KernelPerturbation(dim, base, support, tag + " [base point]"),
      KernelPerturbation(dim, total, support, tag),
  };
}

KernelLieDerivative generic_lie(int dim, const KernelEval& eval, const KernelSupport& support,
                                const std::string& label, const VectorField& x) {
  auto dy = [eval](const Point& p, double eps, const Point& y, int c) {
    const double h = 1e-4 * eps;
    Point a = y, b = y;
    a(c) += h;
    b(c) -= h;
    return (eval(p, eps, a) - eval(p, eps, b)) / (2.0 * h);
  };
  auto dx = [eval](const Point& p, double eps, const Point& y, int c) {
    const double h = 1e-4 * eps;
    Point a = p, b = p;
    a(c) += h;
    b(c) -= h;
    return (eval(a, eps, y) - eval(b, eps, y)) / (2.0 * h);
  };
  return assemble(dim, support, label, dy, dx, eval, x);
}

}  // namespace

KernelLieDerivative kernel_lie_derivative(const SmoothingKernelFamily& omega, const VectorField& x) {
  if (x.dim() != omega.dim()) throw ContractViolation("vector field dimension does not match kernel");
  const MollifierProfile* prof = omega.profile();
  if (prof == nullptr) return generic_lie(omega.dim(), omega.eval(), omega.support_fn(), omega.label(), x);
  const int dim = omega.dim();
  auto p = std::make_shared<const MollifierProfile>(*prof);
  auto dy = [p, dim](const Point& base, double eps, const Point& y, int c) {
    double v = std::pow(eps, -dim - 1);
    for (int i = 0; i < dim; ++i) v *= p->value((y(i) - base(i)) / eps, i == c ? 1 : 0);
    return v;
  };
  auto dx = [dy](const Point& base, double eps, const Point& y, int c) { return -dy(base, eps, y, c); };
  return assemble(dim, omega.support_fn(), omega.label(), dy, dx, omega.eval(), x);
}

KernelLieDerivative kernel_lie_derivative(const KernelPerturbation& omega, const VectorField& x) {
  if (x.dim() != omega.dim()) throw ContractViolation("vector field dimension does not match kernel");
  return generic_lie(omega.dim(), omega.eval(), omega.support_fn(), omega.label(), x);
}

AxisKernelWeights axis_kernel_weights(const MollifierProfile& profile, const AxisRule& rule,
                                      double x, double eps, int max_derivative, int moment_degree) {
  const std::size_t n = rule.nodes.size();
  AxisKernelWeights out;
  std::vector<double> t(n);
  for (int d = 0; d <= max_derivative; ++d) out.w[d].assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    t[j] = (rule.nodes[j] - x) / eps;
    double v[3];
    profile.values(t[j], v);
    const double base = rule.weights[j] / eps;
    for (int d = 0; d <= max_derivative; ++d) out.w[d][j] = base * v[d];
  }
  const int deg = std::min<int>(moment_degree, static_cast<int>(n) - 1);
  if (deg >= 0) {
    static const std::vector<std::vector<double>> leg = legendre_monomials(16);
    if (deg > 16) throw ContractViolation("moment correction degree above 16");
    Eigen::MatrixXd v(deg + 1, n);
    for (std::size_t j = 0; j < n; ++j) {
      double p0 = 1.0, p1 = t[j];
      v(0, j) = p0;
      if (deg >= 1) v(1, j) = p1;
      for (int k = 1; k < deg; ++k) {
        const double p2 = ((2.0 * k + 1.0) * t[j] * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
        v(k + 1, j) = p2;
      }
    }
    const Eigen::MatrixXd gram = v * v.transpose();
    const auto solver = gram.ldlt();
    for (int d = 0; d <= max_derivative; ++d) {
      Eigen::Map<Eigen::VectorXd> a(out.w[d].data(), static_cast<Eigen::Index>(n));
      Eigen::VectorXd target(deg + 1);
      for (int k = 0; k <= deg; ++k) target(k) = profile.derivative_moment(d, leg[k]);
      const Eigen::VectorXd lambda = solver.solve(target - v * a);
      a += v.transpose() * lambda;
    }
  }
  for (int d = 1; d <= max_derivative; ++d) {
    const double f = (d == 1 ? -1.0 : 1.0) / std::pow(eps, d);
    for (double& w : out.w[d]) w *= f;
  }
  return out;
}

}  // namespace distgeom
