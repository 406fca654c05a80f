#include "distgeom/calculus.hpp"

#include "distgeom/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace distgeom {

namespace {

std::string where(const Point& x, double eps) {
  std::ostringstream os;
  os << "x = (";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << "), eps = " << eps;
  return os.str();
}

void require_no_variation(const Variation& v, const std::string& what) {
  if (!v.empty())
    throw ContractViolation(what + " depends non-affinely on (Upsilon, omega); differentials are not available");
}

// Forward-mode number carrying the n partial derivatives d/dx^e.
struct Dual {
  double v = 0.0;
  std::array<double, kMaxDim> d{};
};
inline Dual operator+(Dual a, const Dual& b) {
  a.v += b.v;
  for (int i = 0; i < kMaxDim; ++i) a.d[i] += b.d[i];
  return a;
}
inline Dual operator-(Dual a, const Dual& b) {
  a.v -= b.v;
  for (int i = 0; i < kMaxDim; ++i) a.d[i] -= b.d[i];
  return a;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v * b.v;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
inline Dual operator*(double s, Dual a) {
  a.v *= s;
  for (double& x : a.d) x *= s;
  return a;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v / b.v;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
  return r;
}
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

// Determinant of the k x k matrix a[rows[i] * n + cols[j]] by cofactor
// expansion (k <= 4).
template <class S>
S minor_det(const S* a, int n, const int* rows, const int* cols, int k) {
  if (k == 1) return a[rows[0] * n + cols[0]];
  if (k == 2) return a[rows[0] * n + cols[0]] * a[rows[1] * n + cols[1]] - a[rows[0] * n + cols[1]] * a[rows[1] * n + cols[0]];
  S sum{};
  int sub[kMaxDim];
  for (int j = 0; j < k; ++j) {
    int q = 0;
    for (int jj = 0; jj < k; ++jj)
      if (jj != j) sub[q++] = cols[jj];
    const S m = a[rows[0] * n + cols[j]] * minor_det(a, n, rows + 1, sub, k - 1);
    sum = (j % 2 == 0) ? sum + m : sum - m;
  }
  return sum;
}

template <class S>
S determinant(const S* a, int n) {
  int idx[kMaxDim] = {0, 1, 2, 3};
  return minor_det(a, n, idx, idx, n);
}

// Cofactor inverse; returns the determinant.
template <class S>
S adjugate_inverse(const S* a, int n, S* inv) {
  const S det = determinant(a, n);
  if (n == 1) {
    inv[0] = S{1.0} / det;
    return det;
  }
  int rows[kMaxDim], cols[kMaxDim];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int q = 0;
      for (int r = 0; r < n; ++r)
        if (r != j) rows[q++] = r;
      q = 0;
      for (int c = 0; c < n; ++c)
        if (c != i) cols[q++] = c;
      S cof = minor_det(a, n, rows, cols, n - 1);
      if ((i + j) % 2 == 1) cof = S{} - cof;
      inv[i * n + j] = cof / det;
    }
  return det;
}

// Gamma^_{abc} of the literal formula from g, dg (dg[c * n * n + k] =
// d_c g_k) and gamma (n^3).
template <class S>
S levi_civita_point(int n, const S* g, const S* dg, const S* gam, S* out) {
  S ginv[kMaxDim * kMaxDim];
  const S det = adjugate_inverse(g, n, ginv);
  const int nn = n * n;
  // cov[(b n + d) n + c] = g_{bd|c}
  S cov[kMaxDim * kMaxDim * kMaxDim];
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d)
      for (int c = 0; c < n; ++c) {
        S v = dg[c * nn + b * n + d];
        for (int e = 0; e < n; ++e) {
          v = v - gam[(e * n + b) * n + c] * g[e * n + d];
          v = v - gam[(e * n + d) * n + c] * g[b * n + e];
        }
        cov[(b * n + d) * n + c] = v;
      }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        S s{};
        for (int d = 0; d < n; ++d)
          s = s + ginv[a * n + d] * (cov[(b * n + d) * n + c] + cov[(c * n + d) * n + b] - cov[(b * n + c) * n + d]);
        out[(a * n + b) * n + c] = 0.5 * s;
      }
  return det;
}

void check_det(double det, double floor, const Point& x, double eps) {
  if (!(std::abs(det) >= floor))
    throw DegenerateMetricError("|det g| = " + std::to_string(std::abs(det)) + " below det_floor at " + where(x, eps));
}

// Riemann from Gamma (n^3) and dGamma (dgam[e * n^3 + idx]).
void riemann_point(int n, const double* gam, const double* dgam, double* out) {
  const int n3 = n * n * n;
  auto G = [&](int a, int b, int c) { return gam[(a * n + b) * n + c]; };
  auto dG = [&](int e, int a, int b, int c) { return dgam[e * n3 + (a * n + b) * n + c]; };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double r = dG(c, a, b, d) - dG(d, a, b, c);
          for (int e = 0; e < n; ++e) r += G(e, b, d) * G(a, e, c) - G(e, b, c) * G(a, e, d);
          out[((a * n + b) * n + c) * n + d] = r;
        }
}

void ricci_from_riemann(int n, const double* riem, double* out) {
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += riem[((a * n + b) * n + a) * n + d];
      out[b * n + d] = s;
    }
}

struct Contractions {
  double scalar = 0.0;
  double volume = 0.0;
};

Contractions contract_with_metric(int n, const double* g, const double* ricci, double* einstein, const Point& x,
                                  double eps, double floor) {
  double ginv[kMaxDim * kMaxDim];
  const double det = adjugate_inverse(g, n, ginv);
  check_det(det, floor, x, eps);
  Contractions c;
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) c.scalar += ginv[b * n + d] * ricci[b * n + d];
  if (einstein)
    for (int k = 0; k < n * n; ++k) einstein[k] = ricci[k] - 0.5 * g[k] * c.scalar;
  c.volume = std::sqrt(std::abs(det));
  return c;
}

// Every way of splitting the directions of v into two variations.
std::vector<std::pair<Variation, Variation>> splits(const Variation& v) {
  const int nt = static_cast<int>(v.transport.size());
  const int nk = static_cast<int>(v.kernel.size());
  const int total = nt + nk;
  std::vector<std::pair<Variation, Variation>> out;
  for (int mask = 0; mask < (1 << total); ++mask) {
    Variation a, b;
    for (int i = 0; i < nt; ++i) ((mask >> i) & 1 ? a : b).transport.push_back(v.transport[i]);
    for (int i = 0; i < nk; ++i) ((mask >> (nt + i)) & 1 ? a : b).kernel.push_back(v.kernel[i]);
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

bool may_depend(const DependenceTags& t, const Variation& v) {
  if (!v.transport.empty() && !t.upsilon_dependent) return false;
  if (!v.kernel.empty() && !t.kernel_dependent) return false;
  return true;
}

TensorField zero_like(const Chart& chart, Valence v, double eps) {
  const std::size_t m = component_count(chart.dim(), v);
  const int n = chart.dim();
  return TensorField(
      chart.without_exclusions(), v,
      [m](const Point&, std::span<double> out) { std::fill(out.begin(), out.begin() + m, 0.0); },
      eps > 0.0 ? Smoothness::regularized : Smoothness::closed_form, eps,
      [m, n](const Point&, int order, Jet& j) {
        j.resize(n, m, order);
        std::fill(j.value.begin(), j.value.end(), 0.0);
        std::fill(j.first.begin(), j.first.end(), 0.0);
        std::fill(j.second.begin(), j.second.end(), 0.0);
      });
}

TensorField sum_fields(const std::vector<std::pair<double, TensorField>>& terms, const Chart& chart, Valence v,
                       double eps) {
  if (terms.empty()) return zero_like(chart, v, eps);
  TensorField acc = terms[0].first == 1.0 ? terms[0].second : scaled(terms[0].second, terms[0].first);
  for (std::size_t i = 1; i < terms.size(); ++i) acc = linear_combination(1.0, acc, terms[i].first, terms[i].second);
  return acc;
}

// Adds Gamma (n^3) acting on T as the connection terms of the covariant
// gradient: out[k * n + c].
void add_connection_terms(int n, Valence val, const double* gam, std::span<const double> t, std::span<double> out,
                          double sign = 1.0) {
  const int r = val.rank();
  const std::size_t m = t.size();
  int digit[2 * kMaxDim + 8];
  std::vector<std::size_t> stride(r);
  std::size_t s = 1;
  for (int i = r - 1; i >= 0; --i) {
    stride[i] = s;
    s *= static_cast<std::size_t>(n);
  }
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t rem = k;
    for (int i = r - 1; i >= 0; --i) {
      digit[i] = static_cast<int>(rem % n);
      rem /= n;
    }
    for (int c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int slot = 0; slot < r; ++slot) {
        const std::size_t base = k - static_cast<std::size_t>(digit[slot]) * stride[slot];
        const int a = digit[slot];
        for (int d = 0; d < n; ++d) {
          const double td = t[base + static_cast<std::size_t>(d) * stride[slot]];
          if (slot < val.upper)
            acc += gam[(a * n + d) * n + c] * td;
          else
            acc -= gam[(d * n + a) * n + c] * td;
        }
      }
      out[k * n + c] += sign * acc;
    }
  }
}

}  // namespace

TensorField tensor_product(const TensorField& a, const TensorField& b) {
  const int n = std::max(a.dim(), b.dim());
  const Valence va = a.valence(), vb = b.valence();
  const Valence v{va.upper + vb.upper, va.lower + vb.lower};
  const std::size_t ma = a.components(), mb = b.components(), m = component_count(n, v);
  auto outer_into = [n, va, vb](std::span<const double> x, std::span<const double> y, std::span<double> out,
                                double s) {
    Tensor tx(n, va, std::vector<double>(x.begin(), x.end()));
    Tensor ty(n, vb, std::vector<double>(y.begin(), y.end()));
    const Tensor o = outer(tx, ty);
    for (std::size_t k = 0; k < o.size(); ++k) out[k] += s * o[k];
  };
  TensorField::Evaluator eval = [=](const Point& x, std::span<double> out) {
    std::vector<double> xa(ma), xb(mb);
    a.evaluate(x, xa);
    b.evaluate(x, xb);
    std::fill(out.begin(), out.begin() + m, 0.0);
    outer_into(xa, xb, out, 1.0);
  };
  TensorField::JetEvaluator jet;
  if (a.has_exact_jet() && b.has_exact_jet()) {
    jet = [=](const Point& x, int order, Jet& out) {
      const Jet ja = a.jet(x, order), jb = b.jet(x, order);
      out.resize(n, m, order);
      std::fill(out.value.begin(), out.value.end(), 0.0);
      std::fill(out.first.begin(), out.first.end(), 0.0);
      std::fill(out.second.begin(), out.second.end(), 0.0);
      auto sa = [&](int c) { return std::span<const double>(ja.first.data() + c * ma, ma); };
      auto sb = [&](int c) { return std::span<const double>(jb.first.data() + c * mb, mb); };
      outer_into(ja.value, jb.value, out.value, 1.0);
      if (order >= 1)
        for (int c = 0; c < n; ++c) {
          std::span<double> dst(out.first.data() + c * m, m);
          outer_into(sa(c), jb.value, dst, 1.0);
          outer_into(ja.value, sb(c), dst, 1.0);
        }
      if (order >= 2)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            std::span<double> dst(out.second.data() + (c * n + d) * m, m);
            outer_into(std::span<const double>(ja.second.data() + (c * n + d) * ma, ma), jb.value, dst, 1.0);
            outer_into(ja.value, std::span<const double>(jb.second.data() + (c * n + d) * mb, mb), dst, 1.0);
            outer_into(sa(c), sb(d), dst, 1.0);
            outer_into(sa(d), sb(c), dst, 1.0);
          }
    };
  }
  const bool reg = a.smoothness() == Smoothness::regularized || b.smoothness() == Smoothness::regularized;
  return TensorField(a.chart(), v, std::move(eval), reg ? Smoothness::regularized : a.smoothness(),
                     std::max(a.eps(), b.eps()), std::move(jet));
}

TensorField contract(const TensorField& t, int upper_slot, int lower_slot) {
  const Valence v = t.valence();
  if (upper_slot < 0 || upper_slot >= v.upper || lower_slot < 0 || lower_slot >= v.lower)
    throw ContractViolation("contraction slot out of range for valence " + v.to_string());
  const int n = t.dim();
  const Valence vo{v.upper - 1, v.lower - 1};
  const std::size_t m = t.components(), mo = component_count(n, vo);
  auto slice = [=](std::span<const double> in, std::span<double> out) {
    const Tensor c = contract(Tensor(n, v, std::vector<double>(in.begin(), in.end())), upper_slot, lower_slot);
    std::copy(c.components().begin(), c.components().end(), out.begin());
  };
  TensorField::JetEvaluator jet;
  if (t.has_exact_jet()) {
    jet = [=](const Point& x, int order, Jet& out) {
      const Jet j = t.jet(x, order);
      out.resize(n, mo, order);
      slice(j.value, out.value);
      for (int c = 0; order >= 1 && c < n; ++c)
        slice(std::span<const double>(j.first.data() + c * m, m), std::span<double>(out.first.data() + c * mo, mo));
      for (int c = 0; order >= 2 && c < n * n; ++c)
        slice(std::span<const double>(j.second.data() + c * m, m), std::span<double>(out.second.data() + c * mo, mo));
    };
  }
  return t.with_evaluator(
      vo,
      [=](const Point& x, std::span<double> out) {
        std::vector<double> in(m);
        t.evaluate(x, in);
        slice(in, out);
      },
      std::move(jet));
}

GeneralizedField tensor_product(const GeneralizedField& a, const GeneralizedField& b) {
  if (a.dim() != b.dim()) throw ContractViolation("tensor product of fields on different charts");
  const Valence v{a.valence().upper + b.valence().upper, a.valence().lower + b.valence().lower};
  const Chart chart = a.chart();
  return GeneralizedField(
      chart, v,
      [a, b, chart, v](const SmoothingChoice& c, double eps, const Variation& var) {
        if (var.empty()) return tensor_product(a.represent(c, eps), b.represent(c, eps));
        std::vector<std::pair<double, TensorField>> terms;
        for (const auto& [va, vb] : splits(var)) {
          if (!may_depend(a.tags(), va) || !may_depend(b.tags(), vb)) continue;
          terms.emplace_back(1.0, tensor_product(a.vary(c, eps, va), b.vary(c, eps, vb)));
        }
        return sum_fields(terms, chart, v, eps);
      },
      a.tags() | b.tags(), "(" + a.label() + " x " + b.label() + ")", a.focus().merged(b.focus()));
}

GeneralizedField contract(const GeneralizedField& t, int upper_slot, int lower_slot) {
  const Valence v = t.valence();
  if (upper_slot < 0 || upper_slot >= v.upper || lower_slot < 0 || lower_slot >= v.lower)
    throw ContractViolation("contraction slot out of range for valence " + v.to_string());
  return GeneralizedField(
      t.chart(), Valence{v.upper - 1, v.lower - 1},
      [t, upper_slot, lower_slot](const SmoothingChoice& c, double eps, const Variation& var) {
        return contract(t.vary(c, eps, var), upper_slot, lower_slot);
      },
      t.tags(), "tr(" + t.label() + ")", t.focus());
}

GeneralizedField gen_lie_derivative(const GeneralizedField& t, const VectorField& x, std::optional<double> step) {
  if (x.dim() != t.dim()) throw ContractViolation("vector field dimension does not match");
  return GeneralizedField(
      t.chart(), t.valence(),
      [t, x, step](const SmoothingChoice& c, double eps, const Variation& var) {
        std::vector<std::pair<double, TensorField>> terms;
        terms.emplace_back(1.0, lie_derivative(t.vary(c, eps, var), x, step));
        const DependenceTags& tags = t.tags();
        if (tags.upsilon_dependent) {
          Variation v2 = var;
          v2.transport.push_back(transport_lie_derivative(c.transport, x, TransportSlot::both));
          terms.emplace_back(-1.0, t.vary(c, eps, v2));
          for (std::size_t i = 0; i < var.transport.size(); ++i) {
            Variation v3 = var;
            v3.transport[i] = transport_lie_derivative(var.transport[i], x, TransportSlot::both);
            terms.emplace_back(-1.0, t.vary(c, eps, v3));
          }
        }
        if (tags.kernel_dependent) {
          Variation v2 = var;
          v2.kernel.push_back(kernel_lie_derivative(c.kernel, x).total);
          terms.emplace_back(-1.0, t.vary(c, eps, v2));
          for (std::size_t i = 0; i < var.kernel.size(); ++i) {
            Variation v3 = var;
            v3.kernel[i] = kernel_lie_derivative(var.kernel[i], x).total;
            terms.emplace_back(-1.0, t.vary(c, eps, v3));
          }
        }
        return sum_fields(terms, t.chart(), t.valence(), eps);
      },
      t.tags(), "Lie(" + x.label() + ", " + t.label() + ")", t.focus());
}

double DerivativeSteps::first_for(const TensorField& f) const {
  if (first) return *first;
  return f.smoothness() == Smoothness::regularized ? f.eps() / 20.0 : 1e-5 * f.chart().diameter();
}

double DerivativeSteps::second_for(const TensorField& f) const {
  if (second) return *second;
  return f.smoothness() == Smoothness::regularized ? f.eps() / 10.0 : 1e-4 * f.chart().diameter();
}

ConnectionCorrection ConnectionCorrection::none(const Chart& chart, const BackgroundConnection& background) {
  const int n = chart.dim();
  Tensor z(n, Valence{1, 2});
  return {sigma(TensorField::constant(chart, z), "0"), background};
}

ConnectionCorrection ConnectionCorrection::embedded(const TensorField& gamma_total, const BackgroundConnection& background,
                                                    EmbeddingQuadrature quad) {
  if (gamma_total.valence() != Valence{1, 2}) throw ContractViolation("connection coefficients must have valence (1,2)");
  const TensorField bg = background.field();
  const std::size_t m = gamma_total.components();
  auto diff = RoughTensorField::loc_integrable(
      gamma_total.chart(), Valence{1, 2},
      [gamma_total, bg, m](const Point& y, std::span<double> out) {
        std::vector<double> b(m);
        gamma_total.evaluate(y, out);
        bg.evaluate(y, b);
        for (std::size_t k = 0; k < m; ++k) out[k] -= b[k];
      },
      {}, "Gamma-gamma");
  return {iota(diff, quad), background};
}

GeneralizedField covariant_gradient(const GeneralizedField& t, const ConnectionCorrection& conn, DerivativeSteps steps) {
  const int n = t.dim();
  const Valence v = t.valence();
  const Valence vo{v.upper, v.lower + 1};
  const GeneralizedField gh = conn.gamma_hat;
  const TensorField bg = conn.background.field();
  const bool flat = conn.background.is_flat();
  return GeneralizedField(
      t.chart(), vo,
      [=](const SmoothingChoice& c, double eps, const Variation& var) {
        const TensorField tv = t.vary(c, eps, var);
        const TensorField grad = gradient(tv, steps.first_for(tv));
        // Bilinear (Gamma^, T) terms over the splits of the directions.
        std::vector<std::pair<TensorField, TensorField>> pairs;
        for (const auto& [vg, vt] : splits(var)) {
          if (!may_depend(gh.tags(), vg) || !may_depend(t.tags(), vt)) continue;
          pairs.emplace_back(gh.vary(c, eps, vg), vt.empty() ? tv : t.vary(c, eps, vt));
        }
        const std::size_t m = tv.components();
        TensorField::Evaluator eval = [=](const Point& x, std::span<double> out) {
          grad.evaluate(x, out);
          std::vector<double> gam(n * n * n), tx(m);
          if (!flat) {
            bg.evaluate(x, gam);
            tv.evaluate(x, tx);
            add_connection_terms(n, v, gam.data(), tx, out);
          }
          for (const auto& [g, tt] : pairs) {
            g.evaluate(x, gam);
            tt.evaluate(x, tx);
            add_connection_terms(n, v, gam.data(), tx, out);
          }
        };
        return TensorField(tv.chart(), vo, std::move(eval),
                           tv.smoothness() == Smoothness::closed_form && eps == 0.0 ? Smoothness::closed_form
                                                                                     : tv.smoothness(),
                           tv.eps());
      },
      t.tags() | gh.tags(), "nabla(" + t.label() + ")", t.focus().merged(gh.focus()));
}

GeneralizedField covariant_derivative(const GeneralizedField& t, const ConnectionCorrection& conn, const VectorField& z,
                                      DerivativeSteps steps) {
  const GeneralizedField g = covariant_gradient(t, conn, steps);
  const int n = t.dim();
  return GeneralizedField(
      t.chart(), t.valence(),
      [g, z, n](const SmoothingChoice& c, double eps, const Variation& var) {
        const TensorField gv = g.vary(c, eps, var);
        const std::size_t m = component_count(n, Valence{gv.valence().upper, gv.valence().lower - 1});
        return gv.with_evaluator(Valence{gv.valence().upper, gv.valence().lower - 1},
                                 [gv, z, n, m](const Point& x, std::span<double> out) {
                                   std::vector<double> full(m * n);
                                   gv.evaluate(x, full);
                                   const Point zx = z(x);
                                   for (std::size_t k = 0; k < m; ++k) {
                                     double s = 0.0;
                                     for (int cc = 0; cc < n; ++cc) s += full[k * n + cc] * zx(cc);
                                     out[k] = s;
                                   }
                                 });
      },
      g.tags(), "nabla_" + z.label() + "(" + t.label() + ")", g.focus());
}

GeneralizedField covariant_derivative(const GeneralizedField& t, const ConnectionCorrection& conn,
                                      const GeneralizedField& z, DerivativeSteps steps) {
  if (z.valence() != Valence{1, 0}) throw ContractViolation("direction field must have valence (1,0)");
  const GeneralizedField g = covariant_gradient(t, conn, steps);
  return contract(tensor_product(g, z), t.valence().upper, t.valence().lower).relabeled(
      "nabla_" + z.label() + "(" + t.label() + ")");
}

nlohmann::json InvertibilityWitness::to_json() const {
  return {{"eps", eps},
          {"min_abs_det", min_abs_det},
          {"max_symmetry_defect", max_symmetry_defect},
          {"threshold_eps", threshold_eps}};
}

GeneralizedMetric::GeneralizedMetric(GeneralizedField g, double det_floor) : g_(std::move(g)), det_floor_(det_floor) {
  if (g_.valence() != Valence{0, 2}) throw ContractViolation("metric must have valence (0,2)");
  if (!(det_floor_ > 0.0)) throw ContractViolation("det_floor must be positive");
}

GeneralizedField GeneralizedMetric::inverse() const {
  const GeneralizedField g = g_;
  const double floor = det_floor_;
  const int n = g.dim();
  return GeneralizedField(
      g.chart(), Valence{2, 0},
      [g, floor, n](const SmoothingChoice& c, double eps, const Variation& var) {
        require_no_variation(var, "the inverse metric");
        const TensorField gv = g.represent(c, eps);
        return gv.with_evaluator(Valence{2, 0}, [gv, floor, n, eps](const Point& x, std::span<double> out) {
          double a[kMaxDim * kMaxDim];
          gv.evaluate(x, std::span<double>(a, n * n));
          const double det = adjugate_inverse(a, n, out.data());
          check_det(det, floor, x, eps);
        });
      },
      g.tags(), "inverse(" + g.label() + ")", g.focus());
}

GeneralizedField GeneralizedMetric::volume_factor() const {
  const GeneralizedField g = g_;
  const int n = g.dim();
  return GeneralizedField(
      g.chart(), Valence{0, 0},
      [g, n](const SmoothingChoice& c, double eps, const Variation& var) {
        require_no_variation(var, "sqrt|det g|");
        const TensorField gv = g.represent(c, eps);
        return gv.with_evaluator(Valence{0, 0}, [gv, n](const Point& x, std::span<double> out) {
          double a[kMaxDim * kMaxDim];
          gv.evaluate(x, std::span<double>(a, n * n));
          out[0] = std::sqrt(std::abs(determinant(a, n)));
        });
      },
      g.tags(), "vol(" + g.label() + ")", g.focus());
}

InvertibilityWitness GeneralizedMetric::witness(const SmoothingChoice& choice, std::span<const double> eps,
                                                const Box& k, int samples_per_axis) const {
  const int n = dim();
  InvertibilityWitness w;
  std::vector<bool> ok;
  for (double e : eps) {
    const TensorField gv = g_.represent(choice, e);
    double min_det = std::numeric_limits<double>::infinity();
    double sym = 0.0;
    int total = 1;
    for (int i = 0; i < n; ++i) total *= samples_per_axis;
    for (int f = 0; f < total; ++f) {
      Point x(n);
      int rem = f;
      for (int i = 0; i < n; ++i) {
        const int j = rem % samples_per_axis;
        rem /= samples_per_axis;
        x(i) = samples_per_axis == 1 ? k.center()(i)
                                     : k.lower(i) + (k.upper(i) - k.lower(i)) * j / (samples_per_axis - 1);
      }
      double a[kMaxDim * kMaxDim];
      gv.evaluate(x, std::span<double>(a, n * n));
      min_det = std::min(min_det, std::abs(determinant(a, n)));
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) sym = std::max(sym, std::abs(a[p * n + q] - a[q * n + p]));
    }
    w.eps.push_back(e);
    w.min_abs_det.push_back(min_det);
    w.max_symmetry_defect.push_back(sym);
    ok.push_back(min_det >= det_floor_);
  }
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });
  for (std::size_t i : order) {
    if (!ok[i]) break;
    w.threshold_eps = eps[i];
  }
  return w;
}

ConnectionCorrection levi_civita(const GeneralizedMetric& metric, const BackgroundConnection& background,
                                 DerivativeSteps steps) {
  const GeneralizedField g = metric.field();
  const double floor = metric.det_floor();
  const TensorField bg = background.field();
  const int n = g.dim();
  const Valence v{1, 2};
  GeneralizedField gh(
      g.chart(), v,
      [=](const SmoothingChoice& c, double eps, const Variation& var) {
        require_no_variation(var, "the Levi-Civita correction");
        const TensorField gv = g.represent(c, eps);
        const double h = steps.first_for(gv);
        const int nn = n * n, n3 = nn * n;
        TensorField::Evaluator eval = [=](const Point& x, std::span<double> out) {
          const Jet j = gv.jet(x, 1, h);
          std::vector<double> gam(n3);
          bg.evaluate(x, gam);
          const double det = levi_civita_point(n, j.value.data(), j.first.data(), gam.data(), out.data());
          check_det(det, floor, x, eps);
        };
        TensorField::JetEvaluator jet;
        if (gv.has_exact_jet()) {
          jet = [=](const Point& x, int order, Jet& out) {
            if (order >= 2) throw ContractViolation("second derivatives of the Levi-Civita correction are not provided");
            out.resize(n, n3, order);
            if (order == 0) {
              eval(x, out.value);
              return;
            }
            const Jet j = gv.jet(x, 2);
            const Jet jb = bg.jet(x, 1);
            std::vector<Dual> dg(nn), ddg(n * nn), dgam(n3), res(n3);
            for (int k = 0; k < nn; ++k) {
              dg[k].v = j.value[k];
              for (int e = 0; e < n; ++e) dg[k].d[e] = j.first[e * nn + k];
            }
            for (int c2 = 0; c2 < n; ++c2)
              for (int k = 0; k < nn; ++k) {
                Dual& d = ddg[c2 * nn + k];
                d.v = j.first[c2 * nn + k];
                for (int e = 0; e < n; ++e) d.d[e] = j.second[(e * n + c2) * nn + k];
              }
            for (int k = 0; k < n3; ++k) {
              dgam[k].v = jb.value[k];
              for (int e = 0; e < n; ++e) dgam[k].d[e] = jb.first[e * n3 + k];
            }
            const Dual det = levi_civita_point(n, dg.data(), ddg.data(), dgam.data(), res.data());
            check_det(det.v, floor, x, eps);
            for (int k = 0; k < n3; ++k) {
              out.value[k] = res[k].v;
              for (int e = 0; e < n; ++e) out.first[e * n3 + k] = res[k].d[e];
            }
          };
        }
        return TensorField(gv.chart(), v, std::move(eval), gv.smoothness(), gv.eps(), std::move(jet));
      },
      g.tags(), "LeviCivita(" + g.label() + ")", g.focus());
  return {gh, background};
}

namespace {

struct CurvatureParts {
  bool ricci = false;
  bool contractions = false;
};

// Evaluates Riemann (and optionally its contractions) of the total
// connection at x.
struct CurvatureEvaluator {
  TensorField gh;
  TensorField bg;
  std::optional<TensorField> g;
  double second_step;
  double floor;
  double eps;
  int n;

  void operator()(const Point& x, std::vector<double>& riem, std::vector<double>* ricci, std::vector<double>* einstein,
                  Contractions* cs) const {
    const int n3 = n * n * n;
    const Jet jh = gh.jet(x, 1, second_step);
    const Jet jb = bg.jet(x, 1);
    std::vector<double> gam(n3), dgam(n * n3);
    for (int k = 0; k < n3; ++k) gam[k] = jh.value[k] + jb.value[k];
    for (int k = 0; k < n * n3; ++k) dgam[k] = jh.first[k] + jb.first[k];
    riem.assign(static_cast<std::size_t>(n3) * n, 0.0);
    riemann_point(n, gam.data(), dgam.data(), riem.data());
    if (!ricci) return;
    ricci->assign(n * n, 0.0);
    ricci_from_riemann(n, riem.data(), ricci->data());
    if (!cs) return;
    double gx[kMaxDim * kMaxDim];
    g->evaluate(x, std::span<double>(gx, n * n));
    if (einstein) einstein->assign(n * n, 0.0);
    *cs = contract_with_metric(n, gx, ricci->data(), einstein ? einstein->data() : nullptr, x, eps, floor);
  }
};

enum class CurvatureOutput { riemann, ricci, scalar, einstein, density };

GeneralizedField curvature_field(const ConnectionCorrection& conn, const GeneralizedMetric& metric, DerivativeSteps steps,
                                 CurvatureOutput what) {
  const GeneralizedField gh = conn.gamma_hat;
  const GeneralizedField g = metric.field();
  const TensorField bg = conn.background.field();
  const double floor = metric.det_floor();
  const int n = g.dim();
  Valence v;
  std::string name;
  switch (what) {
    case CurvatureOutput::riemann: v = {1, 3}; name = "Riemann"; break;
    case CurvatureOutput::ricci: v = {0, 2}; name = "Ricci"; break;
    case CurvatureOutput::scalar: v = {0, 0}; name = "R"; break;
    case CurvatureOutput::einstein: v = {0, 2}; name = "Einstein"; break;
    case CurvatureOutput::density: v = {0, 0}; name = "R*vol"; break;
  }
  return GeneralizedField(
      g.chart(), v,
      [=](const SmoothingChoice& c, double eps, const Variation& var) {
        require_no_variation(var, "curvature");
        const TensorField ghv = gh.represent(c, eps);
        std::optional<TensorField> gv;
        if (what != CurvatureOutput::riemann && what != CurvatureOutput::ricci) gv = g.represent(c, eps);
        CurvatureEvaluator ce{ghv, bg, gv, steps.second_for(ghv), floor, eps, n};
        TensorField::Evaluator eval = [ce, what, n](const Point& x, std::span<double> out) {
          std::vector<double> riem, ricci, ein;
          Contractions cs;
          switch (what) {
            case CurvatureOutput::riemann:
              ce(x, riem, nullptr, nullptr, nullptr);
              std::copy(riem.begin(), riem.end(), out.begin());
              break;
            case CurvatureOutput::ricci:
              ce(x, riem, &ricci, nullptr, nullptr);
              std::copy(ricci.begin(), ricci.end(), out.begin());
              break;
            case CurvatureOutput::scalar:
              ce(x, riem, &ricci, nullptr, &cs);
              out[0] = cs.scalar;
              break;
            case CurvatureOutput::einstein:
              ce(x, riem, &ricci, &ein, &cs);
              std::copy(ein.begin(), ein.begin() + n * n, out.begin());
              break;
            case CurvatureOutput::density:
              ce(x, riem, &ricci, nullptr, &cs);
              out[0] = cs.scalar * cs.volume;
              break;
          }
        };
        return TensorField(ghv.chart(), v, std::move(eval), ghv.smoothness(), ghv.eps());
      },
      g.tags() | gh.tags(), name + "(" + g.label() + ")", g.focus().merged(gh.focus()));
}

}  // namespace

CurvatureBundle curvature(const ConnectionCorrection& conn, const GeneralizedMetric& g, DerivativeSteps steps) {
  return {curvature_field(conn, g, steps, CurvatureOutput::riemann), curvature_field(conn, g, steps, CurvatureOutput::ricci),
          curvature_field(conn, g, steps, CurvatureOutput::scalar), curvature_field(conn, g, steps, CurvatureOutput::einstein),
          curvature_field(conn, g, steps, CurvatureOutput::density)};
}

PointCurvature metric_curvature(const TensorField& g, const Point& x, DerivativeSteps steps) {
  if (g.valence() != Valence{0, 2}) throw ContractViolation("metric must have valence (0,2)");
  const int n = g.dim();
  const int nn = n * n, n3 = nn * n;
  const Jet j = g.has_exact_jet() ? g.jet(x, 2) : fd_jet(g, x, 2, steps.first_for(g), steps.second_for(g));
  std::vector<Dual> dg(nn), ddg(n * nn), dgam(n3), res(n3);
  for (int k = 0; k < nn; ++k) {
    dg[k].v = j.value[k];
    for (int e = 0; e < n; ++e) dg[k].d[e] = j.first[e * nn + k];
  }
  for (int c = 0; c < n; ++c)
    for (int k = 0; k < nn; ++k) {
      Dual& d = ddg[c * nn + k];
      d.v = j.first[c * nn + k];
      for (int e = 0; e < n; ++e) d.d[e] = j.second[(e * n + c) * nn + k];
    }
  const Dual det = levi_civita_point(n, dg.data(), ddg.data(), dgam.data(), res.data());
  check_det(det.v, 1e-300, x, g.eps());
  PointCurvature pc;
  pc.christoffel.resize(n3);
  std::vector<double> dgm(n * n3);
  for (int k = 0; k < n3; ++k) {
    pc.christoffel[k] = res[k].v;
    for (int e = 0; e < n; ++e) dgm[e * n3 + k] = res[k].d[e];
  }
  pc.riemann.assign(static_cast<std::size_t>(n3) * n, 0.0);
  riemann_point(n, pc.christoffel.data(), dgm.data(), pc.riemann.data());
  pc.ricci.assign(nn, 0.0);
  ricci_from_riemann(n, pc.riemann.data(), pc.ricci.data());
  pc.einstein.assign(nn, 0.0);
  const Contractions cs = contract_with_metric(n, j.value.data(), pc.ricci.data(), pc.einstein.data(), x, g.eps(), 1e-300);
  pc.scalar = cs.scalar;
  pc.volume = cs.volume;
  return pc;
}

}  // namespace distgeom
