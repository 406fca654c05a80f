#include "distgeom/embedding.hpp"

#include "distgeom/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace distgeom {

namespace {

std::string fmt(const Point& p) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p(i);
  os << ")";
  return os.str();
}

void check_query(const Chart& chart, const Point& x, double margin) {
  if (!chart.domain().contains(x, margin * (1.0 - 1e-12)))
    throw BoundaryProximityError("smoothing at " + fmt(x) + " needs distance " + std::to_string(margin) +
                                 " from the chart boundary");
}

// Per-axis breakpoints of a support box: excluded-point coordinates, delta
// coordinates and kink planes.
std::vector<std::vector<double>> axis_breaks(const RoughTensorField& t, const Box& b) {
  const int n = t.dim();
  std::vector<std::vector<double>> br(n);
  for (const Point& p : t.chart().excluded_points())
    for (int i = 0; i < n; ++i) br[i].push_back(p(i));
  for (const Plane& pl : t.kinks()) br[pl.axis].push_back(pl.value);
  for (int i = 0; i < n; ++i) {
    auto& v = br[i];
    v.erase(std::remove_if(v.begin(), v.end(),
                           [&](double c) { return !(c > b.lower(i) && c < b.upper(i)); }),
            v.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return br;
}

std::vector<AxisRule> axis_rules(const Box& b, const std::vector<std::vector<double>>& br,
                                 const EmbeddingQuadrature& q) {
  std::vector<AxisRule> rules;
  for (int i = 0; i < b.dim(); ++i) {
    const int nseg = static_cast<int>(br[i].size()) + 1;
    const int cps = std::max(1, static_cast<int>(std::ceil(2.0 * q.cells_per_radius / nseg)));
    rules.push_back(composite_rule(b.lower(i), b.upper(i), br[i], cps, q.order));
  }
  return rules;
}

struct DuffyCell {
  std::array<int, kMaxDim> index{};
  Box box;
  Point corner;
};

// Cells of the composite grid having an excluded point (strictly inside the
// support box) as a vertex.
std::vector<DuffyCell> duffy_cells(const RoughTensorField& t, const Box& b, const std::vector<AxisRule>& rules) {
  const int n = t.dim();
  std::vector<DuffyCell> cells;
  for (const Point& p : t.chart().excluded_points()) {
    bool inside = true;
    std::array<int, kMaxDim> edge{};
    for (int i = 0; i < n && inside; ++i) {
      const double tol = 1e-12 * (b.upper(i) - b.lower(i));
      if (!(p(i) > b.lower(i) + tol && p(i) < b.upper(i) - tol)) {
        inside = false;
        break;
      }
      const auto& e = rules[i].edges;
      int best = 0;
      for (int k = 1; k < static_cast<int>(e.size()); ++k)
        if (std::abs(e[k] - p(i)) < std::abs(e[best] - p(i))) best = k;
      edge[i] = best;
    }
    if (!inside) continue;
    for (int mask = 0; mask < (1 << n); ++mask) {
      DuffyCell c;
      Point lo(n), hi(n);
      for (int i = 0; i < n; ++i) {
        c.index[i] = edge[i] - 1 + ((mask >> i) & 1);
        lo(i) = rules[i].edges[c.index[i]];
        hi(i) = rules[i].edges[c.index[i] + 1];
      }
      const bool dup = std::any_of(cells.begin(), cells.end(), [&](const DuffyCell& o) {
        for (int i = 0; i < n; ++i)
          if (o.index[i] != c.index[i]) return false;
        return true;
      });
      if (dup) continue;
      c.box = Box(lo, hi);
      c.corner = p;
      cells.push_back(c);
    }
  }
  return cells;
}

bool in_duffy_cell(const std::vector<DuffyCell>& cells, const std::vector<AxisRule>& rules,
                   std::span<const int> j) {
  for (const DuffyCell& c : cells) {
    bool all = true;
    for (std::size_t i = 0; i < j.size() && all; ++i) all = rules[i].cell[j[i]] == c.index[i];
    if (all) return true;
  }
  return false;
}

// Visits the tensor-product nodes outside Duffy cells and then the Duffy
// nodes. visit(y, multi-index or empty, weight).
template <class Visit>
void for_each_node(const std::vector<AxisRule>& rules, const std::vector<DuffyCell>& duffy, int order,
                   Visit&& visit) {
  const int n = static_cast<int>(rules.size());
  std::array<int, kMaxDim> j{};
  Point y(n);
  std::size_t total = 1;
  for (const auto& r : rules) total *= r.nodes.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t sz = rules[i].nodes.size();
      j[i] = static_cast<int>(rem % sz);
      rem /= sz;
    }
    if (!duffy.empty() && in_duffy_cell(duffy, rules, std::span<const int>(j.data(), n))) continue;
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      y(i) = rules[i].nodes[j[i]];
      w *= rules[i].weights[j[i]];
    }
    visit(y, std::span<const int>(j.data(), n), w);
  }
  for (const DuffyCell& c : duffy)
    duffy_rule(c.box, c.corner, order, [&](const Point& p, double w) { visit(p, std::span<const int>(), w); });
}

// Kernel jet factors at a single point: f[d][i] = d^d/dx_i^d of
// eps^-1 rho((y_i - x_i)/eps).
void point_factors(const MollifierProfile& prof, const Point& x, double eps, const Point& y, int order,
                   double f[3][kMaxDim]) {
  for (int i = 0; i < x.size(); ++i) {
    double v[3];
    prof.values((y(i) - x(i)) / eps, v);
    f[0][i] = v[0] / eps;
    if (order >= 1) f[1][i] = -v[1] / (eps * eps);
    if (order >= 2) f[2][i] = v[2] / (eps * eps * eps);
  }
}

// Product weights W0, W1[c], W2[c*n+d] from per-axis factors.
void product_weights(int n, int order, const double f[3][kMaxDim], double scale, double& w0, double* w1,
                     double* w2) {
  w0 = scale;
  for (int i = 0; i < n; ++i) w0 *= f[0][i];
  if (order < 1) return;
  for (int c = 0; c < n; ++c) {
    double p = scale * f[1][c];
    for (int i = 0; i < n; ++i)
      if (i != c) p *= f[0][i];
    w1[c] = p;
  }
  if (order < 2) return;
  for (int c = 0; c < n; ++c)
    for (int d = c; d < n; ++d) {
      double p = scale;
      if (c == d) {
        p *= f[2][c];
      } else {
        p *= f[1][c] * f[1][d];
      }
      for (int i = 0; i < n; ++i)
        if (i != c && i != d) p *= f[0][i];
      w2[c * n + d] = p;
      w2[d * n + c] = p;
    }
}

struct MatJet {
  Mat v;
  std::vector<Mat> d1;
  std::vector<Mat> d2;
};

// Jets of F (lower slots) and F^-1 (upper slots) at x.
void frame_jets(const TransportOperator& tr, const Point& x, int order, MatJet& f, MatJet& finv) {
  const int n = static_cast<int>(x.size());
  f.v = tr.frame(x);
  finv.v = small_inverse(f.v);
  if (order >= 1) {
    f.d1 = tr.frame_d1(x);
    finv.d1.assign(n, Mat());
    for (int c = 0; c < n; ++c) finv.d1[c] = -finv.v * f.d1[c] * finv.v;
  }
  if (order >= 2) {
    f.d2 = tr.frame_d2(x);
    finv.d2.assign(n * n, Mat());
    for (int c = 0; c < n; ++c)
      for (int d = 0; d < n; ++d)
        finv.d2[c * n + d] = finv.v * f.d1[c] * finv.v * f.d1[d] * finv.v +
                             finv.v * f.d1[d] * finv.v * f.d1[c] * finv.v -
                             finv.v * f.d2[c * n + d] * finv.v;
  }
}

// out = M_1 x ... x M_r applied to the jet u, with M_s = finv for upper
// slots and f for lower slots, differentiated by the product rule.
void outer_transform_jet(int n, Valence val, const MatJet& f, const MatJet& finv, const Jet& u, Jet& out) {
  const int r = val.rank();
  const std::size_t m = u.value.size();
  const int order = u.order;
  out.resize(n, m, order);
  std::vector<const MatJet*> slot(r);
  for (int s = 0; s < r; ++s) slot[s] = s < val.upper ? &finv : &f;
  std::vector<const Mat*> maps(r);
  std::vector<double> tmp(m);
  auto base = [&]() {
    for (int s = 0; s < r; ++s) maps[s] = &slot[s]->v;
  };
  auto add = [&](std::span<const double> in, std::span<double> dst) {
    transform_slots(n, val, in, maps, tmp);
    for (std::size_t k = 0; k < m; ++k) dst[k] += tmp[k];
  };
  std::span<const double> u0(u.value);
  base();
  transform_slots(n, val, u0, maps, out.value);
  if (order < 1) return;
  for (int c = 0; c < n; ++c) {
    std::span<double> dst(out.first.data() + c * m, m);
    std::fill(dst.begin(), dst.end(), 0.0);
    base();
    add(std::span<const double>(u.first.data() + c * m, m), dst);
    for (int s = 0; s < r; ++s) {
      base();
      maps[s] = &slot[s]->d1[c];
      add(u0, dst);
    }
  }
  if (order < 2) return;
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d) {
      std::span<double> dst(out.second.data() + (c * n + d) * m, m);
      std::fill(dst.begin(), dst.end(), 0.0);
      base();
      add(std::span<const double>(u.second.data() + (c * n + d) * m, m), dst);
      for (int s = 0; s < r; ++s) {
        base();
        maps[s] = &slot[s]->d2[c * n + d];
        add(u0, dst);
        base();
        maps[s] = &slot[s]->d1[c];
        add(std::span<const double>(u.first.data() + d * m, m), dst);
        base();
        maps[s] = &slot[s]->d1[d];
        add(std::span<const double>(u.first.data() + c * m, m), dst);
        for (int s2 = 0; s2 < r; ++s2) {
          if (s2 == s) continue;
          base();
          maps[s] = &slot[s]->d1[c];
          maps[s2] = &slot[s2]->d1[d];
          add(u0, dst);
        }
      }
    }
}

// Inner frame transform at y: upper slots by F(y), lower slots by F(y)^-1.
void inner_transform(const TransportOperator& tr, int n, Valence val, const Point& y, std::span<double> v) {
  if (tr.is_identity() || val.rank() == 0) return;
  const Mat f = tr.frame(y);
  const Mat finv = val.lower > 0 ? small_inverse(f) : Mat();
  const Mat* maps[2 * kMaxDim];
  for (int s = 0; s < val.rank(); ++s) maps[s] = s < val.upper ? &f : &finv;
  constexpr std::size_t kBuffer = 256;
  double buf[kBuffer];
  std::vector<double> heap;
  std::span<double> tmp(buf, v.size());
  if (v.size() > kBuffer) {
    heap.resize(v.size());
    tmp = heap;
  }
  std::copy(v.begin(), v.end(), tmp.begin());
  transform_slots(n, val, tmp, std::span<const Mat* const>(maps, val.rank()), v);
}

// Exact jets of iota for a product kernel and a frame transport.
struct FastSmoothing {
  std::shared_ptr<const RoughTensorField> t;
  SmoothingChoice choice;
  double eps;
  EmbeddingQuadrature quad;

  void operator()(const Point& x, int order, Jet& out) const {
    const int n = t->dim();
    const Valence val = t->valence();
    const std::size_t m = t->components();
    const MollifierProfile& prof = *choice.kernel.profile();
    check_query(t->chart(), x, eps * std::sqrt(static_cast<double>(n)));

    Jet u;
    u.resize(n, m, order);
    std::fill(u.value.begin(), u.value.end(), 0.0);
    std::fill(u.first.begin(), u.first.end(), 0.0);
    std::fill(u.second.begin(), u.second.end(), 0.0);

    if (t->has_integrable_part()) {
      const Box b = Box::around(x, eps);
      const auto br = axis_breaks(*t, b);
      const auto rules = axis_rules(b, br, quad);
      const auto duffy = duffy_cells(*t, b, rules);
      const int mdeg = duffy.empty() ? quad.moment_degree : -1;
      std::vector<AxisKernelWeights> aw;
      for (int i = 0; i < n; ++i) aw.push_back(axis_kernel_weights(prof, rules[i], x(i), eps, order, mdeg));

      double z0 = 0.0, z1[kMaxDim] = {}, z2[kMaxDim * kMaxDim] = {};
      std::vector<double> val_y(m), ref;
      double w0, w1[kMaxDim], w2[kMaxDim * kMaxDim];
      double f[3][kMaxDim];
      for_each_node(rules, duffy, quad.order, [&](const Point& y, std::span<const int> j, double w) {
        if (!j.empty()) {
          for (int i = 0; i < n; ++i)
            for (int d = 0; d <= order; ++d) f[d][i] = aw[i].w[d][j[i]];
          product_weights(n, order, f, 1.0, w0, w1, w2);
        } else {
          point_factors(prof, x, eps, y, order, f);
          product_weights(n, order, f, w, w0, w1, w2);
        }
        if (w0 == 0.0 && order == 0) return;
        t->evaluate(y, val_y);
        for (std::size_t k = 0; k < m; ++k)
          if (!std::isfinite(val_y[k])) throw_poisoned(y, val_y[k]);
        inner_transform(choice.transport, n, val, y, val_y);
        // Sums against val - ref keep the roundoff of the derivative weights
        // proportional to the local variation instead of the magnitude.
        if (ref.empty()) ref = val_y;
        for (std::size_t k = 0; k < m; ++k) val_y[k] -= ref[k];
        z0 += w0;
        for (std::size_t k = 0; k < m; ++k) u.value[k] += w0 * val_y[k];
        if (order >= 1)
          for (int c = 0; c < n; ++c) {
            z1[c] += w1[c];
            for (std::size_t k = 0; k < m; ++k) u.first[c * m + k] += w1[c] * val_y[k];
          }
        if (order >= 2)
          for (int c = 0; c < n; ++c)
            for (int d = c; d < n; ++d) {
              z2[c * n + d] += w2[c * n + d];
              for (std::size_t k = 0; k < m; ++k) u.second[(c * n + d) * m + k] += w2[c * n + d] * val_y[k];
            }
      });
      if (!(z0 > 0.0)) throw IntegrationPoisonedError("discrete kernel mass is not positive at " + fmt(x));
      // Quotient by the discrete mass Z and its jets.
      for (std::size_t k = 0; k < m; ++k) {
        const double q0 = u.value[k] / z0;
        double q1[kMaxDim] = {};
        if (order >= 1)
          for (int c = 0; c < n; ++c) q1[c] = (u.first[c * m + k] - q0 * z1[c]) / z0;
        if (order >= 2)
          for (int c = 0; c < n; ++c)
            for (int d = c; d < n; ++d) {
              const double v = (u.second[(c * n + d) * m + k] - q1[c] * z1[d] - q1[d] * z1[c] -
                                q0 * z2[c * n + d]) /
                               z0;
              u.second[(c * n + d) * m + k] = v;
              u.second[(d * n + c) * m + k] = v;
            }
        if (order >= 1)
          for (int c = 0; c < n; ++c) u.first[c * m + k] = q1[c];
        u.value[k] = q0 + (ref.empty() ? 0.0 : ref[k]);
      }
    }

    const Box b = Box::around(x, eps);
    for (const DeltaTerm& dt : t->deltas()) {
      if (!b.contains(dt.point, 0.0)) continue;
      double f[3][kMaxDim], w0, w1[kMaxDim], w2[kMaxDim * kMaxDim];
      point_factors(prof, x, eps, dt.point, order, f);
      product_weights(n, order, f, 1.0, w0, w1, w2);
      std::vector<double> c(dt.coefficient.components().begin(), dt.coefficient.components().end());
      inner_transform(choice.transport, n, val, dt.point, c);
      for (std::size_t k = 0; k < m; ++k) {
        u.value[k] += w0 * c[k];
        if (order >= 1)
          for (int a = 0; a < n; ++a) u.first[a * m + k] += w1[a] * c[k];
        if (order >= 2)
          for (int a = 0; a < n * n; ++a) u.second[a * m + k] += w2[a] * c[k];
      }
    }

    if (choice.transport.is_identity() || val.rank() == 0) {
      out = std::move(u);
      return;
    }
    MatJet fj, fi;
    frame_jets(choice.transport, x, order, fj, fi);
    outer_transform_jet(n, val, fj, fi, u, out);
  }
};

// Sum over injective assignments of the transport directions to slots of
// the slot-wise transported tensor.
class SlotTransport {
 public:
  SlotTransport(const TransportOperator& tr, const std::vector<TransportPerturbation>& dirs, int n, Valence val)
      : tr_(tr), dirs_(dirs), n_(n), val_(val) {}

  void apply(const Point& x, const Point& y, std::span<const double> in, std::span<double> out) const {
    const int r = val_.rank();
    const std::size_t m = in.size();
    if (r == 0) {
      std::copy(in.begin(), in.end(), out.begin());
      return;
    }
    const bool ident = tr_.is_identity();
    if (ident && dirs_.empty()) {
      std::copy(in.begin(), in.end(), out.begin());
      return;
    }
    Mat up, low;
    if (!ident) {
      if (val_.upper > 0) up = tr_(x, y);
      if (val_.lower > 0) low = tr_(y, x);
    }
    const Mat* maps0[2 * kMaxDim];
    constexpr std::size_t kBuffer = 256;
    if (dirs_.size() <= 1 && r <= 2 * kMaxDim && m <= kBuffer) {
      for (int s = 0; s < r; ++s) maps0[s] = ident ? nullptr : (s < val_.upper ? &up : &low);
      if (dirs_.empty()) {
        transform_slots(n_, val_, in, std::span<const Mat* const>(maps0, r), out);
        return;
      }
      // One direction: sum over the slot that carries it.
      const Mat du = val_.upper > 0 ? dirs_[0](x, y) : Mat();
      const Mat dl = val_.lower > 0 ? dirs_[0](y, x) : Mat();
      double tmp[kBuffer];
      std::fill(out.begin(), out.end(), 0.0);
      for (int s = 0; s < r; ++s) {
        const Mat* keep = maps0[s];
        maps0[s] = s < val_.upper ? &du : &dl;
        transform_slots(n_, val_, in, std::span<const Mat* const>(maps0, r), std::span<double>(tmp, m));
        for (std::size_t k = 0; k < m; ++k) out[k] += tmp[k];
        maps0[s] = keep;
      }
      return;
    }
    std::vector<Mat> dup, dlow;
    for (const auto& d : dirs_) {
      dup.push_back(val_.upper > 0 ? d(x, y) : Mat());
      dlow.push_back(val_.lower > 0 ? d(y, x) : Mat());
    }
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<const Mat*> maps(r);
    std::vector<int> owner(r, -1);
    std::vector<double> tmp(m);
    const int j = static_cast<int>(dirs_.size());
    std::function<void(int)> rec = [&](int dir) {
      if (dir == j) {
        for (int s = 0; s < r; ++s) {
          const bool upper = s < val_.upper;
          if (owner[s] >= 0)
            maps[s] = upper ? &dup[owner[s]] : &dlow[owner[s]];
          else
            maps[s] = ident ? nullptr : (upper ? &up : &low);
        }
        transform_slots(n_, val_, in, maps, tmp);
        for (std::size_t k = 0; k < m; ++k) out[k] += tmp[k];
        return;
      }
      for (int s = 0; s < r; ++s) {
        if (owner[s] >= 0) continue;
        owner[s] = dir;
        rec(dir + 1);
        owner[s] = -1;
      }
    };
    rec(0);
  }

 private:
  const TransportOperator& tr_;
  const std::vector<TransportPerturbation>& dirs_;
  int n_;
  Valence val_;
};

Box hull(const Box& a, const Box& b) { return Box(a.lower.cwiseMin(b.lower), a.upper.cwiseMax(b.upper)); }

// Value-only smoothing for arbitrary kernels, transports and variations.
struct GenericSmoothing {
  std::shared_ptr<const RoughTensorField> t;
  SmoothingChoice choice;
  double eps;
  Variation var;
  EmbeddingQuadrature quad;

  void operator()(const Point& x, std::span<double> out) const {
    const int n = t->dim();
    const Valence val = t->valence();
    const std::size_t m = t->components();
    const bool pert = !var.kernel.empty();
    Box b = choice.kernel.support(x, eps);
    if (pert) b = hull(b, var.kernel.front().support(x, eps));
    if (choice.kernel.profile()) check_query(t->chart(), x, eps * std::sqrt(static_cast<double>(n)));
    if (!t->chart().domain().contains(b))
      throw BoundaryProximityError("kernel support at " + fmt(x) + " leaves the chart domain");
    const SlotTransport st(choice.transport, var.transport, n, val);
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> val_y(m), tr_y(m);

    if (t->has_integrable_part()) {
      const auto br = axis_breaks(*t, b);
      const auto rules = axis_rules(b, br, quad);
      const auto duffy = duffy_cells(*t, b, rules);
      std::vector<double> nw(m, 0.0), n1(m, 0.0);
      double z = 0.0, z1 = 0.0;
      for_each_node(rules, duffy, quad.order, [&](const Point& y, std::span<const int>, double w) {
        const double k0 = w * choice.kernel(x, eps, y);
        const double k1 = pert ? w * var.kernel.front()(x, eps, y) : 0.0;
        if (k0 == 0.0 && k1 == 0.0) return;
        t->evaluate(y, val_y);
        for (std::size_t k = 0; k < m; ++k)
          if (!std::isfinite(val_y[k])) throw_poisoned(y, val_y[k]);
        st.apply(x, y, val_y, tr_y);
        z += k0;
        z1 += k1;
        for (std::size_t k = 0; k < m; ++k) {
          nw[k] += k0 * tr_y[k];
          n1[k] += k1 * tr_y[k];
        }
      });
      if (!(z > 0.0)) throw IntegrationPoisonedError("discrete kernel mass is not positive at " + fmt(x));
      for (std::size_t k = 0; k < m; ++k) {
        const double u = nw[k] / z;
        out[k] = pert ? (n1[k] - u * z1) / z : u;
      }
    }
    for (const DeltaTerm& dt : t->deltas()) {
      const double kp = pert ? var.kernel.front()(x, eps, dt.point) : choice.kernel(x, eps, dt.point);
      if (kp == 0.0) continue;
      st.apply(x, dt.point, dt.coefficient.components(), tr_y);
      for (std::size_t k = 0; k < m; ++k) out[k] += kp * tr_y[k];
    }
  }
};

TensorField realize_iota(const std::shared_ptr<const RoughTensorField>& t, const SmoothingChoice& choice,
                         double eps, const Variation& v, const EmbeddingQuadrature& quad) {
  if (!(eps > 0.0)) throw ContractViolation("iota needs eps > 0");
  if (choice.kernel.dim() != t->dim() || choice.transport.dim() != t->dim())
    throw ContractViolation("smoothing choice dimension does not match the field");
  const Chart chart = t->chart().without_exclusions();
  const Valence val = t->valence();
  if (v.kernel.size() >= 2 || static_cast<int>(v.transport.size()) > val.rank()) {
    const std::size_t m = t->components();
    return TensorField(
        chart, val, [m](const Point&, std::span<double> out) { std::fill(out.begin(), out.begin() + m, 0.0); },
        Smoothness::regularized, eps, [m, n = t->dim()](const Point&, int order, Jet& j) {
          j.resize(n, m, order);
          std::fill(j.value.begin(), j.value.end(), 0.0);
          std::fill(j.first.begin(), j.first.end(), 0.0);
          std::fill(j.second.begin(), j.second.end(), 0.0);
        });
  }
  if (v.empty() && choice.kernel.profile() && choice.transport.has_frame()) {
    FastSmoothing fast{t, choice, eps, quad};
    TensorField::Evaluator eval = [fast](const Point& x, std::span<double> out) {
      Jet j;
      fast(x, 0, j);
      std::copy(j.value.begin(), j.value.end(), out.begin());
    };
    return TensorField(chart, val, std::move(eval), Smoothness::regularized, eps, fast);
  }
  return TensorField(chart, val, GenericSmoothing{t, choice, eps, v, quad}, Smoothness::regularized, eps);
}

}  // namespace

RoughTensorField::RoughTensorField(Chart chart, Valence valence, std::string label)
    : chart_(std::move(chart)), valence_(valence), label_(std::move(label)) {}

RoughTensorField RoughTensorField::loc_integrable(Chart chart, Valence valence, TensorField::Evaluator eval,
                                                  std::vector<Plane> kinks, std::string label) {
  if (!eval) throw ContractViolation("rough field needs an evaluator");
  RoughTensorField r(std::move(chart), valence, std::move(label));
  r.parts_.emplace_back(1.0, std::move(eval));
  for (const Plane& p : kinks)
    if (p.axis < 0 || p.axis >= r.dim()) throw ContractViolation("kink plane axis out of range");
  r.kinks_ = std::move(kinks);
  return r;
}

RoughTensorField RoughTensorField::from_smooth(const TensorField& f, std::string label) {
  return loc_integrable(
      f.chart(), f.valence(), [f](const Point& y, std::span<double> out) { f.evaluate(y, out); }, {},
      std::move(label));
}

RoughTensorField RoughTensorField::delta(Chart chart, const Point& p, const Tensor& coefficient, std::string label) {
  RoughTensorField r(std::move(chart), coefficient.valence(), std::move(label));
  r.add_delta(p, coefficient);
  return r;
}

RoughTensorField& RoughTensorField::add_delta(const Point& p, const Tensor& coefficient) {
  if (coefficient.valence() != valence_ || coefficient.size() != components())
    throw ContractViolation("delta coefficient valence does not match the field");
  if (p.size() != dim() || !chart_.domain().contains(p))
    throw ContractViolation("delta point outside the chart");
  deltas_.push_back({p, coefficient});
  return *this;
}

RoughTensorField RoughTensorField::scaled(double s) const {
  RoughTensorField r = *this;
  for (auto& [c, e] : r.parts_) c *= s;
  for (auto& d : r.deltas_) d.coefficient *= s;
  return r;
}

RoughTensorField operator+(const RoughTensorField& a, const RoughTensorField& b) {
  if (a.valence_ != b.valence_ || a.dim() != b.dim()) throw ContractViolation("sum of rough fields with different valence");
  std::vector<Point> excl = a.chart_.excluded_points();
  for (const Point& p : b.chart_.excluded_points()) excl.push_back(p);
  RoughTensorField r(Chart(a.chart_.domain(), excl), a.valence_, a.label_ + "+" + b.label_);
  r.parts_ = a.parts_;
  r.parts_.insert(r.parts_.end(), b.parts_.begin(), b.parts_.end());
  r.deltas_ = a.deltas_;
  r.deltas_.insert(r.deltas_.end(), b.deltas_.begin(), b.deltas_.end());
  r.kinks_ = a.kinks_;
  for (const Plane& p : b.kinks_)
    if (std::find(r.kinks_.begin(), r.kinks_.end(), p) == r.kinks_.end()) r.kinks_.push_back(p);
  return r;
}

void RoughTensorField::evaluate(const Point& y, std::span<double> out) const {
  const std::size_t m = components();
  if (parts_.size() == 1 && parts_[0].first == 1.0) {
    parts_[0].second(y, out);
    return;
  }
  std::fill(out.begin(), out.begin() + m, 0.0);
  std::vector<double> tmp(m);
  for (const auto& [c, e] : parts_) {
    e(y, tmp);
    for (std::size_t k = 0; k < m; ++k) out[k] += c * tmp[k];
  }
}

double RoughTensorField::pair(const TestDensity& psi, int order, double min_cell) const {
  if (psi.valence() != valence_.dual() || psi.dim() != dim())
    throw ContractViolation("test density valence does not match the field");
  double total = 0.0;
  if (has_integrable_part()) {
    GradedOptions g;
    g.order = order;
    g.min_cell = min_cell;
    g.base_cells = 16;
    g.focus_points = chart_.excluded_points();
    g.focus_planes = kinks_;
    total += integrate_graded(
        [&](const Point& y) {
          Tensor t(dim(), valence_);
          evaluate(y, t.components());
          return full_pairing(t, psi(y));
        },
        psi.support(), g);
  }
  for (const DeltaTerm& d : deltas_) total += full_pairing(d.coefficient, psi(d.point));
  return total;
}

Focus Focus::merged(const Focus& o) const {
  Focus f = *this;
  for (const Point& p : o.points) {
    const bool dup = std::any_of(f.points.begin(), f.points.end(), [&](const Point& q) { return q == p; });
    if (!dup) f.points.push_back(p);
  }
  for (const Plane& p : o.planes)
    if (std::find(f.planes.begin(), f.planes.end(), p) == f.planes.end()) f.planes.push_back(p);
  for (const Point& p : o.deltas) {
    const bool dup = std::any_of(f.deltas.begin(), f.deltas.end(), [&](const Point& q) { return q == p; });
    if (!dup) f.deltas.push_back(p);
  }
  return f;
}

GeneralizedField::GeneralizedField(Chart chart, Valence valence, Realizer realizer, DependenceTags tags,
                                   std::string label, Focus focus)
    : chart_(std::move(chart)),
      valence_(valence),
      realizer_(std::move(realizer)),
      tags_(tags),
      label_(std::move(label)),
      focus_(std::move(focus)) {
  if (!realizer_) throw ContractViolation("generalized field needs a realizer");
}

TensorField GeneralizedField::represent(const SmoothingChoice& choice, double eps) const {
  return realizer_(choice, eps, Variation{});
}

TensorField GeneralizedField::vary(const SmoothingChoice& choice, double eps, const Variation& v) const {
  return realizer_(choice, eps, v);
}

GeneralizedField GeneralizedField::relabeled(std::string label) const {
  GeneralizedField g = *this;
  g.label_ = std::move(label);
  return g;
}

GeneralizedField GeneralizedField::scaled(double s) const {
  auto r = realizer_;
  return GeneralizedField(
      chart_, valence_,
      [r, s](const SmoothingChoice& c, double eps, const Variation& v) { return distgeom::scaled(r(c, eps, v), s); },
      tags_, label_, focus_);
}

namespace {
GeneralizedField combine(const GeneralizedField& a, double ca, const GeneralizedField& b, double cb,
                         const std::string& op) {
  if (a.valence() != b.valence() || a.dim() != b.dim())
    throw ContractViolation("sum of generalized fields with different valence");
  return GeneralizedField(
      a.chart(), a.valence(),
      [a, b, ca, cb](const SmoothingChoice& c, double eps, const Variation& v) {
        return linear_combination(ca, a.vary(c, eps, v), cb, b.vary(c, eps, v));
      },
      a.tags() | b.tags(), "(" + a.label() + op + b.label() + ")", a.focus().merged(b.focus()));
}
}  // namespace

GeneralizedField operator+(const GeneralizedField& a, const GeneralizedField& b) { return combine(a, 1.0, b, 1.0, " + "); }
GeneralizedField operator-(const GeneralizedField& a, const GeneralizedField& b) { return combine(a, 1.0, b, -1.0, " - "); }

GeneralizedField iota(const RoughTensorField& t, EmbeddingQuadrature quad) {
  auto shared = std::make_shared<const RoughTensorField>(t);
  Focus focus;
  focus.points = t.chart().excluded_points();
  for (const DeltaTerm& d : t.deltas()) {
    focus.points.push_back(d.point);
    focus.deltas.push_back(d.point);
  }
  focus.planes = t.kinks();
  DependenceTags tags{t.valence().rank() > 0, true};
  return GeneralizedField(
      t.chart(), t.valence(),
      [shared, quad](const SmoothingChoice& c, double eps, const Variation& v) {
        return realize_iota(shared, c, eps, v, quad);
      },
      tags, "iota(" + t.label() + ")", std::move(focus));
}

TensorField iota_at(const RoughTensorField& t, const SmoothingChoice& choice, double eps, EmbeddingQuadrature quad) {
  return realize_iota(std::make_shared<const RoughTensorField>(t), choice, eps, Variation{}, quad);
}

GeneralizedField sigma(const TensorField& t, std::string label) {
  Focus focus;
  focus.points = t.chart().excluded_points();
  return GeneralizedField(
      t.chart(), t.valence(),
      [t](const SmoothingChoice&, double, const Variation& v) {
        return v.empty() ? t : TensorField::zero(t.chart(), t.valence());
      },
      DependenceTags{}, "sigma(" + (label.empty() ? std::string("T") : label) + ")", std::move(focus));
}

Diffeomorphism Diffeomorphism::identity(int dim) {
  return linear(Mat::Identity(dim, dim), Point::Zero(dim));
}

Diffeomorphism Diffeomorphism::translation(const Point& b) {
  Diffeomorphism d = linear(Mat::Identity(b.size(), b.size()), b);
  d.label = "translation" + fmt(b);
  return d;
}

Diffeomorphism Diffeomorphism::linear(const Mat& l, const Point& b) {
  const Point off = b.size() == 0 ? Point(Point::Zero(l.rows())) : b;
  if (std::abs(l.determinant()) < 1e-14) throw ContractViolation("linear diffeomorphism is singular");
  const Mat linv = l.inverse();
  Diffeomorphism d;
  d.forward = [l, off](const Point& x) -> Point { return l * x + off; };
  d.inverse = [linv, off](const Point& x) -> Point { return linv * (x - off); };
  d.jacobian = [l](const Point&) { return l; };
  d.affine = true;
  d.label = "linear";
  return d;
}

namespace {
Box image_box(const Box& b, const Diffeomorphism& mu) {
  const int n = b.dim();
  Point lo = Point::Constant(n, std::numeric_limits<double>::infinity());
  Point hi = Point::Constant(n, -std::numeric_limits<double>::infinity());
  const int k = mu.affine ? 2 : 9;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= k;
  for (int f = 0; f < total; ++f) {
    Point p(n);
    int rem = f;
    for (int i = 0; i < n; ++i) {
      const int j = rem % k;
      rem /= k;
      p(i) = b.lower(i) + (b.upper(i) - b.lower(i)) * j / (k - 1);
    }
    const Point q = mu.forward(p);
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  if (!mu.affine) {
    const Point pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return Box(lo, hi);
}
}  // namespace

SmoothingKernelFamily push_forward(const SmoothingKernelFamily& omega, const Diffeomorphism& mu) {
  const KernelEval ev = omega.eval();
  const KernelSupport sp = omega.support_fn();
  return SmoothingKernelFamily(
      omega.dim(),
      [ev, mu](const Point& x, double eps, const Point& y) {
        const Point yb = mu.inverse(y);
        return ev(mu.inverse(x), eps, yb) / std::abs(mu.jacobian(yb).determinant());
      },
      [sp, mu](const Point& x, double eps) { return image_box(sp(mu.inverse(x), eps), mu); },
      "push(" + omega.label() + ")", omega.moment_order());
}

KernelPerturbation push_forward(const KernelPerturbation& omega, const Diffeomorphism& mu) {
  const KernelEval ev = omega.eval();
  const KernelSupport sp = omega.support_fn();
  return KernelPerturbation(
      omega.dim(),
      [ev, mu](const Point& x, double eps, const Point& y) {
        const Point yb = mu.inverse(y);
        return ev(mu.inverse(x), eps, yb) / std::abs(mu.jacobian(yb).determinant());
      },
      [sp, mu](const Point& x, double eps) { return image_box(sp(mu.inverse(x), eps), mu); },
      "push(" + omega.label() + ")");
}

TransportOperator push_forward(const TransportOperator& upsilon, const Diffeomorphism& mu, const Chart& target) {
  return TransportOperator::custom(
      target,
      [upsilon, mu](const Point& xp, const Point& yp) -> Mat {
        const Point x = mu.inverse(xp), y = mu.inverse(yp);
        return mu.jacobian(x) * upsilon(x, y) * mu.jacobian(y).inverse();
      },
      "push(" + upsilon.label() + ")");
}

TransportPerturbation push_forward(const TransportPerturbation& upsilon, const Diffeomorphism& mu) {
  return TransportPerturbation(
      upsilon.dim(),
      [upsilon, mu](const Point& xp, const Point& yp) -> Mat {
        const Point x = mu.inverse(xp), y = mu.inverse(yp);
        return mu.jacobian(x) * upsilon(x, y) * mu.jacobian(y).inverse();
      },
      "push(" + upsilon.label() + ")", upsilon.vanishes_on_diagonal());
}

TensorField pullback_field(const TensorField& t, const Diffeomorphism& mu, const Chart& source) {
  const Valence val = t.valence();
  const int n = t.dim();
  const std::size_t m = t.components();
  TensorField::Evaluator eval = [t, mu, val, n, m](const Point& x, std::span<double> out) {
    std::vector<double> v(m);
    t.evaluate(mu.forward(x), v);
    if (val.rank() == 0) {
      out[0] = v[0];
      return;
    }
    const Mat j = mu.jacobian(x);
    const Mat jinv = j.inverse();
    std::vector<const Mat*> maps(val.rank());
    for (int s = 0; s < val.rank(); ++s) maps[s] = s < val.upper ? &jinv : &j;
    transform_slots(n, val, v, maps, out);
  };
  return TensorField(source, val, std::move(eval), t.smoothness(), t.eps());
}

GeneralizedField pullback_diffeo(const GeneralizedField& t, const Diffeomorphism& mu, const Chart& source) {
  if (source.dim() != t.dim()) throw ContractViolation("pullback chart dimension mismatch");
  Focus focus;
  for (const Point& p : t.focus().points) focus.points.push_back(mu.inverse(p));
  if (mu.affine) {
    const Point z = Point::Zero(t.dim());
    const Mat l = mu.jacobian(z);
    const bool diagonal = (l - Mat(l.diagonal().asDiagonal())).norm() == 0.0;
    if (diagonal) {
      const Point b = mu.forward(z);
      for (const Plane& p : t.focus().planes) focus.planes.push_back({p.axis, (p.value - b(p.axis)) / l(p.axis, p.axis)});
    }
  }
  const Chart target = t.chart();
  return GeneralizedField(
      source, t.valence(),
      [t, mu, source, target](const SmoothingChoice& c, double eps, const Variation& v) {
        SmoothingChoice pc{push_forward(c.transport, mu, target), push_forward(c.kernel, mu), "push(" + c.label + ")"};
        Variation pv;
        for (const auto& d : v.transport) pv.transport.push_back(push_forward(d, mu));
        for (const auto& d : v.kernel) pv.kernel.push_back(push_forward(d, mu));
        return pullback_field(t.vary(pc, eps, pv), mu, source);
      },
      t.tags(), "pullback(" + t.label() + ", " + mu.label + ")", std::move(focus));
}

}  // namespace distgeom
