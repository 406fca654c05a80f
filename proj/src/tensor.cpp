#include "distgeom/tensor.hpp"

#include "distgeom/errors.hpp"

#include <algorithm>
#include <cmath>

namespace distgeom {

Point make_point(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double v : xs) p(i++) = v;
  return p;
}

std::string Valence::to_string() const {
  return "(" + std::to_string(upper) + "," + std::to_string(lower) + ")";
}

std::size_t component_count(int dim, Valence v) {
  std::size_t n = 1;
  for (int k = 0; k < v.rank(); ++k) n *= static_cast<std::size_t>(dim);
  return n;
}

Tensor::Tensor(int dim, Valence valence)
    : dim_(dim), valence_(valence), data_(component_count(dim, valence), 0.0) {
  if (dim < 1 || dim > kMaxDim) throw ContractViolation("tensor dimension out of range");
  if (valence.upper < 0 || valence.lower < 0) throw ContractViolation("negative valence");
}

Tensor::Tensor(int dim, Valence valence, std::vector<double> components)
    : Tensor(dim, valence) {
  if (components.size() != data_.size())
    throw ContractViolation("component count does not match valence " + valence.to_string());
  data_ = std::move(components);
}

Tensor Tensor::scalar(double value) {
  Tensor t(1, {0, 0});
  t.data_[0] = value;
  return t;
}

Tensor Tensor::vector(const Point& v) {
  Tensor t(static_cast<int>(v.size()), {1, 0});
  for (int i = 0; i < v.size(); ++i) t.data_[i] = v(i);
  return t;
}

Tensor Tensor::covector(const Point& v) {
  Tensor t(static_cast<int>(v.size()), {0, 1});
  for (int i = 0; i < v.size(); ++i) t.data_[i] = v(i);
  return t;
}

Tensor Tensor::identity(int dim) {
  Tensor t(dim, {1, 1});
  for (int i = 0; i < dim; ++i) t.data_[i * dim + i] = 1.0;
  return t;
}

Tensor Tensor::from_matrix(const Mat& m, Valence valence) {
  if (valence.rank() != 2 || m.rows() != m.cols())
    throw ContractViolation("from_matrix needs a square matrix and a rank-2 valence");
  const int n = static_cast<int>(m.rows());
  Tensor t(n, valence);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t.data_[i * n + j] = m(i, j);
  return t;
}

std::size_t Tensor::flat_index(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != valence_.rank())
    throw ContractViolation("index length does not match tensor rank");
  std::size_t flat = 0;
  for (int i : index) {
    if (i < 0 || i >= dim_) throw ContractViolation("tensor index out of range");
    flat = flat * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
  }
  return flat;
}

double& Tensor::at(std::span<const int> index) { return data_[flat_index(index)]; }
double Tensor::at(std::span<const int> index) const { return data_[flat_index(index)]; }
double& Tensor::at(std::initializer_list<int> index) {
  return at(std::span<const int>(index.begin(), index.size()));
}
double Tensor::at(std::initializer_list<int> index) const {
  return at(std::span<const int>(index.begin(), index.size()));
}

Mat Tensor::to_matrix() const {
  if (valence_.rank() != 2) throw ContractViolation("to_matrix needs a rank-2 tensor");
  Mat m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = data_[i * dim_ + j];
  return m;
}

double Tensor::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.valence_ != valence_ || other.data_.size() != data_.size())
    throw ContractViolation("adding tensors of different shape");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (other.valence_ != valence_ || other.data_.size() != data_.size())
    throw ContractViolation("subtracting tensors of different shape");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

namespace {

// Splits a flat index into per-slot digits (base n).
void digits_of(std::size_t flat, int dim, int rank, int* out) {
  for (int k = rank - 1; k >= 0; --k) {
    out[k] = static_cast<int>(flat % static_cast<std::size_t>(dim));
    flat /= static_cast<std::size_t>(dim);
  }
}

std::size_t flat_of(const int* digits, int dim, int rank) {
  std::size_t flat = 0;
  for (int k = 0; k < rank; ++k) flat = flat * static_cast<std::size_t>(dim) + digits[k];
  return flat;
}

}  // namespace

Tensor outer(const Tensor& a, const Tensor& b) {
  const bool a_scalar = a.valence().rank() == 0;
  const bool b_scalar = b.valence().rank() == 0;
  if (!a_scalar && !b_scalar && a.dim() != b.dim())
    throw ContractViolation("outer product of tensors of different dimension");
  const int n = a_scalar ? b.dim() : a.dim();
  const Valence va = a.valence();
  const Valence vb = b.valence();
  const Valence v{va.upper + vb.upper, va.lower + vb.lower};
  Tensor out(n, v);
  const int ra = va.rank();
  const int rb = vb.rank();
  int da[2 * kMaxDim + 8];
  int db[2 * kMaxDim + 8];
  int dout[4 * kMaxDim + 16];
  for (std::size_t i = 0; i < a.size(); ++i) {
    digits_of(i, n, ra, da);
    for (std::size_t j = 0; j < b.size(); ++j) {
      digits_of(j, n, rb, db);
      int k = 0;
      for (int s = 0; s < va.upper; ++s) dout[k++] = da[s];
      for (int s = 0; s < vb.upper; ++s) dout[k++] = db[s];
      for (int s = 0; s < va.lower; ++s) dout[k++] = da[va.upper + s];
      for (int s = 0; s < vb.lower; ++s) dout[k++] = db[vb.upper + s];
      out[flat_of(dout, n, v.rank())] = a[i] * b[j];
    }
  }
  return out;
}

Tensor contract(const Tensor& t, int upper_slot, int lower_slot) {
  const Valence v = t.valence();
  if (upper_slot < 0 || upper_slot >= v.upper || lower_slot < 0 || lower_slot >= v.lower)
    throw ContractViolation("contraction slot out of range for valence " + v.to_string());
  const int n = t.dim();
  const Valence vo{v.upper - 1, v.lower - 1};
  Tensor out(n, vo);
  const int rank = v.rank();
  const int up_pos = upper_slot;
  const int low_pos = v.upper + lower_slot;
  int d[4 * kMaxDim + 16];
  int dout[4 * kMaxDim + 16];
  for (std::size_t i = 0; i < t.size(); ++i) {
    digits_of(i, n, rank, d);
    if (d[up_pos] != d[low_pos]) continue;
    int k = 0;
    for (int s = 0; s < rank; ++s)
      if (s != up_pos && s != low_pos) dout[k++] = d[s];
    out[flat_of(dout, n, vo.rank())] += t[i];
  }
  return out;
}

double full_pairing(const Tensor& t, const Tensor& psi) {
  const Valence v = t.valence();
  if (psi.valence() != v.dual())
    throw ContractViolation("pairing needs a test object of valence " + v.dual().to_string());
  if (v.rank() == 0) return t[0] * psi[0];
  if (t.dim() != psi.dim()) throw ContractViolation("pairing of different dimensions");
  const int n = t.dim();
  const int rank = v.rank();
  int d[4 * kMaxDim + 16];
  int dp[4 * kMaxDim + 16];
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    digits_of(i, n, rank, d);
    // psi layout: its upper slots are t's lower slots, then t's upper slots.
    int k = 0;
    for (int s = 0; s < v.lower; ++s) dp[k++] = d[v.upper + s];
    for (int s = 0; s < v.upper; ++s) dp[k++] = d[s];
    sum += t[i] * psi[flat_of(dp, n, rank)];
  }
  return sum;
}

void transform_slots(int dim, Valence valence, std::span<const double> in,
                     std::span<const Mat* const> maps, std::span<double> out) {
  const int rank = valence.rank();
  const std::size_t count = component_count(dim, valence);
  if (in.size() != count || out.size() != count || static_cast<int>(maps.size()) != rank)
    throw ContractViolation("transform_slots: shape mismatch");
  // Ping-pong between two scratch buffers, one slot at a time.
  double buf_a[256];
  double buf_b[256];
  std::vector<double> heap_a, heap_b;
  double* cur = buf_a;
  double* nxt = buf_b;
  if (count > 256) {
    heap_a.resize(count);
    heap_b.resize(count);
    cur = heap_a.data();
    nxt = heap_b.data();
  }
  std::copy(in.begin(), in.end(), cur);
  std::size_t stride = count;
  for (int k = 0; k < rank; ++k) {
    stride /= static_cast<std::size_t>(dim);
    const Mat* m = maps[k];
    if (m == nullptr) continue;
    const bool upper = k < valence.upper;
    const std::size_t block = stride * static_cast<std::size_t>(dim);
    for (std::size_t base = 0; base < count; base += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        for (int a = 0; a < dim; ++a) {
          double s = 0.0;
          for (int c = 0; c < dim; ++c) {
            const double coeff = upper ? (*m)(a, c) : (*m)(c, a);
            s += coeff * cur[base + static_cast<std::size_t>(c) * stride + inner];
          }
          nxt[base + static_cast<std::size_t>(a) * stride + inner] = s;
        }
      }
    }
    std::swap(cur, nxt);
  }
  std::copy(cur, cur + count, out.begin());
}

}  // namespace distgeom
