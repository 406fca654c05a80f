#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace distgeom {

inline constexpr int kMaxDim = 4;

/// Chart point or chart vector; storage is inline (no heap) for n <= 4.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
/// Small square matrix (Jacobians, transport operators).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

Point make_point(std::initializer_list<double> xs);

/// Inverse through fixed-size Eigen kernels for n <= 4.
inline Mat small_inverse(const Mat& a) {
  switch (a.rows()) {
    case 1: return Mat::Constant(1, 1, 1.0 / a(0, 0));
    case 2: return Eigen::Matrix2d(a).inverse();
    case 3: return Eigen::Matrix3d(a).inverse();
    case 4: return Eigen::Matrix4d(a).inverse();
    default: return a.inverse();
  }
}

/// Tensor type (r, s): r contravariant and s covariant slots.
struct Valence {
  int upper = 0;
  int lower = 0;

  int rank() const { return upper + lower; }
  /// Valence of the dual object a field of this valence is paired with.
  Valence dual() const { return {lower, upper}; }
  bool operator==(const Valence&) const = default;
  std::string to_string() const;
};

std::size_t component_count(int dim, Valence v);

/// Dense component array of a tensor at one point.
///
/// Components are stored row-major with all upper slots first, then all lower
/// slots: T^{a1..ar}_{b1..bs} lives at flat index
/// ((a1*n + a2)*n + ... + b1)*n + ... + bs.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, Valence valence);
  Tensor(int dim, Valence valence, std::vector<double> components);

  static Tensor scalar(double value);
  static Tensor vector(const Point& v);
  static Tensor covector(const Point& v);
  /// Kronecker delta as a (1,1) tensor.
  static Tensor identity(int dim);
  static Tensor from_matrix(const Mat& m, Valence valence);

  int dim() const { return dim_; }
  Valence valence() const { return valence_; }
  std::size_t size() const { return data_.size(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  double& at(std::span<const int> index);
  double at(std::span<const int> index) const;
  double& at(std::initializer_list<int> index);
  double at(std::initializer_list<int> index) const;

  std::span<double> components() { return data_; }
  std::span<const double> components() const { return data_; }

  /// Rank-2 tensors as an n x n matrix (first slot = row).
  Mat to_matrix() const;

  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }

 private:
  std::size_t flat_index(std::span<const int> index) const;

  int dim_ = 0;
  Valence valence_{};
  std::vector<double> data_{0.0};
};

/// Outer product; slots of `a` come first within each of the upper and lower
/// groups.
Tensor outer(const Tensor& a, const Tensor& b);

/// Trace over upper slot `upper_slot` and lower slot `lower_slot`
/// (both 0-based within their group).
Tensor contract(const Tensor& t, int upper_slot, int lower_slot);

/// Full pairing T^{a..}_{b..} Psi^{b..}_{a..} of a (r,s) tensor with a (s,r)
/// tensor.
double full_pairing(const Tensor& t, const Tensor& psi);

/// Applies one linear map per slot: upper slot i becomes
/// M_i^a_c T^{..c..}, lower slot j becomes T_{..d..} M_j^d_b.
/// `maps` holds rank() matrices in slot order; nullptr means identity.
void transform_slots(int dim, Valence valence, std::span<const double> in,
                     std::span<const Mat* const> maps, std::span<double> out);

}  // namespace distgeom
