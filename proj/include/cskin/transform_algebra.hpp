#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cskin/error.hpp"

namespace cskin {

template <typename T>
using Vec3T = std::array<T, 3>;
using Vec3 = Vec3T<double>;
using Vec3f = Vec3T<float>;

/// Number of scalars per (shape, bone) transform block, ordered (r1, r2, r3, t1, t2, t3).
inline constexpr std::size_t kParamsPerBlock = 6;

/// Linearized rotation r (radians) and translation t (model units).
template <typename T>
struct Params6T {
  Vec3T<T> r{};
  Vec3T<T> t{};

  T operator[](std::size_t d) const { return d < 3 ? r[d] : t[d - 3]; }
  T& operator[](std::size_t d) { return d < 3 ? r[d] : t[d - 3]; }

  bool is_finite() const {
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) {
      if (!std::isfinite((*this)[d])) return false;
    }
    return true;
  }
};
using Params6 = Params6T<double>;
using Params6f = Params6T<float>;

/// Row-major 3x4 affine matrix.
template <typename T>
struct Affine34T {
  std::array<T, 12> m{};

  T operator()(std::size_t row, std::size_t col) const { return m[row * 4 + col]; }
  T& operator()(std::size_t row, std::size_t col) { return m[row * 4 + col]; }

  static Affine34T identity() {
    Affine34T a;
    a(0, 0) = a(1, 1) = a(2, 2) = T(1);
    return a;
  }

  /// Applies the matrix to the homogeneous point (v, 1).
  Vec3T<T> apply(const Vec3T<T>& v) const {
    Vec3T<T> out;
    for (std::size_t row = 0; row < 3; ++row) {
      out[row] = m[row * 4] * v[0] + m[row * 4 + 1] * v[1] + m[row * 4 + 2] * v[2] + m[row * 4 + 3];
    }
    return out;
  }
};
using Affine34 = Affine34T<double>;
using Affine34f = Affine34T<float>;

/// Builds the 3x4 matrix [skew(r) | t]. Its action on (v, 1) is r x v + t.
template <typename T>
Affine34T<T> hat(const Params6T<T>& p) {
  const auto& r = p.r;
  const auto& t = p.t;
  Affine34T<T> a;
  a.m = {T(0), -r[2], r[1], t[0],
         r[2], T(0), -r[0], t[1],
         -r[1], r[0], T(0), t[2]};
  return a;
}

/// I + hat(p): the skinning matrix for an already-blended parameter vector.
template <typename T>
Affine34T<T> identity_plus_hat(const Params6T<T>& p) {
  Affine34T<T> a = hat(p);
  a(0, 0) += T(1);
  a(1, 1) += T(1);
  a(2, 2) += T(1);
  return a;
}

/// M_j = I + hat(sum_k c_k theta_{k,j}). Blending is done in parameter space; hat is applied once.
/// `theta_j[k]` holds the parameters of shape k for this bone.
Affine34 blend_to_transform(std::span<const double> c, std::span<const Params6> theta_j);

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace cskin
