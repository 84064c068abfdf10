#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <variant>

#include "burnside/dual.hpp"
#include "burnside/sphere.hpp"

namespace burnside {

inline constexpr double kDetTol = 1e-12;  // Mobius determinant invariant

/// Rigid rotation about a unit axis.
struct Rotation {
  Vec3 axis;
  double angle;

  Rotation(const Vec3& ax, double ang) : axis(ax), angle(ang) {
    if (std::fabs(dot(axis, axis) - 1.0) > 2 * kUnitTol)
      throw std::invalid_argument("Rotation: axis must be unit length");
  }
};

/// Fractional linear map acting in the north stereographic chart,
/// w -> (a w + b)/(c w + d) with ad - bc = 1. Conformal, not area preserving.
struct Mobius {
  std::complex<double> a, b, c, d;

  Mobius(std::complex<double> a_, std::complex<double> b_, std::complex<double> c_, std::complex<double> d_)
      : a(a_), b(b_), c(c_), d(d_) {
    if (std::abs(a * d - b * c - 1.0) > kDetTol)
      throw std::invalid_argument("Mobius: determinant ad - bc must be 1");
  }

  /// Rescales (a,b,c,d) so the determinant is exactly 1.
  static Mobius normalized(std::complex<double> a, std::complex<double> b,
                           std::complex<double> c, std::complex<double> d) {
    std::complex<double> det = a * d - b * c;
    if (std::abs(det) < 1e-15) throw std::invalid_argument("Mobius: singular coefficient matrix");
    std::complex<double> s = std::sqrt(det);
    return Mobius(a / s, b / s, c / s, d / s);
  }
};

/// Area-preserving shear about a unit axis: in cylindrical coordinates
/// (theta, h) about the axis, with h = p . axis, the map rotates each
/// latitude circle by strength * h. Preserves dtheta ^ dh, the round area.
struct Twist {
  Vec3 axis;
  double strength;

  Twist(const Vec3& ax, double s) : axis(ax), strength(s) {
    if (std::fabs(dot(axis, axis) - 1.0) > 2 * kUnitTol)
      throw std::invalid_argument("Twist: axis must be unit length");
  }
};

using Primitive = std::variant<Rotation, Mobius, Twist>;

namespace detail {

// Rodrigues rotation of v about unit axis k with given sine/cosine of the
// angle. The trig arguments may be duals (twist) or plain doubles (rotation).
template <class T>
inline V3<T> rodrigues(const V3<T>& v, const Vec3& k, const T& s, const T& c) {
  V3<T> kk{T(k.x), T(k.y), T(k.z)};
  V3<T> kxv = cross(kk, v);
  T kdv = dot(kk, v);
  T one_mc = T(1.0) - c;
  return {v.x * c + kxv.x * s + kk.x * (kdv * one_mc),
          v.y * c + kxv.y * s + kk.y * (kdv * one_mc),
          v.z * c + kxv.z * s + kk.z * (kdv * one_mc)};
}

}  // namespace detail

template <class T>
inline V3<T> apply_primitive(const Rotation& r, const V3<T>& p, int exponent) {
  double ang = exponent < 0 ? -r.angle : r.angle;
  return detail::rodrigues(p, r.axis, T(std::sin(ang)), T(std::cos(ang)));
}

template <class T>
inline V3<T> apply_primitive(const Twist& t, const V3<T>& p, int exponent) {
  double s = exponent < 0 ? -t.strength : t.strength;
  T theta = T(s) * dot(V3<T>{T(t.axis.x), T(t.axis.y), T(t.axis.z)}, p);
  using std::cos;
  using std::sin;
  return detail::rodrigues(p, t.axis, sin(theta), cos(theta));
}

/// Mobius action on the sphere through homogeneous coordinates on CP^1.
/// The representative [x + iy : 1 - z] (or [1 + z : x - iy] on the upper
/// half) avoids the chart pole entirely, so evaluation never fails.
template <class T>
inline V3<T> apply_primitive(const Mobius& m, const V3<T>& p, int exponent) {
  std::complex<double> a = m.a, b = m.b, c = m.c, d = m.d;
  if (exponent < 0) {
    a = m.d; b = -m.b; c = -m.c; d = m.a;
  }
  Cplx<T> z1, z2;
  double zv;
  if constexpr (std::is_same_v<T, double>) zv = p.z;
  else zv = p.z.v;
  if (zv <= 0.0) {
    z1 = {p.x, p.y};
    z2 = {T(1.0) - p.z, T(0.0)};
  } else {
    z1 = {T(1.0) + p.z, T(0.0)};
    z2 = {p.x, T(0.0) - p.y};
  }
  auto cc = [](std::complex<double> w) { return Cplx<T>{T(w.real()), T(w.imag())}; };
  Cplx<T> w1 = cc(a) * z1 + cc(b) * z2;
  Cplx<T> w2 = cc(c) * z1 + cc(d) * z2;
  T n1 = norm2(w1), n2 = norm2(w2);
  T n = n1 + n2;
  Cplx<T> xy = w1 * conj(w2);
  return {(T(2.0) * xy.re) / n, (T(2.0) * xy.im) / n, (n1 - n2) / n};
}

template <class T>
inline V3<T> apply_primitive(const Primitive& prim, const V3<T>& p, int exponent) {
  return std::visit([&](const auto& op) { return apply_primitive(op, p, exponent); }, prim);
}

/// Jacobian determinant of the primitive is 1 for Rotation and Twist
/// (area preserving); Mobius is conformal with positive determinant.
inline bool is_area_preserving(const Primitive& prim) {
  return !std::holds_alternative<Mobius>(prim);
}

}  // namespace burnside
