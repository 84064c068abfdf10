#pragma once

#include <cmath>

namespace burnside {

/// Forward-mode scalar carrying first and second derivatives with respect to
/// two seed directions. Value semantics, no allocation; every primitive
/// formula is evaluated on these to obtain exact Jacobians and Hessians
/// without finite differencing.
struct Dual2 {
  double v = 0;                    // value
  double dx = 0, dy = 0;           // gradient
  double hxx = 0, hxy = 0, hyy = 0;  // Hessian (symmetric)

  Dual2() = default;
  Dual2(double value) : v(value) {}

  static Dual2 seed(double value, int which) {
    Dual2 d(value);
    if (which == 0) d.dx = 1;
    else d.dy = 1;
    return d;
  }
};

inline Dual2 operator+(const Dual2& a, const Dual2& b) {
  Dual2 r;
  r.v = a.v + b.v;
  r.dx = a.dx + b.dx; r.dy = a.dy + b.dy;
  r.hxx = a.hxx + b.hxx; r.hxy = a.hxy + b.hxy; r.hyy = a.hyy + b.hyy;
  return r;
}

inline Dual2 operator-(const Dual2& a, const Dual2& b) {
  Dual2 r;
  r.v = a.v - b.v;
  r.dx = a.dx - b.dx; r.dy = a.dy - b.dy;
  r.hxx = a.hxx - b.hxx; r.hxy = a.hxy - b.hxy; r.hyy = a.hyy - b.hyy;
  return r;
}

inline Dual2 operator-(const Dual2& a) {
  Dual2 r;
  r.v = -a.v;
  r.dx = -a.dx; r.dy = -a.dy;
  r.hxx = -a.hxx; r.hxy = -a.hxy; r.hyy = -a.hyy;
  return r;
}

inline Dual2 operator*(const Dual2& a, const Dual2& b) {
  Dual2 r;
  r.v = a.v * b.v;
  r.dx = a.dx * b.v + a.v * b.dx;
  r.dy = a.dy * b.v + a.v * b.dy;
  r.hxx = a.hxx * b.v + 2 * a.dx * b.dx + a.v * b.hxx;
  r.hxy = a.hxy * b.v + a.dx * b.dy + a.dy * b.dx + a.v * b.hxy;
  r.hyy = a.hyy * b.v + 2 * a.dy * b.dy + a.v * b.hyy;
  return r;
}

/// 1/b via the chain rule; b.v must be nonzero.
inline Dual2 reciprocal(const Dual2& b) {
  double iv = 1.0 / b.v;
  double iv2 = iv * iv;
  double iv3 = iv2 * iv;
  Dual2 r;
  r.v = iv;
  r.dx = -b.dx * iv2;
  r.dy = -b.dy * iv2;
  r.hxx = (2 * b.dx * b.dx - b.v * b.hxx) * iv3;
  r.hxy = (2 * b.dx * b.dy - b.v * b.hxy) * iv3;
  r.hyy = (2 * b.dy * b.dy - b.v * b.hyy) * iv3;
  return r;
}

inline Dual2 operator/(const Dual2& a, const Dual2& b) { return a * reciprocal(b); }

inline Dual2 sin(const Dual2& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  Dual2 r;
  r.v = s;
  r.dx = c * a.dx; r.dy = c * a.dy;
  r.hxx = c * a.hxx - s * a.dx * a.dx;
  r.hxy = c * a.hxy - s * a.dx * a.dy;
  r.hyy = c * a.hyy - s * a.dy * a.dy;
  return r;
}

inline Dual2 cos(const Dual2& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  Dual2 r;
  r.v = c;
  r.dx = -s * a.dx; r.dy = -s * a.dy;
  r.hxx = -s * a.hxx - c * a.dx * a.dx;
  r.hxy = -s * a.hxy - c * a.dx * a.dy;
  r.hyy = -s * a.hyy - c * a.dy * a.dy;
  return r;
}

inline Dual2 sqrt(const Dual2& a) {
  double rt = std::sqrt(a.v);
  double d1 = 0.5 / rt;            // f'
  double d2 = -0.25 / (a.v * rt);  // f''
  Dual2 r;
  r.v = rt;
  r.dx = d1 * a.dx; r.dy = d1 * a.dy;
  r.hxx = d1 * a.hxx + d2 * a.dx * a.dx;
  r.hxy = d1 * a.hxy + d2 * a.dx * a.dy;
  r.hyy = d1 * a.hyy + d2 * a.dy * a.dy;
  return r;
}

/// Minimal complex pair over an arbitrary scalar (double or Dual2).
template <class T>
struct Cplx {
  T re{}, im{};
};

template <class T> inline Cplx<T> operator+(const Cplx<T>& a, const Cplx<T>& b) { return {a.re + b.re, a.im + b.im}; }
template <class T> inline Cplx<T> operator-(const Cplx<T>& a, const Cplx<T>& b) { return {a.re - b.re, a.im - b.im}; }

template <class T>
inline Cplx<T> operator*(const Cplx<T>& a, const Cplx<T>& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

template <class T> inline Cplx<T> conj(const Cplx<T>& a) { return {a.re, -a.im}; }
template <class T> inline T norm2(const Cplx<T>& a) { return a.re * a.re + a.im * a.im; }

}  // namespace burnside
