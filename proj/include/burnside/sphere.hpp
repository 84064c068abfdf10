#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "burnside/common.hpp"

namespace burnside {

// Module tolerances, exposed read-only for property tests.
inline constexpr double kUnitTol = 1e-12;          // unit-norm / orthogonality invariant
inline constexpr double kPoleFrameTol = 1e-9;      // fallback frame radius around the z-poles
inline constexpr double kChartPoleMin = 1e-6;      // minimal distance to the excluded pole
inline constexpr double kChartSwitchZ = 0.9;       // north chart when z <= 0.9, south above

struct ChartDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A point of the unit 2-sphere embedded in R^3. The constructor enforces
/// the unit invariant; use project() to build from an arbitrary vector.
struct SpherePoint {
  Vec3 v;

  explicit SpherePoint(const Vec3& coords) : v(coords) {
    if (std::fabs(dot(v, v) - 1.0) > 2 * kUnitTol)
      throw std::invalid_argument("SpherePoint: coordinates are not unit length");
  }
  SpherePoint(double x, double y, double z) : SpherePoint(Vec3{x, y, z}) {}

  static SpherePoint project(const Vec3& a) { return SpherePoint(normalized(a)); }
};

inline bool operator==(const SpherePoint& a, const SpherePoint& b) {
  return a.v.x == b.v.x && a.v.y == b.v.y && a.v.z == b.v.z;
}

/// Great-circle distance in radians, in [0, pi]. Equals arccos(p.q) but is
/// computed as atan2(|p x q|, p.q), which keeps full precision at both ends.
inline double geodesic_distance(const SpherePoint& p, const SpherePoint& q) {
  return std::atan2(norm(cross(p.v, q.v)), dot(p.v, q.v));
}

/// A tangent vector attached to a base point; dir need not be unit but must
/// be orthogonal to the base.
struct TangentVector {
  SpherePoint base;
  Vec3 dir;

  TangentVector(const SpherePoint& b, const Vec3& d) : base(b), dir(d) {
    if (std::fabs(dot(b.v, d)) > kUnitTol * std::max(1.0, norm(d)))
      throw std::invalid_argument("TangentVector: dir is not orthogonal to base");
  }
};

/// Deterministic orthonormal tangent frame. Away from the z-poles e1 points
/// along the latitude circle (east) and e2 = base x e1 points north, so
/// {e1, e2, base} is positively oriented. Within kPoleFrameTol of a pole a
/// fixed fallback frame is used: north (1,0,0),(0,1,0); south (1,0,0),(0,-1,0).
struct Frame {
  SpherePoint base;
  Vec3 e1, e2;
};

inline Frame frame_at(const SpherePoint& p) {
  double r = std::hypot(p.v.x, p.v.y);
  if (r < kPoleFrameTol) {
    if (p.v.z > 0) return {p, {1, 0, 0}, {0, 1, 0}};
    return {p, {1, 0, 0}, {0, -1, 0}};
  }
  Vec3 e1{-p.v.y / r, p.v.x / r, 0.0};
  return {p, e1, cross(p.v, e1)};
}

enum class Chart { north, south };

/// Stereographic plane coordinates. The north chart projects from the north
/// pole (0,0,1) and covers everything else; the south chart projects from
/// (0,0,-1).
struct ChartCoords {
  Chart chart;
  double u, v;
};

/// Chart selection rule: north chart for z <= kChartSwitchZ, south above.
inline Chart chart_of(const SpherePoint& p) {
  return p.v.z <= kChartSwitchZ ? Chart::north : Chart::south;
}

template <class T>
inline void chart_project(const V3<T>& p, Chart chart, T& u, T& v) {
  if (chart == Chart::north) {
    T denom = T(1.0) - p.z;
    u = p.x / denom;
    v = p.y / denom;
  } else {
    T denom = T(1.0) + p.z;
    u = p.x / denom;
    v = p.y / denom;
  }
}

/// Inverse stereographic map. The image satisfies |p|^2 = 1 identically in
/// (u,v), so dual-number evaluation stays on the sphere to all orders.
template <class T>
inline V3<T> chart_lift(const T& u, const T& v, Chart chart) {
  T s = u * u + v * v;
  T denom = s + T(1.0);
  T two(2.0);
  if (chart == Chart::north) {
    return {two * u / denom, two * v / denom, (s - T(1.0)) / denom};
  }
  return {two * u / denom, two * v / denom, (T(1.0) - s) / denom};
}

inline SpherePoint stereographic_lift(const ChartCoords& c) {
  V3<double> p = chart_lift<double>(c.u, c.v, c.chart);
  // kill residual rounding so downstream unit checks stay at 1e-12
  return SpherePoint::project(p);
}

inline ChartCoords stereographic_project(const SpherePoint& p, Chart chart) {
  SpherePoint pole = chart == Chart::north ? SpherePoint(0, 0, 1) : SpherePoint(0, 0, -1);
  if (geodesic_distance(p, pole) < kChartPoleMin)
    throw ChartDomainError("stereographic_project: point too close to the excluded pole");
  double u, v;
  chart_project<double>(p.v, chart, u, v);
  return {chart, u, v};
}

inline ChartCoords stereographic_project(const SpherePoint& p) {
  return stereographic_project(p, chart_of(p));
}

/// Quasi-uniform deterministic point set (golden-angle spiral). No point
/// lies exactly on a pole or the equator for even n.
inline std::vector<SpherePoint> fibonacci_sphere(int n) {
  std::vector<SpherePoint> pts;
  pts.reserve(n);
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden_angle * i;
    pts.push_back(SpherePoint::project({r * std::cos(phi), r * std::sin(phi), z}));
  }
  return pts;
}

/// Point at parameter t in [0,1] on the geodesic from p to q (slerp).
inline SpherePoint geodesic_point(const SpherePoint& p, const SpherePoint& q, double t) {
  double theta = geodesic_distance(p, q);
  if (theta < 1e-14) return p;
  double s = std::sin(theta);
  Vec3 w = p.v * (std::sin((1 - t) * theta) / s) + q.v * (std::sin(t * theta) / s);
  return SpherePoint::project(w);
}

}  // namespace burnside
