#include <catch2/catch_amalgamated.hpp>

#include "burnside/sphere.hpp"

using namespace burnside;

namespace {

SpherePoint random_point(std::uint64_t& state) {
  // rejection-free: normalize a Gaussian-ish triple built from uniforms
  double x = 2 * uniform01(state) - 1, y = 2 * uniform01(state) - 1, z = 2 * uniform01(state) - 1;
  double n = std::sqrt(x * x + y * y + z * z);
  if (n < 1e-3) return SpherePoint(1, 0, 0);
  return SpherePoint::project({x, y, z});
}

// Arc length of the great circle from p to q measured in the chart with the
// round conformal factor, by Simpson quadrature along the slerp.
double chart_arc_length(const SpherePoint& p, const SpherePoint& q, Chart chart) {
  const int segments = 2048;
  auto w_of = [&](double t) {
    SpherePoint s = geodesic_point(p, q, t);
    double u, v;
    chart_project<double>(s.v, chart, u, v);
    return std::pair<double, double>(u, v);
  };
  // speed of the chart curve times the conformal factor 2/(1+|w|^2),
  // via central differences of the chart path
  auto speed = [&](double t) {
    double h = 1e-6;
    auto [u1, v1] = w_of(t - h);
    auto [u2, v2] = w_of(t + h);
    double du = (u2 - u1) / (2 * h), dv = (v2 - v1) / (2 * h);
    auto [u, v] = w_of(t);
    return 2.0 * std::hypot(du, dv) / (1.0 + u * u + v * v);
  };
  double sum = 0;
  for (int i = 0; i < segments; ++i) {
    double a = static_cast<double>(i) / segments, b = static_cast<double>(i + 1) / segments;
    sum += (b - a) / 6.0 * (speed(a) + 4 * speed((a + b) / 2) + speed(b));
  }
  return sum;
}

}  // namespace

TEST_CASE("geodesic distance closed forms") {
  CHECK(geodesic_distance(SpherePoint(1, 0, 0), SpherePoint(-1, 0, 0)) == Catch::Approx(M_PI).margin(1e-15));
  SpherePoint p(0.6, 0.8, 0.0);
  CHECK(geodesic_distance(p, p) == 0.0);
  CHECK(geodesic_distance(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0)) ==
        Catch::Approx(M_PI / 2).margin(1e-15));
}

TEST_CASE("geodesic distance properties on random pairs") {
  std::uint64_t state = 42;
  for (int t = 0; t < 200; ++t) {
    SpherePoint p = random_point(state), q = random_point(state), r = random_point(state);
    double dpq = geodesic_distance(p, q);
    CHECK(dpq == geodesic_distance(q, p));
    CHECK(dpq >= 0.0);
    CHECK(dpq <= M_PI + 1e-15);
    CHECK(geodesic_distance(p, r) <= dpq + geodesic_distance(q, r) + 1e-10);
  }
}

TEST_CASE("non-unit input is rejected") {
  CHECK_THROWS_AS(SpherePoint(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(TangentVector(SpherePoint(0, 0, 1), Vec3{0, 0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("frame is orthonormal, oriented and deterministic") {
  std::uint64_t state = 7;
  for (int t = 0; t < 300; ++t) {
    SpherePoint p = random_point(state);
    Frame f = frame_at(p);
    CHECK(std::fabs(dot(f.e1, f.e1) - 1) < 1e-12);
    CHECK(std::fabs(dot(f.e2, f.e2) - 1) < 1e-12);
    CHECK(std::fabs(dot(f.e1, f.e2)) < 1e-12);
    CHECK(std::fabs(dot(f.e1, p.v)) < 1e-12);
    CHECK(std::fabs(dot(f.e2, p.v)) < 1e-12);
    Vec3 n = cross(f.e1, f.e2);
    CHECK(norm(n - p.v) < 1e-12);  // positively oriented
    Frame g = frame_at(p);
    CHECK(f.e1.x == g.e1.x);
    CHECK(f.e2.z == g.e2.z);
  }
}

TEST_CASE("pole fallback frames") {
  Frame n = frame_at(SpherePoint(0, 0, 1));
  CHECK(n.e1.x == 1.0);
  CHECK(n.e1.y == 0.0);
  CHECK(n.e2.y == 1.0);
  Frame s = frame_at(SpherePoint(0, 0, -1));
  CHECK(s.e1.x == 1.0);
  CHECK(s.e2.y == -1.0);
}

TEST_CASE("stereographic chart centers and equator") {
  ChartCoords c = stereographic_project(SpherePoint(0, 0, -1), Chart::north);
  CHECK(c.u == 0.0);
  CHECK(c.v == 0.0);
  ChartCoords e = stereographic_project(SpherePoint(1, 0, 0), Chart::north);
  CHECK(e.u == Catch::Approx(1.0).margin(1e-15));
  CHECK(e.v == 0.0);
}

TEST_CASE("chart round trip on 1000 random points") {
  std::uint64_t state = 99;
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    SpherePoint p = random_point(state);
    ChartCoords c = stereographic_project(p);
    SpherePoint q = stereographic_lift(c);
    worst = std::max(worst, norm(p.v - q.v));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("projecting the excluded pole fails") {
  CHECK_THROWS_AS(stereographic_project(SpherePoint(0, 0, 1), Chart::north), ChartDomainError);
  CHECK_THROWS_AS(stereographic_project(SpherePoint(0, 0, -1), Chart::south), ChartDomainError);
}

TEST_CASE("chart transition equals the analytic inversion") {
  std::uint64_t state = 123;
  for (int t = 0; t < 200; ++t) {
    SpherePoint p = random_point(state);
    if (std::fabs(p.v.z) > 0.9) continue;  // stay on the overlap
    ChartCoords n = stereographic_project(p, Chart::north);
    ChartCoords s = stereographic_project(p, Chart::south);
    double r2 = n.u * n.u + n.v * n.v;
    CHECK(std::fabs(s.u - n.u / r2) < 1e-12);
    CHECK(std::fabs(s.v - n.v / r2) < 1e-12);
  }
}

TEST_CASE("geodesic distance agrees with chart arc length") {
  std::uint64_t state = 5;
  for (int t = 0; t < 25; ++t) {
    SpherePoint p = random_point(state), q = random_point(state);
    if (p.v.z > 0.5 || q.v.z > 0.5) continue;  // stay well inside the north chart
    double d = geodesic_distance(p, q);
    if (d < 0.05) continue;
    double arc = chart_arc_length(p, q, Chart::north);
    CHECK(std::fabs(arc - d) < 1e-9 * std::max(1.0, d) + 1e-9);
  }
}

TEST_CASE("fibonacci sphere is unit and well spread") {
  auto pts = fibonacci_sphere(500);
  REQUIRE(pts.size() == 500);
  for (const auto& p : pts) CHECK(std::fabs(dot(p.v, p.v) - 1) < 1e-12);
  double mind = 10;
  for (int i = 0; i < 100; ++i)
    for (int j = i + 1; j < 100; ++j) mind = std::min(mind, geodesic_distance(pts[i], pts[j]));
  CHECK(mind > 1e-3);
}
