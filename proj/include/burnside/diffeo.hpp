#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "burnside/primitives.hpp"

namespace burnside {

inline constexpr int kNormBasePoints = 200;    // base-point samples for norm suprema
inline constexpr int kNormRefineCandidates = 5;
inline constexpr int kNormRefineIters = 30;    // golden-section steps per axis pass
inline constexpr int kC0Samples = 2000;        // standard sample set size

/// One letter of a word: an index into a primitive table plus an exponent.
struct Letter {
  std::uint32_t prim;
  std::int8_t exp;  // +1 or -1
};

inline bool operator==(const Letter& a, const Letter& b) { return a.prim == b.prim && a.exp == b.exp; }

using PrimitiveTable = std::vector<Primitive>;

/// A diffeomorphism written as a word over a shared primitive table.
/// letters[0] acts first; the list is never algebraically simplified.
struct Word {
  std::shared_ptr<const PrimitiveTable> table;
  std::vector<Letter> letters;

  static Word identity(std::shared_ptr<const PrimitiveTable> tbl) { return {std::move(tbl), {}}; }

  std::size_t length() const { return letters.size(); }
};

/// The word that applies f first and then g, i.e. the group element g*f
/// acting by x -> g(f(x)). Letter lists concatenate.
inline Word compose(const Word& f, const Word& g) {
  Word r{f.table, f.letters};
  r.letters.insert(r.letters.end(), g.letters.begin(), g.letters.end());
  return r;
}

inline Word inverse(const Word& f) {
  Word r{f.table, {}};
  r.letters.reserve(f.letters.size());
  for (auto it = f.letters.rbegin(); it != f.letters.rend(); ++it)
    r.letters.push_back({it->prim, static_cast<std::int8_t>(-it->exp)});
  return r;
}

inline Word power(const Word& f, int k) {
  if (k < 0) return power(inverse(f), -k);
  Word r = Word::identity(f.table);
  for (int i = 0; i < k; ++i) r.letters.insert(r.letters.end(), f.letters.begin(), f.letters.end());
  return r;
}

inline SpherePoint apply_letter(const PrimitiveTable& table, const Letter& l, const SpherePoint& p) {
  return SpherePoint::project(apply_primitive((table)[l.prim], p.v, l.exp));
}

inline SpherePoint evaluate(const Word& f, const SpherePoint& p) {
  SpherePoint q = p;
  for (const Letter& l : f.letters) q = apply_letter(*f.table, l, q);
  return q;
}

/// 2x2 real matrix in tangent frames.
struct Mat2 {
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;

  static Mat2 identity() { return {1, 0, 0, 1}; }
  double det() const { return m00 * m11 - m01 * m10; }
  double trace() const { return m00 + m11; }
};

inline Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
          a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

inline void mat2_apply(const Mat2& a, double& u, double& v) {
  double u2 = a.m00 * u + a.m01 * v;
  double v2 = a.m10 * u + a.m11 * v;
  u = u2; v = v2;
}

/// Singular values of a 2x2 matrix, largest first (exact closed form).
inline std::pair<double, double> singular_values(const Mat2& a) {
  double e = 0.5 * (a.m00 + a.m11), f = 0.5 * (a.m00 - a.m11);
  double g = 0.5 * (a.m10 + a.m01), h = 0.5 * (a.m10 - a.m01);
  double q = std::hypot(e, h), r = std::hypot(f, g);
  return {q + r, std::fabs(q - r)};
}

/// Eigenvalues of a 2x2 matrix as a complex pair.
inline std::pair<std::complex<double>, std::complex<double>> eigenvalues(const Mat2& a) {
  double tr = a.trace(), de = a.det();
  double disc = tr * tr - 4 * de;
  if (disc >= 0) {
    double s = std::sqrt(disc);
    return {std::complex<double>((tr + s) / 2, 0), std::complex<double>((tr - s) / 2, 0)};
  }
  double s = std::sqrt(-disc);
  return {std::complex<double>(tr / 2, s / 2), std::complex<double>(tr / 2, -s / 2)};
}

/// Frame-to-frame differential of one letter at p, together with the image
/// point. The image is renormalized and the target frame is taken there, so
/// chained letter Jacobians compose exactly along an orbit.
struct LetterStep {
  SpherePoint image;
  Mat2 jac;
};

inline LetterStep letter_jacobian(const PrimitiveTable& table, const Letter& l, const SpherePoint& p) {
  Frame fp = frame_at(p);
  V3<Dual2> pd{Dual2(p.v.x), Dual2(p.v.y), Dual2(p.v.z)};
  pd.x.dx = fp.e1.x; pd.y.dx = fp.e1.y; pd.z.dx = fp.e1.z;
  pd.x.dy = fp.e2.x; pd.y.dy = fp.e2.y; pd.z.dy = fp.e2.z;
  V3<Dual2> qd = apply_primitive(table[l.prim], pd, l.exp);
  SpherePoint q = SpherePoint::project({qd.x.v, qd.y.v, qd.z.v});
  Frame fq = frame_at(q);
  Vec3 du{qd.x.dx, qd.y.dx, qd.z.dx};
  Vec3 dv{qd.x.dy, qd.y.dy, qd.z.dy};
  Mat2 j{dot(fq.e1, du), dot(fq.e1, dv), dot(fq.e2, du), dot(fq.e2, dv)};
  return {q, j};
}

/// Chain-rule Jacobian of the whole word, as a map from frame_at(p) to
/// frame_at(evaluate(f,p)).
inline Mat2 jacobian(const Word& f, const SpherePoint& p) {
  Mat2 j = Mat2::identity();
  SpherePoint x = p;
  for (const Letter& l : f.letters) {
    LetterStep st = letter_jacobian(*f.table, l, x);
    j = st.jac * j;
    x = st.image;
  }
  return j;
}

namespace detail {

inline const std::vector<SpherePoint>& norm_sample_points() {
  static const std::vector<SpherePoint> pts = fibonacci_sphere(kNormBasePoints);
  return pts;
}

inline const std::vector<SpherePoint>& standard_sample_points() {
  static const std::vector<SpherePoint> pts = fibonacci_sphere(kC0Samples);
  return pts;
}

/// Two-stage supremum of a smooth scalar field over the sphere: evaluate on
/// the norm sample set, then refine the best candidates by coordinate-wise
/// golden-section ascent in the chart containing each candidate.
template <class F>
double supremum_over_sphere(F&& field) {
  const auto& pts = norm_sample_points();
  std::vector<std::pair<double, int>> scored(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) scored[i] = {field(pts[i]), static_cast<int>(i)};
  std::partial_sort(scored.begin(), scored.begin() + kNormRefineCandidates, scored.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = scored[0].first;
  for (int c = 0; c < kNormRefineCandidates; ++c) {
    const SpherePoint& start = pts[scored[c].second];
    Chart chart = chart_of(start);
    double u, v;
    chart_project<double>(start.v, chart, u, v);
    double h = 0.35;
    auto eval_chart = [&](double uu, double vv) {
      return field(stereographic_lift({chart, uu, vv}));
    };
    for (int round = 0; round < 3; ++round) {
      u = golden_max([&](double t) { return eval_chart(t, v); }, u - h, u + h, kNormRefineIters);
      v = golden_max([&](double t) { return eval_chart(u, t); }, v - h, v + h, kNormRefineIters);
      h *= 0.15;
    }
    best = std::max(best, eval_chart(u, v));
  }
  return best;
}

}  // namespace detail

/// sup over the sphere of the first singular value of D f (one-sided norm).
inline double operator_norm_plus(const Word& f) {
  return detail::supremum_over_sphere([&](const SpherePoint& p) {
    return singular_values(jacobian(f, p)).first;
  });
}

/// ||D(f)|| = max(||D(f)||+, ||D(f^-1)||+), the maximum expansion or
/// contraction of f. Always >= 1 for sphere diffeomorphisms.
inline double operator_norm_D(const Word& f) {
  return std::max(operator_norm_plus(f), operator_norm_plus(inverse(f)));
}

/// Max displacement over the standard sample set; realizes the C0 topology.
inline double c0_distance(const Word& f, const Word& g) {
  double best = 0;
  for (const SpherePoint& p : detail::standard_sample_points())
    best = std::max(best, geodesic_distance(evaluate(f, p), evaluate(g, p)));
  return best;
}

namespace detail {

/// Chart representation of f around p: components of
/// chart_out(f(lift_in(u,v))) as Dual2 scalars seeded at p's chart coords.
inline std::pair<Dual2, Dual2> chart_rep(const Word& f, const SpherePoint& p) {
  Chart cin = chart_of(p);
  double u0, v0;
  chart_project<double>(p.v, cin, u0, v0);
  V3<Dual2> x = chart_lift<Dual2>(Dual2::seed(u0, 0), Dual2::seed(v0, 1), cin);
  for (const Letter& l : f.letters) x = apply_primitive((*f.table)[l.prim], x, l.exp);
  Chart cout = x.z.v <= kChartSwitchZ ? Chart::north : Chart::south;
  Dual2 uu, vv;
  chart_project<Dual2>(x, cout, uu, vv);
  return {uu, vv};
}

inline double hessian_sup_entry(const Word& f, const SpherePoint& p) {
  auto [uu, vv] = chart_rep(f, p);
  double m = 0;
  for (double h : {uu.hxx, uu.hxy, uu.hyy, vv.hxx, vv.hxy, vv.hyy}) m = std::max(m, std::fabs(h));
  return m;
}

}  // namespace detail

/// C^r norm for r in {1,2}. r=1 is max(1, ||D(f)||); r=2 additionally takes
/// the supremum of the second-derivative tensor in charts, for f and f^-1.
inline double cr_norm(const Word& f, int r) {
  if (r != 1 && r != 2) throw std::invalid_argument("cr_norm: only orders r = 1 and r = 2 are supported");
  double c1 = std::max(1.0, operator_norm_D(f));
  if (r == 1) return c1;
  Word fi = inverse(f);
  double h = detail::supremum_over_sphere([&](const SpherePoint& p) { return detail::hessian_sup_entry(f, p); });
  double hi = detail::supremum_over_sphere([&](const SpherePoint& p) { return detail::hessian_sup_entry(fi, p); });
  return std::max({c1, h, hi});
}

/// Frame Jacobian of f at p expressed through the chart representation;
/// used by the Newton fixed-point solver.
inline Mat2 chart_displacement_jacobian(const Word& f, const SpherePoint& p, Chart chart) {
  double u0, v0;
  chart_project<double>(p.v, chart, u0, v0);
  V3<Dual2> x = chart_lift<Dual2>(Dual2::seed(u0, 0), Dual2::seed(v0, 1), chart);
  for (const Letter& l : f.letters) x = apply_primitive((*f.table)[l.prim], x, l.exp);
  Dual2 uu, vv;
  chart_project<Dual2>(x, chart, uu, vv);
  return {uu.dx, uu.dy, vv.dx, vv.dy};
}

}  // namespace burnside
