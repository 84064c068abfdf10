#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "burnside/pesin.hpp"

namespace burnside {

inline constexpr double kTripleSeparation = 0.1;       // minimal pairwise triple distance
inline constexpr double kTripleVolumeConstant = 2 * M_PI;  // packing constant for (S^2)^3, sup metric
inline constexpr double kNewtonResidual = 1e-10;
inline constexpr int kNewtonMaxIters = 50;
inline constexpr double kOrderTol = 1e-8;
inline constexpr double kDegenerateTol = 1e-8;

/// Three pairwise separated base points; the arena for pigeonhole recurrence.
struct TripleConfig {
  std::array<SpherePoint, 3> x;

  TripleConfig(const SpherePoint& a, const SpherePoint& b, const SpherePoint& c) : x{a, b, c} {
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (geodesic_distance(x[i], x[j]) < kTripleSeparation)
          throw std::invalid_argument("TripleConfig: points must be pairwise >= 0.1 apart");
  }

  static TripleConfig standard() {
    return TripleConfig(SpherePoint(1, 0, 0), SpherePoint(0, 1, 0), SpherePoint(0, 0, 1));
  }
};

using Triple = std::array<SpherePoint, 3>;

/// Sup product metric on (S^2)^3; the packing constant kTripleVolumeConstant
/// refers to this metric.
inline double product_distance(const Triple& a, const Triple& b) {
  double d = 0;
  for (int i = 0; i < 3; ++i) d = std::max(d, geodesic_distance(a[i], b[i]));
  return d;
}

/// Two distinct ball elements whose triple images nearly coincide, and the
/// recurrence element f = h^-1 g they produce.
struct RecurrencePair {
  std::size_t g_index = 0, h_index = 0;
  Word g, h, f;                      // f applies g first, then h^-1
  double triple_distance = 0;        // product-metric distance of the two triple images
  double pigeonhole_bound = 0;       // c * |B|^(-1/6)
  std::array<double, 3> displacement{};  // d(f(x_i), x_i)
  bool degenerate = false;           // all elements act identically on the triple
};

namespace detail {

inline std::vector<Triple> triple_images(const WordBall& ball, const TripleConfig& triple) {
  std::vector<Triple> out;
  out.reserve(ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) {
    Word w = ball.word(i);
    out.push_back({evaluate(w, triple.x[0]), evaluate(w, triple.x[1]), evaluate(w, triple.x[2])});
  }
  return out;
}

/// Candidate pair comparison: distance first, then lexicographic (i, j).
struct BestPair {
  double dist = std::numeric_limits<double>::infinity();
  std::size_t i = 0, j = 0;

  void offer(double d, std::size_t a, std::size_t b) {
    if (d < dist || (d == dist && (a < i || (a == i && b < j)))) {
      dist = d; i = a; j = b;
    }
  }
};

inline RecurrencePair finish_pair(const WordBall& ball, const TripleConfig& triple,
                                  const std::vector<Triple>& images, const BestPair& best) {
  RecurrencePair rp;
  rp.g_index = best.j;  // the later element is g, the earlier h, so f = h^-1 g
  rp.h_index = best.i;
  rp.g = ball.word(best.j);
  rp.h = ball.word(best.i);
  rp.f = compose(rp.g, inverse(rp.h));
  rp.triple_distance = best.dist;
  rp.pigeonhole_bound = kTripleVolumeConstant * std::pow(static_cast<double>(ball.size()), -1.0 / 6.0);
  for (int i = 0; i < 3; ++i)
    rp.displacement[i] = geodesic_distance(evaluate(rp.f, triple.x[i]), triple.x[i]);

  // degenerate iff every element lands the whole triple in the same spot:
  // per-slot bounding boxes of the images must all collapse
  double spread = 0;
  for (int c = 0; c < 3; ++c) {
    double lo[3] = {1e9, 1e9, 1e9}, hi[3] = {-1e9, -1e9, -1e9};
    for (const Triple& t : images) {
      lo[0] = std::min(lo[0], t[c].v.x); hi[0] = std::max(hi[0], t[c].v.x);
      lo[1] = std::min(lo[1], t[c].v.y); hi[1] = std::max(hi[1], t[c].v.y);
      lo[2] = std::min(lo[2], t[c].v.z); hi[2] = std::max(hi[2], t[c].v.z);
    }
    spread = std::max({spread, hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  }
  rp.degenerate = spread < kDegenerateTol;
  return rp;
}

}  // namespace detail

/// Exhaustive nearest-pair scan; the oracle the grid search must match.
inline RecurrencePair pigeonhole_pair_brute(const WordBall& ball, const TripleConfig& triple) {
  if (ball.size() < 2) throw std::invalid_argument("pigeonhole_pair: ball needs >= 2 elements");
  auto images = detail::triple_images(ball, triple);
  detail::BestPair best;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i + 1; j < images.size(); ++j)
      best.offer(product_distance(images[i], images[j]), i, j);
  return detail::finish_pair(ball, triple, images, best);
}

/// Nearest pair of triple images under the sup product metric, via a spatial
/// hash on the first image coordinate with cell size equal to the pigeonhole
/// bound (which the minimum is guaranteed not to exceed). Ties broken by
/// lexicographic word order, i.e. by element index.
inline RecurrencePair pigeonhole_pair(const WordBall& ball, const TripleConfig& triple) {
  if (ball.size() < 2) throw std::invalid_argument("pigeonhole_pair: ball needs >= 2 elements");
  auto images = detail::triple_images(ball, triple);
  double cell = kTripleVolumeConstant * std::pow(static_cast<double>(ball.size()), -1.0 / 6.0);

  auto key_of = [&](const SpherePoint& p) {
    auto q = [&](double x) { return static_cast<std::int64_t>(std::floor(x / cell)); };
    return std::array<std::int64_t, 3>{q(p.v.x), q(p.v.y), q(p.v.z)};
  };
  auto hash_of = [](const std::array<std::int64_t, 3>& k) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int64_t v : k) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 0x100000001b3ULL;
    }
    return h;
  };

  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
  for (std::size_t i = 0; i < images.size(); ++i)
    grid[hash_of(key_of(images[i][0]))].push_back(static_cast<std::uint32_t>(i));

  detail::BestPair best;
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto k = key_of(images[i][0]);
    for (int ox = -1; ox <= 1; ++ox)
      for (int oy = -1; oy <= 1; ++oy)
        for (int oz = -1; oz <= 1; ++oz) {
          auto it = grid.find(hash_of({k[0] + ox, k[1] + oy, k[2] + oz}));
          if (it == grid.end()) continue;
          for (std::uint32_t j : it->second)
            if (j > i) best.offer(product_distance(images[i], images[j]), i, j);
        }
  }
  return detail::finish_pair(ball, triple, images, best);
}

/// Orbit hull of the geodesic segment from x to f(x) under f^j, j <= k.
struct OrbitHull {
  Word word;
  SpherePoint base;
  int order = 0;
  double diameter = 0;
  double bound = 0;   // displacement * (k+1) * ||D(f)||^(k+1)
  double ratio = 0;   // diameter / bound
};

struct FixedPointSearch {
  enum class Status { converged, not_found } status = Status::not_found;
  std::optional<FixedPointRecord> record;
  double best_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool used_fallback = false;
};

/// Damped Newton iteration in the chart on x -> chart(f(x)) - chart(x),
/// with a pattern-search fallback when the Newton matrix is singular
/// (parabolic displacement). Converged means residual < 1e-10 within 50
/// iterations and a final point within 2 * search_radius of the seed.
inline FixedPointSearch find_fixed_point(const Word& f, const SpherePoint& seed,
                                         double search_radius) {
  FixedPointSearch out;
  double d0 = geodesic_distance(evaluate(f, seed), seed);
  out.best_residual = d0;
  if (d0 >= search_radius) return out;  // nothing recurrent this close

  Chart chart = chart_of(seed);
  double u, v;
  chart_project<double>(seed.v, chart, u, v);
  auto residual_at = [&](double uu, double vv) {
    SpherePoint p = stereographic_lift({chart, uu, vv});
    return geodesic_distance(evaluate(f, p), p);
  };
  double res = d0;

  for (out.iterations = 0; out.iterations < kNewtonMaxIters; ++out.iterations) {
    SpherePoint p = stereographic_lift({chart, u, v});
    res = geodesic_distance(evaluate(f, p), p);
    out.best_residual = std::min(out.best_residual, res);
    if (res < kNewtonResidual) {
      if (geodesic_distance(p, seed) > 2 * search_radius) return out;  // wandered away
      out.status = FixedPointSearch::Status::converged;
      FixedPointRecord rec = classify_periodic_point(f, p);
      rec.residual = res;
      out.record = rec;
      return out;
    }

    double gu, gv;
    try {
      SpherePoint q = evaluate(f, p);
      double qu, qv;
      chart_project<double>(q.v, chart, qu, qv);
      gu = qu - u; gv = qv - v;
    } catch (const ChartDomainError&) {
      break;  // image left the chart: pattern search below
    }
    Mat2 jg = chart_displacement_jacobian(f, p, chart);
    jg.m00 -= 1; jg.m11 -= 1;
    double det = jg.det();
    double scale = std::max({std::fabs(jg.m00), std::fabs(jg.m01), std::fabs(jg.m10),
                             std::fabs(jg.m11), 1e-30});
    if (std::fabs(det) < 1e-13 * scale * scale) break;  // singular: pattern search below

    double su = -(jg.m11 * gu - jg.m01 * gv) / det;
    double sv = -(-jg.m10 * gu + jg.m00 * gv) / det;
    double lambda = 1.0;
    bool improved = false;
    for (int halvings = 0; halvings < 10; ++halvings) {
      if (residual_at(u + lambda * su, v + lambda * sv) < res) {
        u += lambda * su; v += lambda * sv;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;  // stuck: pattern search below
  }

  // Pattern-search fallback on the residual itself, with a hard budget.
  out.used_fallback = true;
  double h = std::max(search_radius / 4, 1e-6);
  res = residual_at(u, v);
  int evals = 0;
  while (h > 1e-13 && res >= kNewtonResidual && evals < 4000) {
    bool moved = false;
    const double du[4] = {h, -h, 0, 0};
    const double dv[4] = {0, 0, h, -h};
    for (int k = 0; k < 4; ++k) {
      double r2 = residual_at(u + du[k], v + dv[k]);
      ++evals;
      if (r2 < res) {
        u += du[k]; v += dv[k];
        res = r2;
        moved = true;
        break;
      }
    }
    if (!moved) h *= 0.5;
  }
  out.best_residual = std::min(out.best_residual, res);
  if (res < kNewtonResidual) {
    SpherePoint p = stereographic_lift({chart, u, v});
    if (geodesic_distance(p, seed) <= 2 * search_radius) {
      out.status = FixedPointSearch::Status::converged;
      FixedPointRecord rec = classify_periodic_point(f, p);
      rec.residual = res;
      out.record = rec;
    }
  }
  return out;
}

/// Smallest k <= k_max with c0_distance(f^k, Id) < 1e-8, or nullopt
/// (infinite order at this resolution).
inline std::optional<int> element_order(const Word& f, int k_max) {
  if (k_max < 1) throw std::invalid_argument("element_order: needs k_max >= 1");
  const auto& pts = detail::standard_sample_points();
  std::vector<SpherePoint> ys(pts.begin(), pts.end());
  for (int k = 1; k <= k_max; ++k) {
    double worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ys[i] = evaluate(f, ys[i]);
      worst = std::max(worst, geodesic_distance(ys[i], pts[i]));
    }
    if (worst < kOrderTol) return k;
  }
  return std::nullopt;
}

/// Diameter of K = union of f^j(s), j <= k, where s is the geodesic segment
/// from x to f(x), sampled at 64 points per segment.
inline OrbitHull orbit_hull_diameter(const Word& f, const SpherePoint& x, int k) {
  if (k < 1) throw std::invalid_argument("orbit_hull_diameter: needs k >= 1");
  constexpr int kSegmentSamples = 64;
  SpherePoint fx = evaluate(f, x);
  std::vector<SpherePoint> pts;
  pts.reserve(static_cast<std::size_t>(kSegmentSamples) * (k + 1));
  for (int i = 0; i < kSegmentSamples; ++i)
    pts.push_back(geodesic_point(x, fx, static_cast<double>(i) / (kSegmentSamples - 1)));
  std::size_t seg = pts.size();
  for (int j = 1; j <= k; ++j)
    for (std::size_t i = 0; i < seg; ++i)
      pts.push_back(evaluate(f, pts[pts.size() - seg]));

  OrbitHull hull{f, x, k, 0, 0, 0};
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      hull.diameter = std::max(hull.diameter, geodesic_distance(pts[i], pts[j]));
  double displacement = geodesic_distance(fx, x);
  double nd = operator_norm_D(f);
  hull.bound = displacement * (k + 1) * std::pow(std::max(1.0, nd), k + 1);
  hull.ratio = hull.bound > 0 ? hull.diameter / hull.bound : 0;
  return hull;
}

/// One row of the conjugated-rotation convergence experiment.
struct ConjugacyRow {
  double strength;
  double dilatation;       // K_t against the round metric
  double c0_to_rotation;   // c0 distance of s_t to R
  double c0_to_identity;
  std::optional<int> order;
};

/// For each twist strength t, builds s_t = g_t^-1 R g_t with g_t a twist
/// about an axis transverse to R's, and reports dilatation, C0 distances and
/// order. As t decreases the conjugates converge to R: K_t -> 1 and
/// c0(s_t, R) -> 0 while the order stays that of R.
inline std::vector<ConjugacyRow> conjugated_rotation_family(const Rotation& r,
                                                            const std::vector<double>& strengths,
                                                            int k_max = 64) {
  if (strengths.empty()) throw std::invalid_argument("conjugated_rotation_family: empty strength list");
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (strengths[i] <= 0)
      throw std::invalid_argument("conjugated_rotation_family: strengths must be positive");
    if (i && strengths[i] >= strengths[i - 1])
      throw std::invalid_argument("conjugated_rotation_family: strengths must descend");
  }
  // twist axis: the coordinate axis most transverse to the rotation axis
  Vec3 candidates[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  Vec3 taxis = candidates[0];
  double bestdot = std::fabs(dot(r.axis, candidates[0]));
  for (int i = 1; i < 3; ++i) {
    double d = std::fabs(dot(r.axis, candidates[i]));
    if (d < bestdot) { bestdot = d; taxis = candidates[i]; }
  }

  std::vector<ConjugacyRow> rows;
  for (double t : strengths) {
    auto table = std::make_shared<PrimitiveTable>();
    table->push_back(Rotation(r.axis, r.angle));
    table->push_back(Twist(taxis, t));
    Word rot{table, {{0, +1}}};
    Word ident = Word::identity(table);
    Word st{table, {{1, +1}, {0, +1}, {1, -1}}};  // g then R then g^-1
    ConjugacyRow row;
    row.strength = t;
    row.dilatation = qc_dilatation_round(st);
    row.c0_to_rotation = c0_distance(st, rot);
    row.c0_to_identity = c0_distance(st, ident);
    row.order = element_order(st, k_max);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace burnside
