#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "burnside/cocycle.hpp"

namespace burnside {

inline constexpr int kMetricSamples = 2000;        // standard metric sample count
inline constexpr double kLipschitzExactTol = 1e-9;  // allowed violation of the re-indexing identities
inline constexpr int kLipschitzDirections = 16;

struct DensityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Symmetric 2x2 bilinear form in a tangent frame.
struct SymMat2 {
  double a00 = 0, a01 = 0, a11 = 0;

  static SymMat2 round() { return {1, 0, 1}; }

  double quad(double u, double v) const { return a00 * u * u + 2 * a01 * u * v + a11 * v * v; }
  double det() const { return a00 * a11 - a01 * a01; }

  double min_eigenvalue() const {
    double t = 0.5 * (a00 + a11);
    double d = std::sqrt(std::max(0.0, 0.25 * (a00 - a11) * (a00 - a11) + a01 * a01));
    return t - d;
  }
  double spectral_norm() const {
    double t = 0.5 * (a00 + a11);
    double d = std::sqrt(std::max(0.0, 0.25 * (a00 - a11) * (a00 - a11) + a01 * a01));
    return std::max(std::fabs(t - d), std::fabs(t + d));
  }

  SymMat2& operator+=(const SymMat2& o) {
    a00 += o.a00; a01 += o.a01; a11 += o.a11;
    return *this;
  }
};

inline SymMat2 operator-(const SymMat2& a, const SymMat2& b) {
  return {a.a00 - b.a00, a.a01 - b.a01, a.a11 - b.a11};
}

inline SymMat2 scaled(const SymMat2& a, double s) { return {a.a00 * s, a.a01 * s, a.a11 * s}; }

/// Pullback of a form through a 2x2 frame Jacobian: J^T M J.
inline SymMat2 pullback(const SymMat2& m, const Mat2& j) {
  double b00 = m.a00 * j.m00 + m.a01 * j.m10;
  double b01 = m.a00 * j.m01 + m.a01 * j.m11;
  double b10 = m.a01 * j.m00 + m.a11 * j.m10;
  double b11 = m.a01 * j.m01 + m.a11 * j.m11;
  return {j.m00 * b00 + j.m10 * b10, j.m00 * b01 + j.m10 * b11, j.m01 * b01 + j.m11 * b11};
}

struct SampleSet {
  std::vector<SpherePoint> points;
  std::vector<Frame> frames;

  explicit SampleSet(std::vector<SpherePoint> pts) : points(std::move(pts)) {
    frames.reserve(points.size());
    for (const SpherePoint& p : points) frames.push_back(frame_at(p));
  }

  static std::shared_ptr<const SampleSet> standard(int n = kMetricSamples) {
    return std::make_shared<SampleSet>(fibonacci_sphere(n));
  }

  double mean_spacing() const { return std::sqrt(4 * M_PI / points.size()); }
};

/// Per-word-length partial sums of J_g^T J_g over the ball, evaluated at a
/// fixed point set. The epsilon weights are applied afterwards, so one pass
/// serves every epsilon, every truncation radius, and the tail increments.
/// Accumulation order is the ball enumeration order.
struct ShellSums {
  std::shared_ptr<const SampleSet> samples;
  std::vector<std::vector<SymMat2>> shells;  // [length k][sample index]

  ShellSums(const WordBall& ball, std::shared_ptr<const SampleSet> pts, int n_max, int threads = 1)
      : samples(std::move(pts)) {
    if (ball.truncated())
      throw ResourceCapError("metric sums need the full ball, but enumeration was truncated; raise the cap");
    if (ball.radius() < n_max)
      throw std::invalid_argument("ShellSums: ball radius is smaller than requested N");
    const std::size_t np = samples->points.size();
    shells.assign(n_max + 1, std::vector<SymMat2>(np));
    const PrimitiveTable& table = *ball.generators().table;

    std::vector<std::vector<Letter>> words;  // materialized once, reused per sample
    std::vector<int> lens;
    for (std::size_t e = 0; e < ball.size(); ++e) {
      if (ball.length_of(e) > n_max) break;  // elements are stored by ascending length
      words.push_back(ball.word(e).letters);
      lens.push_back(ball.length_of(e));
    }

    parallel_for(np, threads, [&](std::size_t i) {
      const SpherePoint& x = samples->points[i];
      for (std::size_t e = 0; e < words.size(); ++e) {
        Mat2 j = Mat2::identity();
        SpherePoint q = x;
        for (const Letter& l : words[e]) {
          LetterStep st = letter_jacobian(table, l, q);
          j = st.jac * j;
          q = st.image;
        }
        shells[lens[e]][i] += pullback(SymMat2::round(), j);
      }
    });
  }

  /// m^eps_N at every sample; weight_sign = -1 is the real construction.
  std::vector<SymMat2> combine(double epsilon, int n, double weight_sign = -1.0) const {
    std::vector<SymMat2> out(samples->points.size());
    for (int k = 0; k <= n; ++k) {
      double w = std::exp(weight_sign * epsilon * k);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += scaled(shells[k][i], w);
    }
    return out;
  }
};

/// The truncated averaged metric m^eps_N sampled as SPD forms in the frame
/// of each sample point. With the identity generator set this is exactly the
/// round metric.
struct MetricField {
  double epsilon = 0;
  int truncation = 0;
  std::shared_ptr<const SampleSet> samples;
  std::vector<SymMat2> m;
  std::string provenance;

  double min_spd_eigenvalue() const {
    double worst = std::numeric_limits<double>::infinity();
    for (const SymMat2& s : m) worst = std::min(worst, s.min_eigenvalue());
    return worst;
  }

  static MetricField round(std::shared_ptr<const SampleSet> pts) {
    MetricField f;
    f.samples = std::move(pts);
    f.m.assign(f.samples->points.size(), SymMat2::round());
    f.provenance = "round";
    return f;
  }
};

/// m^eps_N = sum_{g in B_N} e^{-eps|g|} g*m over the ball, with the round
/// metric as the seed. Refuses truncated balls.
inline MetricField build_averaged_metric(const GeneratorSet& set, double epsilon, int n,
                                         std::shared_ptr<const SampleSet> pts = nullptr,
                                         int threads = 1) {
  if (epsilon <= 0) throw std::invalid_argument("build_averaged_metric: epsilon must be positive");
  if (!pts) pts = SampleSet::standard();
  WordBall ball = enumerate_ball(set, n);
  ShellSums sums(ball, pts, n, threads);
  MetricField f;
  f.epsilon = epsilon;
  f.truncation = n;
  f.samples = pts;
  f.m = sums.combine(epsilon, n);
  f.provenance = "averaged";
  return f;
}

struct TailReport {
  std::vector<double> increments;  // sup_x ||m_N - m_{N-1}|| for N = 1..N_max
  double fitted_slope = 0;         // log-slope over the top half of nonzero increments
  bool all_vanished = false;       // finite group: increments identically zero beyond the diameter
};

/// Cauchy-tail diagnostic of the metric series.
inline TailReport tail_report(const GeneratorSet& set, double epsilon, int n_max,
                              std::shared_ptr<const SampleSet> pts = nullptr, int threads = 1) {
  if (epsilon <= 0) throw std::invalid_argument("tail_report: epsilon must be positive");
  if (!pts) pts = SampleSet::standard();
  WordBall ball = enumerate_ball(set, n_max);
  ShellSums sums(ball, pts, n_max, threads);
  TailReport rep;
  for (int k = 1; k <= n_max; ++k) {
    double w = std::exp(-epsilon * k);
    double sup = 0;
    for (const SymMat2& s : sums.shells[k]) sup = std::max(sup, scaled(s, w).spectral_norm());
    rep.increments.push_back(sup);
  }
  std::vector<double> xs, ys;
  for (int k = std::max(1, n_max / 2); k <= n_max; ++k) {
    double inc = rep.increments[k - 1];
    if (inc > 1e-300) {
      xs.push_back(k);
      ys.push_back(std::log(inc));
    }
  }
  if (xs.size() >= 2)
    rep.fitted_slope = ls_slope(xs, ys);
  else
    rep.all_vanished = true;
  return rep;
}

struct LipschitzReport {
  double max_upper_violation = 0;  // relative excess of s*m_N over e^{+eps} m_{N+1}
  double max_lower_violation = 0;  // relative shortfall of s*m_N under e^{-eps} m_{N-1}
  double tau = 0;                  // sup relative increment (m_{N+1} - m_N)/m_N
  double tau_bound = 0;            // e^{-eps N / 3}, the series' tail rate
  double ratio_min = 0, ratio_max = 0;  // observed s*m_N / m_N envelope
  bool exact_ok = false;
  bool cauchy_ok = false;
  bool passed = false;
};

/// Precomputed shell sums for the Lipschitz check on a fixed truncation N:
/// the base field shells to N+1 and, per generator letter, the shells on the
/// translated sample set s(x). Building these is the expensive part; the
/// per-epsilon check is then a cheap weighted recombination.
class LipschitzEngine {
 public:
  LipschitzEngine(const GeneratorSet& set, int n, std::shared_ptr<const SampleSet> pts = nullptr,
                  int threads = 1)
      : set_(set), n_(n), pts_(pts ? std::move(pts) : SampleSet::standard()) {
    if (!set.symmetric)
      throw std::invalid_argument("lipschitz_check: generating set must be symmetric");
    if (n < 1) throw std::invalid_argument("lipschitz_check: needs N >= 1");
    WordBall ball = enumerate_ball(set, n + 1);
    base_ = std::make_shared<ShellSums>(ball, pts_, n + 1, threads);
    const PrimitiveTable& table = *set.table;
    for (const Letter& s : set.letters()) {
      std::vector<SpherePoint> moved;
      moved.reserve(pts_->points.size());
      std::vector<Mat2> js;
      for (const SpherePoint& x : pts_->points) {
        LetterStep st = letter_jacobian(table, s, x);
        moved.push_back(st.image);
        js.push_back(st.jac);
      }
      letter_jacs_.push_back(std::move(js));
      translated_.push_back(
          std::make_shared<ShellSums>(ball, std::make_shared<SampleSet>(std::move(moved)), n, threads));
    }
  }

  const ShellSums& base() const { return *base_; }
  int truncation() const { return n_; }

  LipschitzReport check(double epsilon, double weight_sign = -1.0) const {
    if (epsilon <= 0) throw std::invalid_argument("lipschitz_check: epsilon must be positive");
    auto m_n = base_->combine(epsilon, n_, weight_sign);
    auto m_np1 = base_->combine(epsilon, n_ + 1, weight_sign);
    auto m_nm1 = base_->combine(epsilon, n_ - 1, weight_sign);

    LipschitzReport rep;
    rep.tau_bound = std::exp(-epsilon * n_ / 3.0);
    rep.ratio_min = std::numeric_limits<double>::infinity();
    double eup = std::exp(epsilon), edn = std::exp(-epsilon);

    for (std::size_t li = 0; li < translated_.size(); ++li) {
      auto m_at_sx = translated_[li]->combine(epsilon, n_, weight_sign);
      for (std::size_t i = 0; i < pts_->points.size(); ++i) {
        SymMat2 pulled = pullback(m_at_sx[i], letter_jacs_[li][i]);
        for (int d = 0; d < kLipschitzDirections; ++d) {
          double t = M_PI * d / kLipschitzDirections;
          double u = std::cos(t), v = std::sin(t);
          double sp = pulled.quad(u, v);
          double up = eup * m_np1[i].quad(u, v);
          double lo = edn * m_nm1[i].quad(u, v);
          double mn = m_n[i].quad(u, v);
          rep.max_upper_violation = std::max(rep.max_upper_violation, (sp - up) / up);
          rep.max_lower_violation = std::max(rep.max_lower_violation, (lo - sp) / lo);
          rep.ratio_min = std::min(rep.ratio_min, sp / mn);
          rep.ratio_max = std::max(rep.ratio_max, sp / mn);
        }
      }
    }

    for (std::size_t i = 0; i < pts_->points.size(); ++i) {
      for (int d = 0; d < kLipschitzDirections; ++d) {
        double t = M_PI * d / kLipschitzDirections;
        double u = std::cos(t), v = std::sin(t);
        double mn = m_n[i].quad(u, v);
        rep.tau = std::max(rep.tau, (m_np1[i].quad(u, v) - mn) / mn);
      }
    }

    rep.exact_ok = rep.max_upper_violation <= kLipschitzExactTol &&
                   rep.max_lower_violation <= kLipschitzExactTol;
    rep.cauchy_ok = rep.tau <= rep.tau_bound;
    rep.passed = rep.exact_ok && rep.cauchy_ok;
    return rep;
  }

 private:
  GeneratorSet set_;
  int n_;
  std::shared_ptr<const SampleSet> pts_;
  std::shared_ptr<ShellSums> base_;
  std::vector<std::vector<Mat2>> letter_jacs_;
  std::vector<std::shared_ptr<ShellSums>> translated_;
};

/// Finite-sum Lipschitz inequalities for every generator letter s:
///   (s*m^eps_N)(v,v) <= e^{+eps} m^eps_{N+1}(v,v)
///   (s*m^eps_N)(v,v) >= e^{-eps} m^eps_{N-1}(v,v)
/// Both are exact re-indexing consequences of the ball sum, so relative
/// violations beyond 1e-9 are bugs. The check additionally requires the
/// measured tail increment to decay at the series rate e^{-eps N/3}, which
/// is what the sign of the weights controls (weight_sign = +1 is the
/// deliberate falsification mode and fails this gate).
inline LipschitzReport lipschitz_check(const GeneratorSet& set, double epsilon, int n,
                                       std::shared_ptr<const SampleSet> pts = nullptr,
                                       int threads = 1, double weight_sign = -1.0) {
  LipschitzEngine engine(set, n, std::move(pts), threads);
  return engine.check(epsilon, weight_sign);
}

namespace detail {

/// Parallel transport of frame(q) into frame(p) along the connecting
/// geodesic, as a 2x2 change of basis.
inline Mat2 transport_between(const SpherePoint& q, const SpherePoint& p) {
  Frame fq = frame_at(q), fp = frame_at(p);
  double ang = geodesic_distance(q, p);
  Vec3 axis = cross(q.v, p.v);
  double an = norm(axis);
  auto rotate = [&](const Vec3& v) {
    if (an < 1e-14) return v;
    Vec3 k{axis.x / an, axis.y / an, axis.z / an};
    double c = std::cos(ang), s = std::sin(ang);
    Vec3 kxv = cross(k, v);
    double kdv = dot(k, v);
    return v * c + kxv * s + k * (kdv * (1 - c));
  };
  Vec3 t1 = rotate(fq.e1), t2 = rotate(fq.e2);
  return {dot(fp.e1, t1), dot(fp.e1, t2), dot(fp.e2, t1), dot(fp.e2, t2)};
}

}  // namespace detail

/// Field value at an arbitrary point: inverse-distance weighting of the three
/// nearest samples after parallel alignment of their frames. Interpolation
/// radius is 3x the mean sample spacing.
inline SymMat2 interpolate_field(const MetricField& field, const SpherePoint& q) {
  const auto& pts = field.samples->points;
  int best[3] = {-1, -1, -1};
  double bd[3] = {1e300, 1e300, 1e300};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double d = geodesic_distance(pts[i], q);
    if (d < bd[0]) {
      bd[2] = bd[1]; best[2] = best[1];
      bd[1] = bd[0]; best[1] = best[0];
      bd[0] = d; best[0] = static_cast<int>(i);
    } else if (d < bd[1]) {
      bd[2] = bd[1]; best[2] = best[1];
      bd[1] = d; best[1] = static_cast<int>(i);
    } else if (d < bd[2]) {
      bd[2] = d; best[2] = static_cast<int>(i);
    }
  }
  double radius = 3.0 * field.samples->mean_spacing();
  if (bd[0] > radius)
    throw DensityError("interpolate_field: target point is farther than the interpolation radius "
                       "from every sample; raise the sample count");
  if (bd[0] < 1e-12) return field.m[best[0]];
  double wsum = 0;
  SymMat2 acc;
  for (int k = 0; k < 3; ++k) {
    if (best[k] < 0 || bd[k] > radius) continue;
    const SpherePoint& p = pts[best[k]];
    Mat2 t = detail::transport_between(q, p);  // frame(q) -> frame(p)
    SymMat2 aligned = pullback(field.m[best[k]], t);
    double w = 1.0 / bd[k];
    acc += scaled(aligned, w);
    wsum += w;
  }
  return scaled(acc, 1.0 / wsum);
}

namespace detail {

inline double dilatation_of_pencil(const Mat2& j, const SymMat2& src, const SymMat2& dst) {
  // Whiten the source form by its Cholesky factor L (src = L L^T) and read
  // the eigenvalue ratio off N = L^-1 G L^-T. Unlike the characteristic
  // polynomial discriminant this keeps full precision near the conformal
  // case (ratio 1).
  SymMat2 g = pullback(dst, j);  // G = J^T dst J
  double l00 = std::sqrt(src.a00);
  double l10 = src.a01 / l00;
  double l11 = std::sqrt(src.a11 - l10 * l10);
  // X = L^-1 G by forward substitution
  double x00 = g.a00 / l00, x01 = g.a01 / l00;
  double x10 = (g.a01 - l10 * x00) / l11;
  double x11 = (g.a11 - l10 * x01) / l11;
  // N = X L^-T, rows solved against L^T
  double n00 = x00 / l00;
  double n01 = (x01 - l10 * n00) / l11;
  double n10 = x10 / l00;
  double n11 = (x11 - l10 * n10) / l11;
  double off = 0.5 * (n01 + n10);  // symmetric up to rounding
  double t = 0.5 * (n00 + n11);
  double d = std::hypot(0.5 * (n00 - n11), off);
  return std::sqrt((t + d) / (t - d));
}

}  // namespace detail

/// Infinitesimal quasiconformal dilatation of f measured against the round
/// metric: sup over the sphere of sigma_1/sigma_2 of the frame Jacobian.
inline double qc_dilatation_round(const Word& f) {
  return detail::supremum_over_sphere([&](const SpherePoint& p) {
    auto sv = singular_values(jacobian(f, p));
    return sv.first / sv.second;
  });
}

/// Dilatation of f with the source inner product field(x) and the target
/// inner product interpolated at f(x). Maximized over the field samples and
/// refined like the norm estimators.
inline double qc_dilatation(const Word& f, const MetricField& field) {
  auto k_at = [&](const SpherePoint& p) {
    SymMat2 src = interpolate_field(field, p);
    SpherePoint q = evaluate(f, p);
    SymMat2 dst = interpolate_field(field, q);
    return detail::dilatation_of_pencil(jacobian(f, p), src, dst);
  };
  // score all samples once, then refine around the best few as for norms
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(field.samples->points.size());
  for (std::size_t i = 0; i < field.samples->points.size(); ++i)
    scored.push_back({k_at(field.samples->points[i]), i});
  double best = 0;
  for (const auto& s : scored) best = std::max(best, s.first);
  std::partial_sort(scored.begin(), scored.begin() + kNormRefineCandidates, scored.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int c = 0; c < kNormRefineCandidates; ++c) {
    const SpherePoint& start = field.samples->points[scored[c].second];
    Chart chart = chart_of(start);
    double u, v;
    chart_project<double>(start.v, chart, u, v);
    double h = 0.1;
    auto eval_chart = [&](double uu, double vv) {
      return k_at(stereographic_lift({chart, uu, vv}));
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

}  // namespace burnside
