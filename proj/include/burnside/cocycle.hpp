#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "burnside/word_ball.hpp"

namespace burnside {

inline constexpr double kHyperbolicTol = 1e-4;    // |modulus - 1| threshold for classification
inline constexpr double kFixedPointPre = 1e-8;    // residual allowed when classifying
inline constexpr double kLyapunovSumTol = 1e-8;   // |lambda1 + lambda2| for area-preserving words

/// One-sided symbolic itinerary over a generating set: either a repeating
/// core or an i.i.d. uniform draw that is deterministic under its seed.
class SymbolicWord {
 public:
  static SymbolicWord periodic(const GeneratorSet& set, std::vector<Letter> core) {
    if (core.empty()) throw std::invalid_argument("SymbolicWord: empty periodic core");
    SymbolicWord w(set);
    w.core_ = std::move(core);
    return w;
  }

  static SymbolicWord random(const GeneratorSet& set, std::uint64_t seed) {
    SymbolicWord w(set);
    w.seed_ = seed;
    w.letters_ = set.letters();
    return w;
  }

  Letter letter_at(std::size_t i) const {
    if (!core_.empty()) return core_[i % core_.size()];
    std::uint64_t state = seed_ ^ (0x9e3779b97f4a7c15ULL * (i + 1));
    return letters_[uniform_index(state, letters_.size())];
  }

  bool is_periodic() const { return !core_.empty(); }
  const std::vector<Letter>& core() const { return core_; }
  const GeneratorSet& generators() const { return set_; }

  std::string descriptor() const {
    if (is_periodic()) {
      std::string s = "periodic:";
      for (std::size_t i = 0; i < core_.size(); ++i) {
        if (i) s += ",";
        s += set_.letter_name(core_[i]);
      }
      return s;
    }
    return "random:seed=" + std::to_string(seed_);
  }

 private:
  explicit SymbolicWord(const GeneratorSet& set) : set_(set) {}
  GeneratorSet set_;
  std::vector<Letter> core_;
  std::vector<Letter> letters_;
  std::uint64_t seed_ = 0;
};

/// Orbit state of the derivative cocycle: the base point, a unit tangent
/// vector in frame coordinates, and the accumulated log-stretch. The vector
/// is renormalized after every step so the accumulator stays finite for
/// arbitrarily long orbits.
struct CocycleState {
  SpherePoint position;
  double v0, v1;                    // frame components, unit length
  double log_norm_accumulator = 0;  // sum of per-step log-stretches
  double log_det_accumulator = 0;   // exact running log-determinant

  static CocycleState start(const SpherePoint& x, double frame_angle) {
    return {x, std::cos(frame_angle), std::sin(frame_angle), 0, 0};
  }

  static CocycleState start(const TangentVector& v) {
    Frame f = frame_at(v.base);
    double u0 = dot(v.dir, f.e1), u1 = dot(v.dir, f.e2);
    double n = std::sqrt(u0 * u0 + u1 * u1);
    if (n == 0) throw std::invalid_argument("CocycleState: zero tangent vector");
    return {v.base, u0 / n, u1 / n, 0, 0};
  }
};

/// One step of the derivative cocycle; returns the frame Jacobian applied.
inline Mat2 cocycle_step(const PrimitiveTable& table, const Letter& l, CocycleState& st) {
  LetterStep step = letter_jacobian(table, l, st.position);
  double b0 = step.jac.m00 * st.v0 + step.jac.m01 * st.v1;
  double b1 = step.jac.m10 * st.v0 + step.jac.m11 * st.v1;
  double nb = std::sqrt(b0 * b0 + b1 * b1);
  st.log_norm_accumulator += std::log(nb);
  st.log_det_accumulator += std::log(std::fabs(step.jac.det()));
  st.v0 = b0 / nb;
  st.v1 = b1 / nb;
  st.position = step.image;
  return step.jac;
}

/// Log-stretch of a tangent vector under one letter. Invariant under
/// positive rescaling of v (bit-exact for power-of-two factors).
inline double psi(const GeneratorSet& set, const Letter& s, const SpherePoint& x,
                  const TangentVector& v) {
  if (v.dir.x == 0 && v.dir.y == 0 && v.dir.z == 0)
    throw std::invalid_argument("psi: tangent vector must be nonzero");
  Frame f = frame_at(x);
  double u0 = dot(v.dir, f.e1), u1 = dot(v.dir, f.e2);
  Mat2 j = letter_jacobian(*set.table, s, x).jac;
  double w0 = j.m00 * u0 + j.m01 * u1;
  double w1 = j.m10 * u0 + j.m11 * u1;
  return 0.5 * std::log((w0 * w0 + w1 * w1) / (u0 * u0 + u1 * u1));
}

struct BirkhoffResult {
  double stepwise_mean;   // (1/n) sum of psi along the orbit, renormalized
  double jacobian_mean;   // (1/n) log of the full Jacobian stretch
  double discrepancy;     // |difference|; the chain rule makes this ~ 0
};

/// Both sides of the Birkhoff telescoping identity
///   (1/n) sum_i psi(F^i(w,(x,v))) = (1/n) log(||D_x w_n(v)|| / ||v||),
/// where w_n applies letters 0..n-1 in order.
inline BirkhoffResult birkhoff_derivative_sum(const SymbolicWord& w, const SpherePoint& x,
                                              const TangentVector& v, int n) {
  if (n < 1) throw std::invalid_argument("birkhoff_derivative_sum: needs n >= 1");
  if (geodesic_distance(v.base, x) > kUnitTol)
    throw std::invalid_argument("birkhoff_derivative_sum: tangent vector is not attached at x");
  CocycleState st = CocycleState::start(v);
  double u0 = st.v0, u1 = st.v1;

  const PrimitiveTable& table = *w.generators().table;
  Mat2 full = Mat2::identity();  // accumulated product, direct side
  double full_shift = 0;         // log scale factored out of `full`
  for (int i = 0; i < n; ++i) {
    Mat2 j = cocycle_step(table, w.letter_at(i), st);
    full = j * full;
    double scale = std::max({std::fabs(full.m00), std::fabs(full.m01), std::fabs(full.m10),
                             std::fabs(full.m11)});
    if (scale > 1e100 || (scale < 1e-100 && scale > 0)) {
      full = {full.m00 / scale, full.m01 / scale, full.m10 / scale, full.m11 / scale};
      full_shift += std::log(scale);
    }
  }
  double w0 = full.m00 * u0 + full.m01 * u1;
  double w1 = full.m10 * u0 + full.m11 * u1;
  double direct = full_shift + 0.5 * std::log(w0 * w0 + w1 * w1);
  BirkhoffResult r{st.log_norm_accumulator / n, direct / n, 0};
  r.discrepancy = std::fabs(r.stepwise_mean - r.jacobian_mean);
  return r;
}

struct LyapunovReport {
  double lambda1 = 0;
  double lambda2 = 0;
  int steps = 0;
  std::string word;
};

/// Fiber Lyapunov pair: lambda1 by renormalized vector iteration, lambda2
/// from the exact running log-determinant (lambda1 + lambda2 = mean log det).
inline LyapunovReport lyapunov_pair(const SymbolicWord& w, const SpherePoint& x, int n,
                                    std::uint64_t seed = 0) {
  if (n < 100) throw std::invalid_argument("lyapunov_pair: needs n >= 100");
  std::uint64_t state = seed ^ 0x7c159e3779b97f4aULL;
  CocycleState st = CocycleState::start(x, 2 * M_PI * uniform01(state));

  const PrimitiveTable& table = *w.generators().table;
  for (int i = 0; i < n; ++i) cocycle_step(table, w.letter_at(i), st);
  LyapunovReport rep;
  rep.lambda1 = st.log_norm_accumulator / n;
  rep.lambda2 = st.log_det_accumulator / n - rep.lambda1;
  if (rep.lambda2 > rep.lambda1) std::swap(rep.lambda1, rep.lambda2);
  rep.steps = n;
  rep.word = w.descriptor();
  return rep;
}

/// Uniformly weighted orbit measure mu_n = (1/n) sum_{i=1..n} delta_{x_i}.
struct EmpiricalMeasure {
  std::vector<std::pair<int, SpherePoint>> atoms;
  double weight = 0;  // common weight 1/n
};

inline EmpiricalMeasure empirical_measure(const SymbolicWord& w, const SpherePoint& x, int n) {
  if (n < 1) throw std::invalid_argument("empirical_measure: needs n >= 1");
  EmpiricalMeasure mu;
  mu.weight = 1.0 / n;
  SpherePoint p = x;
  const PrimitiveTable& table = *w.generators().table;
  for (int i = 1; i <= n; ++i) {
    p = apply_letter(table, w.letter_at(i - 1), p);
    mu.atoms.emplace_back(i, p);
  }
  return mu;
}

/// max over test functions of |int phi d(F_* mu_n) - int phi d mu_n|.
/// Telescoping leaves only the two boundary atoms, so the defect is <= 2/n
/// for test functions bounded by 1.
inline double empirical_invariance_defect(const SymbolicWord& w, const SpherePoint& x, int n,
                                          const std::vector<std::function<double(const SpherePoint&)>>& tests) {
  EmpiricalMeasure mu = empirical_measure(w, x, n + 1);  // one extra point for the pushforward
  double worst = 0;
  for (const auto& phi : tests) {
    double before = 0, after = 0;
    for (int i = 0; i < n; ++i) {
      before += phi(mu.atoms[i].second);
      after += phi(mu.atoms[i + 1].second);
    }
    worst = std::max(worst, std::fabs(after - before) / n);
  }
  return worst;
}

inline std::vector<std::function<double(const SpherePoint&)>> default_test_functions() {
  return {
      [](const SpherePoint& p) { return p.v.x; },
      [](const SpherePoint& p) { return p.v.y; },
      [](const SpherePoint& p) { return p.v.z; },
      [](const SpherePoint& p) { return std::sin(3 * p.v.x) * std::cos(2 * p.v.y); },
      [](const SpherePoint& p) { return std::sin(p.v.z * 5) * p.v.x; },
  };
}

enum class StabilityClass { elliptic, parabolic, hyperbolic };

inline const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::elliptic: return "elliptic";
    case StabilityClass::parabolic: return "parabolic";
    default: return "hyperbolic";
  }
}

/// A located periodic/fixed point with its linearization data.
struct FixedPointRecord {
  SpherePoint point;
  double residual;
  std::pair<std::complex<double>, std::complex<double>> eigs;
  StabilityClass classification;
  std::string word;
};

struct FixedPointPreconditionError : std::invalid_argument {
  double residual;
  explicit FixedPointPreconditionError(double r)
      : std::invalid_argument("classify_periodic_point: point is not fixed (residual " +
                              std::to_string(r) + ")"),
        residual(r) {}
};

inline StabilityClass classify_eigenvalues(const std::pair<std::complex<double>, std::complex<double>>& e,
                                           double tol = kHyperbolicTol) {
  double d1 = std::fabs(std::abs(e.first) - 1.0);
  double d2 = std::fabs(std::abs(e.second) - 1.0);
  if (d1 > tol && d2 > tol) return StabilityClass::hyperbolic;
  if (e.first.imag() != 0 || e.second.imag() != 0) return StabilityClass::elliptic;
  return StabilityClass::parabolic;
}

/// Eigenvalues and stability type of the period Jacobian of `core` at p.
/// Requires p to be fixed within kFixedPointPre; refine with the recurrence
/// search first if it is not.
inline FixedPointRecord classify_periodic_point(const Word& core, const SpherePoint& p) {
  double res = geodesic_distance(evaluate(core, p), p);
  if (res > kFixedPointPre) throw FixedPointPreconditionError(res);
  Mat2 j = jacobian(core, p);
  FixedPointRecord rec{p, res, eigenvalues(j), StabilityClass::elliptic, ""};
  rec.classification = classify_eigenvalues(rec.eigs);
  return rec;
}

}  // namespace burnside
