#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "burnside/diffeo.hpp"

namespace burnside {

inline constexpr int kProbeCount = 24;                 // probe points per fingerprint
inline constexpr double kMergeTolerance = 1e-8;        // probe-image agreement for element equality
inline constexpr std::size_t kElementCap = 2'000'000;  // default enumeration cap

/// An operation refused to run within its resource cap.
struct ResourceCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A named finite generating set over a shared primitive table. When
/// symmetric, the letter list interleaves each generator with its inverse.
struct GeneratorSet {
  std::shared_ptr<const PrimitiveTable> table;
  std::vector<std::string> names;
  bool symmetric = true;

  GeneratorSet(std::vector<Primitive> prims, std::vector<std::string> nm, bool sym)
      : table(std::make_shared<PrimitiveTable>(std::move(prims))), names(std::move(nm)), symmetric(sym) {
    if (names.size() != table->size()) throw std::invalid_argument("GeneratorSet: one name per primitive");
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = i + 1; j < names.size(); ++j)
        if (names[i] == names[j])
          throw std::invalid_argument("GeneratorSet: duplicate generator name '" + names[i] + "'");
  }

  std::vector<Letter> letters() const {
    std::vector<Letter> out;
    for (std::uint32_t i = 0; i < table->size(); ++i) {
      out.push_back({i, +1});
      if (symmetric) out.push_back({i, -1});
    }
    return out;
  }

  Word word(std::vector<Letter> ls) const { return {table, std::move(ls)}; }
  Word identity() const { return Word::identity(table); }

  std::string letter_name(const Letter& l) const {
    return l.exp > 0 ? names[l.prim] : names[l.prim] + "^-1";
  }
};

/// Probe-image fingerprint of a group element: the images of a fixed set of
/// probe points, quantized on a fine grid. Two elements are equal iff all
/// quantized probe images agree within the merge tolerance.
struct FingerprintConfig {
  int probes = kProbeCount;
  double merge_tolerance = kMergeTolerance;

  double fine_cell() const { return merge_tolerance / 16.0; }
  std::int32_t merge_cells() const { return 16; }
};

using Fingerprint = std::vector<std::int32_t>;  // 3 * probes quantized coordinates

namespace detail {

inline std::vector<SpherePoint> probe_points(int n) { return fibonacci_sphere(n); }

inline Fingerprint quantize_images(const std::vector<SpherePoint>& imgs, double cell) {
  Fingerprint fp;
  fp.reserve(imgs.size() * 3);
  for (const SpherePoint& p : imgs) {
    fp.push_back(static_cast<std::int32_t>(std::llround(p.v.x / cell)));
    fp.push_back(static_cast<std::int32_t>(std::llround(p.v.y / cell)));
    fp.push_back(static_cast<std::int32_t>(std::llround(p.v.z / cell)));
  }
  return fp;
}

inline bool fingerprints_match(const Fingerprint& a, const Fingerprint& b, std::int32_t tol_cells) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    // widen first: cell indices span +-1.6e9, so the difference overflows int32
    std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
    if (d > tol_cells || d < -tol_cells) return false;
  }
  return true;
}

/// Coarse bucket key from the first probe image; matching elements land in
/// the same or an adjacent coarse cell.
inline std::uint64_t bucket_key(std::int64_t cx, std::int64_t cy, std::int64_t cz) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::int64_t v : {cx, cy, cz}) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::int64_t kBucketFactor = 8192;  // coarse cell = fine cell * factor

}  // namespace detail

struct GrowthReport {
  std::vector<std::size_t> counts;  // B_0 .. B_n
  double exponent = 0;
  enum class Class { finite, subexponential, exponential } classification = Class::finite;
  bool truncated = false;
};

inline const char* to_string(GrowthReport::Class c) {
  switch (c) {
    case GrowthReport::Class::finite: return "finite";
    case GrowthReport::Class::subexponential: return "subexponential";
    default: return "exponential";
  }
}

/// Deduplicated enumeration of all group elements of word length <= radius.
/// Elements are stored in breadth-first discovery order, which is also the
/// (length, lexicographic-by-letter-index) order of their shortest words;
/// the first `counts[k]` elements are exactly the ball of radius k.
class WordBall {
 public:
  struct Element {
    std::uint32_t parent;  // index of the parent element
    Letter letter;         // last letter of the shortest word
    std::uint16_t len;
  };

  WordBall(const GeneratorSet& set, int radius, std::size_t cap = kElementCap,
           FingerprintConfig cfg = {})
      : set_(set), radius_(radius), cfg_(cfg) {
    if (radius < 0) throw std::invalid_argument("enumerate_ball: radius must be >= 0");
    auto letters = set.letters();
    if (letters.empty()) throw std::invalid_argument("enumerate_ball: empty generating set");
    const auto probes = detail::probe_points(cfg.probes);
    const double cell = cfg.fine_cell();

    std::vector<std::vector<SpherePoint>> images;  // per element, freed once expanded
    images.push_back(probes);
    elements_.push_back({0, Letter{0, +1}, 0});
    fingerprints_.push_back(detail::quantize_images(probes, cell));
    bucket_insert(0);
    counts_.push_back(1);

    std::size_t depth_begin = 0, depth_end = 1;
    for (int depth = 1; depth <= radius && !truncated_; ++depth) {
      for (std::size_t pi = depth_begin; pi < depth_end && !truncated_; ++pi) {
        for (const Letter& l : letters) {
          std::vector<SpherePoint> imgs;
          imgs.reserve(probes.size());
          for (const SpherePoint& q : images[pi]) imgs.push_back(apply_letter(*set.table, l, q));
          Fingerprint fp = detail::quantize_images(imgs, cell);
          if (find_match(fp) >= 0) continue;
          if (elements_.size() >= cap) { truncated_ = true; break; }
          elements_.push_back({static_cast<std::uint32_t>(pi), l, static_cast<std::uint16_t>(depth)});
          fingerprints_.push_back(std::move(fp));
          bucket_insert(elements_.size() - 1);
          images.push_back(std::move(imgs));
        }
        std::vector<SpherePoint>().swap(images[pi]);  // expanded, no longer needed
      }
      counts_.push_back(elements_.size());
      depth_begin = depth_end;
      depth_end = elements_.size();
    }
    while (counts_.size() < static_cast<std::size_t>(radius) + 1) counts_.push_back(elements_.size());
  }

  int radius() const { return radius_; }
  std::size_t size() const { return elements_.size(); }
  bool truncated() const { return truncated_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const GeneratorSet& generators() const { return set_; }
  int length_of(std::size_t i) const { return elements_[i].len; }

  /// Shortest representing word of element i (ties broken lexicographically
  /// by letter index, which is the discovery order).
  Word word(std::size_t i) const {
    std::vector<Letter> ls;
    while (i != 0) {
      ls.push_back(elements_[i].letter);
      i = elements_[i].parent;
    }
    std::reverse(ls.begin(), ls.end());
    return {set_.table, std::move(ls)};
  }

  std::size_t count_at(int k) const { return counts_.at(static_cast<std::size_t>(k)); }

  /// Number of elements whose shortest word has length exactly k.
  std::size_t shell_count(int k) const {
    if (k == 0) return 1;
    return count_at(k) - count_at(k - 1);
  }

 private:
  void bucket_insert(std::size_t idx) {
    buckets_[coarse_key(fingerprints_[idx])].push_back(static_cast<std::uint32_t>(idx));
  }

  std::uint64_t coarse_key(const Fingerprint& fp, std::int64_t ox = 0, std::int64_t oy = 0,
                           std::int64_t oz = 0) const {
    auto div = [](std::int64_t a, std::int64_t b) {  // floor division
      return a >= 0 ? a / b : -((-a + b - 1) / b);
    };
    return detail::bucket_key(div(fp[0], detail::kBucketFactor) + ox,
                              div(fp[1], detail::kBucketFactor) + oy,
                              div(fp[2], detail::kBucketFactor) + oz);
  }

  std::int64_t find_match(const Fingerprint& fp) const {
    const std::int32_t tol = cfg_.merge_cells();
    for (int ox = -1; ox <= 1; ++ox)
      for (int oy = -1; oy <= 1; ++oy)
        for (int oz = -1; oz <= 1; ++oz) {
          auto it = buckets_.find(coarse_key(fp, ox, oy, oz));
          if (it == buckets_.end()) continue;
          for (std::uint32_t idx : it->second)
            if (detail::fingerprints_match(fingerprints_[idx], fp, tol)) return idx;
        }
    return -1;
  }

  GeneratorSet set_;
  int radius_;
  FingerprintConfig cfg_;
  std::vector<Element> elements_;
  std::vector<Fingerprint> fingerprints_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
  std::vector<std::size_t> counts_;
  bool truncated_ = false;
};

inline WordBall enumerate_ball(const GeneratorSet& set, int radius, std::size_t cap = kElementCap,
                               FingerprintConfig cfg = {}) {
  return WordBall(set, radius, cap, cfg);
}

/// Fingerprint of an arbitrary word, using the same probes and quantization
/// as ball enumeration.
inline Fingerprint fingerprint_of(const Word& w, FingerprintConfig cfg = {}) {
  const auto probes = detail::probe_points(cfg.probes);
  std::vector<SpherePoint> imgs;
  imgs.reserve(probes.size());
  for (const SpherePoint& p : probes) imgs.push_back(evaluate(w, p));
  return detail::quantize_images(imgs, cfg.fine_cell());
}

inline bool fingerprints_equal(const Fingerprint& a, const Fingerprint& b, FingerprintConfig cfg = {}) {
  return detail::fingerprints_match(a, b, cfg.merge_cells());
}

/// Volume-growth estimate: least-squares slope of log B_k over the top half
/// of the radii.
inline GrowthReport growth_exponent(const WordBall& ball) {
  if (ball.radius() < 4) throw std::invalid_argument("growth_exponent: needs radius >= 4");
  GrowthReport rep;
  rep.counts = ball.counts();
  rep.truncated = ball.truncated();
  int n = ball.radius();
  std::vector<double> xs, ys;
  for (int k = n / 2; k <= n; ++k) {
    xs.push_back(k);
    ys.push_back(std::log(static_cast<double>(ball.count_at(k))));
  }
  rep.exponent = std::max(0.0, ls_slope(xs, ys));
  bool stable = ball.count_at(n) == ball.count_at(n - 1) && ball.count_at(n - 1) == ball.count_at(n - 2);
  if (stable)
    rep.classification = GrowthReport::Class::finite;
  else if (rep.exponent > 0.1)
    rep.classification = GrowthReport::Class::exponential;
  else
    rep.classification = GrowthReport::Class::subexponential;
  return rep;
}

namespace detail {

/// Deterministic sample of words of length exactly n: the pure powers of
/// every letter always come first, then seeded random words.
inline std::vector<Word> sample_words_of_length(const GeneratorSet& set, int n, int budget,
                                                std::uint64_t seed) {
  auto letters = set.letters();
  std::vector<Word> words;
  for (const Letter& l : letters) {
    if (static_cast<int>(words.size()) >= budget) break;
    words.push_back(set.word(std::vector<Letter>(static_cast<std::size_t>(n), l)));
  }
  std::uint64_t state = seed ^ 0x6d75726d757281ULL;
  while (static_cast<int>(words.size()) < budget) {
    std::vector<Letter> ls(static_cast<std::size_t>(n));
    for (auto& l : ls) l = letters[uniform_index(state, letters.size())];
    words.push_back(set.word(std::move(ls)));
  }
  return words;
}

}  // namespace detail

/// max over sampled words of length exactly n of (1/n) log ||D(w)||.
/// Deterministic under a fixed seed.
inline double derivative_growth_exponent(const GeneratorSet& set, int n, int sample_budget,
                                         std::uint64_t seed = 0) {
  if (n < 2) throw std::invalid_argument("derivative_growth_exponent: needs n >= 2");
  double best = 0;
  for (const Word& w : detail::sample_words_of_length(set, n, sample_budget, seed))
    best = std::max(best, std::log(operator_norm_D(w)) / n);
  return best;
}

struct DerivativeGrowthRow {
  int radius;
  double max_log_norm;   // max over sampled length-k words of log ||D(w)||
  double exponent;       // max_log_norm / k
};

inline std::vector<DerivativeGrowthRow> derivative_growth_table(const GeneratorSet& set, int n,
                                                                int sample_budget,
                                                                std::uint64_t seed = 0) {
  std::vector<DerivativeGrowthRow> rows;
  for (int k = 1; k <= n; ++k) {
    double best = 0;
    for (const Word& w : detail::sample_words_of_length(set, k, sample_budget, seed + k))
      best = std::max(best, std::log(operator_norm_D(w)));
    rows.push_back({k, best, best / k});
  }
  return rows;
}

struct CrGrowthReport {
  struct Row {
    int length;
    double max_cr1;
    double max_cr2;
  };
  std::vector<Row> rows;
  double rate1 = 0;   // fitted exponential rate of max ||w||_1
  double rate2 = 0;   // fitted exponential rate of max ||w||_2
  double slack = 0.05;
  bool rate_bound_ok = false;  // rate2 <= r * rate1 + slack
};

/// Per-length max of ||w||_2 over sampled words, with the rate-level check
/// rate(||.||_2) <= r * rate(||.||_1) + 0.05 (r = 2 only).
inline CrGrowthReport cr_growth_report(const GeneratorSet& set, int n, int r, int sample_budget = 8,
                                       std::uint64_t seed = 0) {
  if (r != 2) throw std::invalid_argument("cr_growth_report: only r = 2 is supported");
  CrGrowthReport rep;
  for (int k = 1; k <= n; ++k) {
    double b1 = 1, b2 = 1;
    for (const Word& w : detail::sample_words_of_length(set, k, sample_budget, seed + k)) {
      b1 = std::max(b1, cr_norm(w, 1));
      b2 = std::max(b2, cr_norm(w, 2));
    }
    rep.rows.push_back({k, b1, b2});
  }
  std::vector<double> xs, y1, y2;
  for (int k = n / 2; k <= n; ++k) {
    xs.push_back(k);
    y1.push_back(std::log(rep.rows[k - 1].max_cr1));
    y2.push_back(std::log(rep.rows[k - 1].max_cr2));
  }
  rep.rate1 = ls_slope(xs, y1);
  rep.rate2 = ls_slope(xs, y2);
  rep.rate_bound_ok = rep.rate2 <= r * rep.rate1 + rep.slack;
  return rep;
}

}  // namespace burnside
