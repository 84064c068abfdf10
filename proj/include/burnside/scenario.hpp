#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "burnside/recurrence.hpp"
#include "burnside/version.hpp"

namespace burnside {

using json = nlohmann::ordered_json;

/// Scenario validation failure; carries the offending field in the message.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LyapunovSpec {
  std::string word = "periodic:all";  // periodic:all | periodic:<letter indices> | random
  std::array<double, 3> start{0, 1, 0};
  int steps = 2000;
};

struct RecurSpec {
  int radius = 6;
  int kmax = 16;
  std::optional<std::array<SpherePoint, 3>> triple;
};

struct ConjFamilySpec {
  std::string generator;  // name of a rotation generator; empty = first rotation
  std::vector<double> strengths{1.6, 0.8, 0.4, 0.2, 0.1};
};

struct Scenario {
  std::string name;
  std::vector<Primitive> primitives;
  std::vector<std::string> generator_names;
  bool symmetric = true;
  std::vector<double> epsilons{0.5};
  int max_radius = 8;
  int samples = kMetricSamples;
  std::uint64_t seed = 0;
  std::vector<std::string> experiments;
  std::string output_format = "json";

  // optional knobs with documented defaults
  int pesin_radius = -1;     // default min(max_radius, 10)
  int derivs_radius = -1;    // default min(max_radius, 12)
  int derivs_budget = 64;
  int crgrowth_radius = -1;  // default min(max_radius, 10)
  int crgrowth_budget = 8;
  int order_kmax = 64;
  std::size_t element_cap = kElementCap;
  LyapunovSpec lyapunov;
  RecurSpec recur;
  ConjFamilySpec conjfamily;

  GeneratorSet generator_set() const { return GeneratorSet(primitives, generator_names, symmetric); }
  int effective_pesin_radius() const { return pesin_radius > 0 ? pesin_radius : std::min(max_radius, 10); }
  int effective_derivs_radius() const { return derivs_radius > 0 ? derivs_radius : std::min(max_radius, 12); }
  int effective_crgrowth_radius() const { return crgrowth_radius > 0 ? crgrowth_radius : std::min(max_radius, 10); }
};

inline const std::vector<std::string>& experiment_order() {
  static const std::vector<std::string> order = {"growth",  "derivs", "crgrowth",
                                                 "lyapunov", "pesin",  "qc",
                                                 "recur",    "order",  "conjfamily"};
  return order;
}

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) throw ScenarioError("unknown key '" + path + it.key() + "'");
  }
}

inline Vec3 parse_axis(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(path + ": axis must be a 3-array");
  Vec3 a{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  double n = norm(a);
  if (std::fabs(n - 1.0) > 1e-6) throw ScenarioError(path + ": axis must be unit length");
  return normalized(a);
}

inline std::complex<double> parse_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(path + ": complex values are [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Primitive parse_generator(const json& g, const std::string& path, std::string& name) {
  if (!g.is_object()) throw ScenarioError(path + ": generator must be an object");
  if (!g.contains("name") || !g["name"].is_string()) throw ScenarioError(path + ".name: required string");
  name = g["name"].get<std::string>();
  if (!g.contains("kind") || !g["kind"].is_string()) throw ScenarioError(path + ".kind: required string");
  std::string kind = g["kind"].get<std::string>();
  try {
    if (kind == "rotation") {
      reject_unknown_keys(g, {"name", "kind", "axis", "angle"}, path + ".");
      if (!g.contains("axis") || !g.contains("angle")) throw ScenarioError(path + ": rotation needs axis and angle");
      return Rotation(parse_axis(g["axis"], path + ".axis"), g["angle"].get<double>());
    }
    if (kind == "twist") {
      reject_unknown_keys(g, {"name", "kind", "axis", "strength"}, path + ".");
      if (!g.contains("axis") || !g.contains("strength")) throw ScenarioError(path + ": twist needs axis and strength");
      return Twist(parse_axis(g["axis"], path + ".axis"), g["strength"].get<double>());
    }
    if (kind == "mobius") {
      reject_unknown_keys(g, {"name", "kind", "a", "b", "c", "d"}, path + ".");
      for (const char* k : {"a", "b", "c", "d"})
        if (!g.contains(k)) throw ScenarioError(path + ": mobius needs a, b, c, d");
      return Mobius::normalized(parse_complex(g["a"], path + ".a"), parse_complex(g["b"], path + ".b"),
                                parse_complex(g["c"], path + ".c"), parse_complex(g["d"], path + ".d"));
    }
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path + ": " + e.what());
  }
  throw ScenarioError(path + ".kind: must be one of rotation, mobius, twist");
}

}  // namespace detail

/// Parses and fully validates a scenario document. Unknown keys are rejected
/// with the offending key named; validation errors carry the field path.
inline Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // recover line/column from the byte offset
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) {
      if (text[i] == '\n') { ++line; col = 1; }
      else ++col;
    }
    throw ScenarioError("parse error at line " + std::to_string(line) + ", column " +
                        std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  detail::reject_unknown_keys(
      doc,
      {"name", "generators", "symmetric", "epsilon", "max_radius", "samples", "seed",
       "experiments", "output_format", "pesin_radius", "derivs_radius", "derivs_budget",
       "crgrowth_radius", "crgrowth_budget", "order_kmax", "element_cap", "lyapunov", "recur",
       "conjfamily"},
      "");

  Scenario s;
  if (!doc.contains("name") || !doc["name"].is_string()) throw ScenarioError("name: required string");
  s.name = doc["name"].get<std::string>();
  if (!doc.contains("generators") || !doc["generators"].is_array() || doc["generators"].empty())
    throw ScenarioError("generators: required non-empty array");
  for (std::size_t i = 0; i < doc["generators"].size(); ++i) {
    std::string nm;
    Primitive p = detail::parse_generator(doc["generators"][i], "generators[" + std::to_string(i) + "]", nm);
    for (const auto& existing : s.generator_names)
      if (existing == nm) throw ScenarioError("generators: duplicate generator name '" + nm + "'");
    s.primitives.push_back(p);
    s.generator_names.push_back(nm);
  }
  if (doc.contains("symmetric")) s.symmetric = doc["symmetric"].get<bool>();
  if (doc.contains("epsilon")) {
    s.epsilons.clear();
    if (doc["epsilon"].is_number())
      s.epsilons.push_back(doc["epsilon"].get<double>());
    else if (doc["epsilon"].is_array())
      for (const auto& e : doc["epsilon"]) s.epsilons.push_back(e.get<double>());
    else
      throw ScenarioError("epsilon: must be a number or an array of numbers");
    for (double e : s.epsilons)
      if (e <= 0) throw ScenarioError("epsilon: epsilon must be positive");
  }
  if (doc.contains("max_radius")) {
    s.max_radius = doc["max_radius"].get<int>();
    if (s.max_radius < 0) throw ScenarioError("max_radius: must be >= 0");
  }
  if (doc.contains("samples")) {
    s.samples = doc["samples"].get<int>();
    if (s.samples < 4) throw ScenarioError("samples: must be >= 4");
  }
  if (doc.contains("seed")) s.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("experiments")) {
    if (!doc["experiments"].is_array()) throw ScenarioError("experiments: must be an array");
    for (const auto& e : doc["experiments"]) {
      std::string name = e.get<std::string>();
      bool known = false;
      for (const auto& k : experiment_order())
        if (k == name) { known = true; break; }
      if (!known) throw ScenarioError("experiments: unknown experiment '" + name + "'");
      s.experiments.push_back(name);
    }
  }
  if (doc.contains("output_format")) {
    s.output_format = doc["output_format"].get<std::string>();
    if (s.output_format != "csv" && s.output_format != "json")
      throw ScenarioError("output_format: must be csv or json");
  }
  for (const char* k : {"pesin_radius", "derivs_radius", "derivs_budget", "crgrowth_radius",
                        "crgrowth_budget", "order_kmax"}) {
    if (doc.contains(k)) {
      int v = doc[k].get<int>();
      if (v < 1) throw ScenarioError(std::string(k) + ": must be >= 1");
      if (std::string(k) == "pesin_radius") s.pesin_radius = v;
      else if (std::string(k) == "derivs_radius") s.derivs_radius = v;
      else if (std::string(k) == "derivs_budget") s.derivs_budget = v;
      else if (std::string(k) == "crgrowth_radius") s.crgrowth_radius = v;
      else if (std::string(k) == "crgrowth_budget") s.crgrowth_budget = v;
      else s.order_kmax = v;
    }
  }
  if (doc.contains("element_cap")) s.element_cap = doc["element_cap"].get<std::size_t>();
  if (doc.contains("lyapunov")) {
    const json& l = doc["lyapunov"];
    detail::reject_unknown_keys(l, {"word", "start", "steps"}, "lyapunov.");
    if (l.contains("word")) s.lyapunov.word = l["word"].get<std::string>();
    if (l.contains("start")) {
      if (!l["start"].is_array() || l["start"].size() != 3)
        throw ScenarioError("lyapunov.start: must be a 3-array");
      for (int i = 0; i < 3; ++i) s.lyapunov.start[i] = l["start"][i].get<double>();
    }
    if (l.contains("steps")) {
      s.lyapunov.steps = l["steps"].get<int>();
      if (s.lyapunov.steps < 100) throw ScenarioError("lyapunov.steps: must be >= 100");
    }
  }
  if (doc.contains("recur")) {
    const json& r = doc["recur"];
    detail::reject_unknown_keys(r, {"radius", "kmax", "triple"}, "recur.");
    if (r.contains("radius")) s.recur.radius = r["radius"].get<int>();
    if (r.contains("kmax")) s.recur.kmax = r["kmax"].get<int>();
    if (r.contains("triple")) {
      if (!r["triple"].is_array() || r["triple"].size() != 9)
        throw ScenarioError("recur.triple: must be a flat 9-array x1,y1,z1,...");
      auto p = [&](int i) {
        return SpherePoint::project({r["triple"][3 * i].get<double>(), r["triple"][3 * i + 1].get<double>(),
                                     r["triple"][3 * i + 2].get<double>()});
      };
      s.recur.triple = {{p(0), p(1), p(2)}};
    }
  }
  if (doc.contains("conjfamily")) {
    const json& c = doc["conjfamily"];
    detail::reject_unknown_keys(c, {"generator", "strengths"}, "conjfamily.");
    if (c.contains("generator")) s.conjfamily.generator = c["generator"].get<std::string>();
    if (c.contains("strengths")) {
      s.conjfamily.strengths.clear();
      for (const auto& t : c["strengths"]) s.conjfamily.strengths.push_back(t.get<double>());
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

struct RunOptions {
  int threads = 1;
  bool timings = false;
  std::string out_dir;  // empty = no CSV side files
};

namespace detail {

inline json point_json(const SpherePoint& p) { return json::array({p.v.x, p.v.y, p.v.z}); }

inline std::string word_string(const GeneratorSet& set, const Word& w) {
  if (w.letters.empty()) return "Id";
  std::string s;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    if (i) s += "*";
    s += set.letter_name(w.letters[i]);
  }
  return s;
}

inline json fixed_point_json(const FixedPointRecord& rec) {
  json j;
  j["point"] = point_json(rec.point);
  j["residual"] = rec.residual;
  j["eigenvalues"] = json::array({json::array({rec.eigs.first.real(), rec.eigs.first.imag()}),
                                  json::array({rec.eigs.second.real(), rec.eigs.second.imag()})});
  j["classification"] = to_string(rec.classification);
  j["word"] = rec.word;
  return j;
}

inline std::vector<Letter> parse_word_spec(const GeneratorSet& set, const std::string& spec) {
  auto letters = set.letters();
  if (spec == "periodic:all") {
    std::vector<Letter> core;
    for (std::uint32_t i = 0; i < set.table->size(); ++i) core.push_back({i, +1});
    return core;
  }
  if (spec.rfind("periodic:", 0) == 0) {
    std::vector<Letter> core;
    std::stringstream ss(spec.substr(9));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      int idx = std::stoi(tok);
      if (idx < 0 || idx >= static_cast<int>(letters.size()))
        throw ScenarioError("lyapunov.word: letter index " + tok + " out of range");
      core.push_back(letters[static_cast<std::size_t>(idx)]);
    }
    if (core.empty()) throw ScenarioError("lyapunov.word: empty periodic core");
    return core;
  }
  if (spec == "random") return {};
  throw ScenarioError("lyapunov.word: must be periodic:all, periodic:<indices> or random");
}

inline std::string csv_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/// Runs the requested experiments in the fixed order, reusing the word ball
/// and metric shell sums across experiments. Deterministic under a fixed
/// seed for any thread count; per-experiment failures are recorded in the
/// report and the run continues.
class ScenarioRunner {
 public:
  ScenarioRunner(const Scenario& s, const RunOptions& opt) : s_(s), opt_(opt), set_(s.generator_set()) {}

  json run() {
    json report;
    report["library_version"] = kVersion;
    report["scenario"] = scenario_echo();
    json results;
    for (const std::string& exp : experiment_order()) {
      if (!requested(exp)) continue;
      try {
        results[exp] = run_experiment(exp);
      } catch (const ResourceCapError& e) {
        results[exp] = json{{"error", e.what()}, {"resource_cap", true}};
        cap_hit_ = true;
      } catch (const std::exception& e) {
        results[exp] = json{{"error", e.what()}};
      }
    }
    report["results"] = results;
    report["resource_cap_hit"] = cap_hit_;
    return report;
  }

  /// CSV side files for the experiments that define them.
  std::vector<std::pair<std::string, std::string>> csv_files() const { return csv_files_; }

 private:
  bool requested(const std::string& exp) const {
    for (const auto& e : s_.experiments)
      if (e == exp) return true;
    return false;
  }

  json scenario_echo() const {
    json g = json::array();
    for (std::size_t i = 0; i < s_.primitives.size(); ++i) {
      json rec;
      rec["name"] = s_.generator_names[i];
      if (const auto* r = std::get_if<Rotation>(&s_.primitives[i])) {
        rec["kind"] = "rotation";
        rec["axis"] = json::array({r->axis.x, r->axis.y, r->axis.z});
        rec["angle"] = r->angle;
      } else if (const auto* t = std::get_if<Twist>(&s_.primitives[i])) {
        rec["kind"] = "twist";
        rec["axis"] = json::array({t->axis.x, t->axis.y, t->axis.z});
        rec["strength"] = t->strength;
      } else {
        const auto& m = std::get<Mobius>(s_.primitives[i]);
        rec["kind"] = "mobius";
        rec["a"] = json::array({m.a.real(), m.a.imag()});
        rec["b"] = json::array({m.b.real(), m.b.imag()});
        rec["c"] = json::array({m.c.real(), m.c.imag()});
        rec["d"] = json::array({m.d.real(), m.d.imag()});
      }
      g.push_back(rec);
    }
    json e;
    e["name"] = s_.name;
    e["generators"] = g;
    e["symmetric"] = s_.symmetric;
    e["epsilon"] = s_.epsilons;
    e["max_radius"] = s_.max_radius;
    e["samples"] = s_.samples;
    e["seed"] = s_.seed;
    e["experiments"] = s_.experiments;
    e["output_format"] = s_.output_format;
    return e;
  }

  const WordBall& ball_of_radius(int r) {
    auto it = balls_.find(r);
    if (it != balls_.end()) return it->second;
    auto [pos, _] = balls_.emplace(r, enumerate_ball(set_, r, s_.element_cap));
    return pos->second;
  }

  std::shared_ptr<const SampleSet> samples() {
    if (!samples_) samples_ = SampleSet::standard(s_.samples);
    return samples_;
  }

  json run_experiment(const std::string& exp) {
    if (exp == "growth") return run_growth();
    if (exp == "derivs") return run_derivs();
    if (exp == "crgrowth") return run_crgrowth();
    if (exp == "lyapunov") return run_lyapunov();
    if (exp == "pesin") return run_pesin();
    if (exp == "qc") return run_qc();
    if (exp == "recur") return run_recur();
    if (exp == "order") return run_order();
    return run_conjfamily();
  }

  json run_growth() {
    const WordBall& ball = ball_of_radius(s_.max_radius);
    GrowthReport rep = growth_exponent(ball);
    json j;
    j["counts"] = rep.counts;
    j["exponent"] = rep.exponent;
    j["classification"] = to_string(rep.classification);
    j["truncated"] = rep.truncated;
    std::string csv = "radius,count,log_count,max_log_Dnorm\n";
    for (std::size_t k = 0; k < rep.counts.size(); ++k)
      csv += std::to_string(k) + "," + std::to_string(rep.counts[k]) + "," +
             detail::csv_double(std::log(static_cast<double>(rep.counts[k]))) + ",\n";
    csv_files_.push_back({"growth.csv", csv});
    if (rep.truncated) cap_hit_ = true;  // capped result is flagged, not fatal
    return j;
  }

  json run_derivs() {
    int n = s_.effective_derivs_radius();
    const WordBall& ball = ball_of_radius(std::min(n, s_.max_radius));
    auto rows = derivative_growth_table(set_, n, s_.derivs_budget, s_.seed);
    json j;
    j["radius"] = n;
    j["budget"] = s_.derivs_budget;
    json jr = json::array();
    std::string csv = "radius,count,log_count,max_log_Dnorm\n";
    for (const auto& row : rows) {
      std::size_t count = row.radius <= ball.radius() ? ball.count_at(row.radius) : 0;
      json r;
      r["radius"] = row.radius;
      r["count"] = count;
      r["max_log_Dnorm"] = row.max_log_norm;
      r["exponent"] = row.exponent;
      jr.push_back(r);
      csv += std::to_string(row.radius) + "," + std::to_string(count) + "," +
             (count ? detail::csv_double(std::log(static_cast<double>(count))) : std::string()) + "," +
             detail::csv_double(row.max_log_norm) + "\n";
    }
    j["rows"] = jr;
    j["exponent"] = rows.empty() ? 0.0 : rows.back().exponent;
    csv_files_.push_back({"derivs.csv", csv});
    return j;
  }

  json run_crgrowth() {
    CrGrowthReport rep = cr_growth_report(set_, s_.effective_crgrowth_radius(), 2, s_.crgrowth_budget, s_.seed);
    json j;
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back(json{{"length", r.length}, {"max_cr1", r.max_cr1}, {"max_cr2", r.max_cr2}});
    j["rows"] = rows;
    j["rate1"] = rep.rate1;
    j["rate2"] = rep.rate2;
    j["slack"] = rep.slack;
    j["rate_bound_ok"] = rep.rate_bound_ok;
    return j;
  }

  json run_lyapunov() {
    SpherePoint start = SpherePoint::project(
        {s_.lyapunov.start[0], s_.lyapunov.start[1], s_.lyapunov.start[2]});
    std::vector<Letter> core = detail::parse_word_spec(set_, s_.lyapunov.word);
    SymbolicWord w = core.empty() ? SymbolicWord::random(set_, s_.seed)
                                  : SymbolicWord::periodic(set_, core);
    LyapunovReport rep = lyapunov_pair(w, start, s_.lyapunov.steps, s_.seed);
    double defect = empirical_invariance_defect(w, start, std::min(s_.lyapunov.steps, 2000),
                                                default_test_functions());
    json j;
    j["word"] = w.descriptor();
    j["start"] = detail::point_json(start);
    j["steps"] = rep.steps;
    j["lambda1"] = rep.lambda1;
    j["lambda2"] = rep.lambda2;
    j["lambda_sum"] = rep.lambda1 + rep.lambda2;
    j["defect"] = defect;
    j["defect_bound"] = 2.0 / std::min(s_.lyapunov.steps, 2000);
    if (!core.empty()) {
      Word cw = set_.word(core);
      FixedPointSearch fps = find_fixed_point(cw, start, M_PI);
      if (fps.status == FixedPointSearch::Status::converged) {
        FixedPointRecord rec = *fps.record;
        rec.word = detail::word_string(set_, cw);
        j["periodic_point"] = detail::fixed_point_json(rec);
      }
    }
    return j;
  }

  struct PesinCache {
    int n = -1;
    std::shared_ptr<ShellSums> sums;  // shells to n+1 on the standard samples
    std::shared_ptr<LipschitzEngine> lipschitz;
  };

  const PesinCache& pesin_cache() {
    if (pesin_.n < 0) {
      int n = s_.effective_pesin_radius();
      const WordBall& ball = ball_of_radius(n + 1);
      if (ball.truncated()) throw ResourceCapError("pesin: ball enumeration hit the element cap");
      pesin_.n = n;
      pesin_.sums = std::make_shared<ShellSums>(ball, samples(), n + 1, opt_.threads);
      if (set_.symmetric)
        pesin_.lipschitz = std::make_shared<LipschitzEngine>(set_, n, samples(), opt_.threads);
    }
    return pesin_;
  }

  /// Tail increments e^{-eps k} ||shell_k|| and their fitted log-slope.
  struct TailSummary {
    std::vector<double> increments;
    double slope = 0;
    bool vanished = false;
  };

  TailSummary tail_from_shells(const ShellSums& sums, double eps, int n) const {
    TailSummary t;
    std::vector<double> xs, ys;
    for (int k = 1; k <= n; ++k) {
      double w = std::exp(-eps * k);
      double sup = 0;
      for (const auto& shell : sums.shells[k]) sup = std::max(sup, scaled(shell, w).spectral_norm());
      t.increments.push_back(sup);
      if (k >= std::max(1, n / 2) && sup > 1e-300) {
        xs.push_back(k);
        ys.push_back(std::log(sup));
      }
    }
    if (xs.size() >= 2)
      t.slope = ls_slope(xs, ys);
    else
      t.vanished = true;
    return t;
  }

  void emit_field_csv(const std::string& prefix, double eps, const std::vector<SymMat2>& field) {
    std::string csv = "sample_index,x,y,z,m11,m12,m22\n";
    const auto& pts = samples()->points;
    for (std::size_t i = 0; i < pts.size(); ++i)
      csv += std::to_string(i) + "," + detail::csv_double(pts[i].v.x) + "," +
             detail::csv_double(pts[i].v.y) + "," + detail::csv_double(pts[i].v.z) + "," +
             detail::csv_double(field[i].a00) + "," + detail::csv_double(field[i].a01) + "," +
             detail::csv_double(field[i].a11) + "\n";
    std::ostringstream name;
    name << prefix << "_eps" << detail::csv_double(eps) << ".csv";
    csv_files_.push_back({name.str(), csv});
  }

  json run_pesin() {
    const PesinCache& cache = pesin_cache();
    int n = cache.n;
    json out = json::array();
    for (double eps : s_.epsilons) {
      json j;
      j["epsilon"] = eps;
      j["N"] = n;
      auto field = cache.sums->combine(eps, n);
      double spd = std::numeric_limits<double>::infinity();
      for (const auto& m : field) spd = std::min(spd, m.min_eigenvalue());
      j["spd_min_eigenvalue"] = spd;
      TailSummary tail = tail_from_shells(*cache.sums, eps, n);
      j["tail_increments"] = tail.increments;
      j["tail_slope"] = tail.slope;
      j["tail_vanished"] = tail.vanished;
      if (cache.lipschitz) {
        LipschitzReport lip = cache.lipschitz->check(eps);
        j["lipschitz"] = json{{"max_upper_violation", lip.max_upper_violation},
                              {"max_lower_violation", lip.max_lower_violation},
                              {"tau", lip.tau},
                              {"tau_bound", lip.tau_bound},
                              {"ratio_min", lip.ratio_min},
                              {"ratio_max", lip.ratio_max},
                              {"exact_ok", lip.exact_ok},
                              {"cauchy_ok", lip.cauchy_ok},
                              {"passed", lip.passed}};
      }
      out.push_back(j);
      emit_field_csv("pesin", eps, field);
    }
    return out;
  }

  json run_qc() {
    json j;
    json round = json::object();
    for (std::size_t i = 0; i < set_.table->size(); ++i) {
      Word g = set_.word({{static_cast<std::uint32_t>(i), +1}});
      round[s_.generator_names[i]] = qc_dilatation_round(g);
    }
    j["round"] = round;
    json fields = json::array();
    const PesinCache& cache = pesin_cache();
    for (double eps : s_.epsilons) {
      MetricField field;
      field.epsilon = eps;
      field.truncation = cache.n;
      field.samples = samples();
      field.m = cache.sums->combine(eps, cache.n);
      field.provenance = "averaged";
      double tau = 0;
      {
        auto next = cache.sums->combine(eps, cache.n + 1);
        for (std::size_t i = 0; i < field.m.size(); ++i)
          for (int d = 0; d < kLipschitzDirections; ++d) {
            double t = M_PI * d / kLipschitzDirections;
            double u = std::cos(t), v = std::sin(t);
            tau = std::max(tau, (next[i].quad(u, v) - field.m[i].quad(u, v)) / field.m[i].quad(u, v));
          }
      }
      double allowance = (1 + tau) * (1 + tau) * 1.02 - 1;  // tail plus interpolation margin
      json per = json::object();
      double bound = std::exp(2 * eps) * (1 + allowance);
      bool all_ok = true;
      for (std::size_t i = 0; i < set_.table->size(); ++i) {
        Word g = set_.word({{static_cast<std::uint32_t>(i), +1}});
        double k = qc_dilatation(g, field);
        per[s_.generator_names[i]] = k;
        if (k > bound) all_ok = false;
      }
      TailSummary tail = tail_from_shells(*cache.sums, eps, cache.n);
      fields.push_back(json{{"epsilon", eps},
                            {"N", cache.n},
                            {"max_dilatation_per_generator", per},
                            {"tail_slope", tail.slope},
                            {"tail_allowance", allowance},
                            {"bound", bound},
                            {"within_bound", all_ok}});
      emit_field_csv("qc", eps, field.m);
    }
    j["fields"] = fields;
    return j;
  }

  json run_recur() {
    TripleConfig triple = s_.recur.triple
                              ? TripleConfig((*s_.recur.triple)[0], (*s_.recur.triple)[1], (*s_.recur.triple)[2])
                              : TripleConfig::standard();
    const WordBall& ball = ball_of_radius(s_.recur.radius);
    if (ball.truncated()) throw ResourceCapError("recur: ball enumeration hit the element cap");
    RecurrencePair rp = pigeonhole_pair(ball, triple);
    json j;
    j["ball_size"] = ball.size();
    j["min_pair_distance"] = rp.triple_distance;
    j["pigeonhole_bound"] = rp.pigeonhole_bound;
    j["degenerate"] = rp.degenerate;
    j["g_word"] = detail::word_string(set_, rp.g);
    j["h_word"] = detail::word_string(set_, rp.h);
    j["f_word"] = detail::word_string(set_, rp.f);
    j["displacements"] = rp.displacement;

    // asymptotic scaling columns for reference, never enforced at desk scale
    int n = s_.recur.radius;
    double eps0 = s_.epsilons.front();
    j["ledger"] = json{{"radius", n},
                       {"two_pow_7n", std::pow(2.0, 7.0 * n)},
                       {"ball_reaches_2pow7n", static_cast<double>(ball.size()) >= std::pow(2.0, 7.0 * n)},
                       {"two_pow_minus_n", std::pow(2.0, -n)},
                       {"epsilon", eps0},
                       {"displacement_scale_2mn_eepsn", std::pow(2.0, -n) * std::exp(eps0 * n)}};

    auto order = element_order(rp.f, s_.recur.kmax);
    j["f_order"] = order ? json(*order) : json("infinite");
    int hull_k = order ? *order : s_.recur.kmax;
    OrbitHull hull = orbit_hull_diameter(rp.f, triple.x[0], hull_k);
    j["hull"] = json{{"order", hull.order},
                     {"diameter", hull.diameter},
                     {"bound", hull.bound},
                     {"ratio", hull.ratio}};

    json fps = json::array();
    for (int i = 0; i < 3; ++i) {
      double radius = std::max(4 * rp.displacement[i], 1e-3);
      FixedPointSearch res = find_fixed_point(rp.f, triple.x[i], radius);
      json rec;
      rec["seed_index"] = i;
      rec["search_radius"] = radius;
      rec["status"] = res.status == FixedPointSearch::Status::converged ? "converged" : "not_found";
      rec["best_residual"] = res.best_residual;
      rec["used_fallback"] = res.used_fallback;
      if (res.record) {
        FixedPointRecord r = *res.record;
        r.word = detail::word_string(set_, rp.f);
        rec["record"] = detail::fixed_point_json(r);
      }
      fps.push_back(rec);
    }
    j["fixed_points"] = fps;
    return j;
  }

  json run_order() {
    json j = json::object();
    for (std::size_t i = 0; i < set_.table->size(); ++i) {
      Word g = set_.word({{static_cast<std::uint32_t>(i), +1}});
      auto k = element_order(g, s_.order_kmax);
      j[s_.generator_names[i]] = k ? json(*k) : json("infinite");
    }
    return j;
  }

  json run_conjfamily() {
    const Rotation* r = nullptr;
    for (std::size_t i = 0; i < set_.table->size(); ++i) {
      const auto* rot = std::get_if<Rotation>(&(*set_.table)[i]);
      if (!rot) continue;
      if (s_.conjfamily.generator.empty() || s_.conjfamily.generator == s_.generator_names[i]) {
        r = rot;
        break;
      }
    }
    if (!r) throw ScenarioError("conjfamily: no rotation generator named '" + s_.conjfamily.generator + "'");
    auto rows = conjugated_rotation_family(*r, s_.conjfamily.strengths, s_.order_kmax);
    json j;
    json jr = json::array();
    bool k_monotone = true, d_monotone = true, order_constant = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      jr.push_back(json{{"strength", row.strength},
                        {"dilatation", row.dilatation},
                        {"c0_to_rotation", row.c0_to_rotation},
                        {"c0_to_identity", row.c0_to_identity},
                        {"order", row.order ? json(*row.order) : json("infinite")}});
      if (i) {
        if (rows[i].dilatation > rows[i - 1].dilatation * 1.05) k_monotone = false;
        if (rows[i].c0_to_rotation > rows[i - 1].c0_to_rotation * 1.05 + 1e-12) d_monotone = false;
        if (rows[i].order != rows[0].order) order_constant = false;
      }
    }
    j["rows"] = jr;
    j["dilatation_monotone"] = k_monotone;
    j["distance_monotone"] = d_monotone;
    j["order_constant"] = order_constant;
    return j;
  }

  Scenario s_;
  RunOptions opt_;
  GeneratorSet set_;
  std::map<int, WordBall> balls_;
  std::shared_ptr<const SampleSet> samples_;
  PesinCache pesin_;
  std::vector<std::pair<std::string, std::string>> csv_files_;
  bool cap_hit_ = false;
};

inline json run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  ScenarioRunner runner(s, opt);
  return runner.run();
}

/// Serializes a report deterministically (fixed key order, shortest
/// round-trip doubles, trailing newline).
inline std::string report_to_string(const json& report) { return report.dump(2) + "\n"; }

}  // namespace burnside
