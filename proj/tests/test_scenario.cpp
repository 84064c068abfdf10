#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "burnside/scenario.hpp"

using namespace burnside;

namespace {

std::string scenario_path(const std::string& name) {
  return std::string(BURNSIDE_SCENARIO_DIR) + "/" + name;
}

// Validates a document against the subset of JSON Schema the report schema
// uses: type, required, properties, items, enum.
void validate_against(const json& schema, const json& doc, const std::string& path,
                      std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    std::string type = schema["type"].get<std::string>();
    bool ok = (type == "object" && doc.is_object()) || (type == "array" && doc.is_array()) ||
              (type == "string" && doc.is_string()) || (type == "boolean" && doc.is_boolean()) ||
              (type == "number" && doc.is_number()) || (type == "integer" && doc.is_number_integer());
    if (!ok) {
      errors.push_back(path + ": expected " + type);
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema["enum"])
      if (v == doc) ok = true;
    if (!ok) errors.push_back(path + ": value not in enum");
  }
  if (schema.contains("required") && doc.is_object())
    for (const auto& k : schema["required"])
      if (!doc.contains(k.get<std::string>()))
        errors.push_back(path + ": missing required key " + k.get<std::string>());
  if (schema.contains("properties") && doc.is_object())
    for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
      if (doc.contains(it.key()))
        validate_against(it.value(), doc[it.key()], path + "/" + it.key(), errors);
  if (schema.contains("items") && doc.is_array())
    for (std::size_t i = 0; i < doc.size(); ++i)
      validate_against(schema["items"], doc[i], path + "[" + std::to_string(i) + "]", errors);
}

std::vector<std::string> validate_report(const json& report) {
  std::ifstream in(BURNSIDE_SCHEMA_PATH);
  REQUIRE(in.good());
  json schema = json::parse(in);
  std::vector<std::string> errors;
  validate_against(schema, report, "", errors);
  return errors;
}

}  // namespace

TEST_CASE("minimal scenario parses") {
  Scenario s = parse_scenario(R"({
    "name": "mini",
    "generators": [{"name": "r", "kind": "rotation", "axis": [0,0,1], "angle": 0.8}],
    "experiments": ["growth"]
  })");
  CHECK(s.name == "mini");
  CHECK(s.generator_names == std::vector<std::string>{"r"});
  CHECK(s.experiments == std::vector<std::string>{"growth"});
  CHECK(s.seed == 0);
}

TEST_CASE("validation errors carry the offending field") {
  SECTION("duplicate generator name") {
    try {
      parse_scenario(R"({"name":"x","generators":[
        {"name":"g","kind":"rotation","axis":[0,0,1],"angle":1},
        {"name":"g","kind":"twist","axis":[0,0,1],"strength":1}]})");
      FAIL("expected error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("duplicate generator name 'g'") != std::string::npos);
    }
  }
  SECTION("negative epsilon") {
    try {
      parse_scenario(R"({"name":"x","generators":[
        {"name":"g","kind":"rotation","axis":[0,0,1],"angle":1}],"epsilon":-1})");
      FAIL("expected error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("epsilon must be positive") != std::string::npos);
    }
  }
  SECTION("unknown key is named") {
    try {
      parse_scenario(R"({"name":"x","generators":[
        {"name":"g","kind":"rotation","axis":[0,0,1],"angle":1}],"blorp":3})");
      FAIL("expected error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("blorp") != std::string::npos);
    }
  }
  SECTION("parse errors carry line and column") {
    try {
      parse_scenario("{\n  \"name\": oops\n}");
      FAIL("expected error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SECTION("unknown experiment") {
    CHECK_THROWS_AS(parse_scenario(R"({"name":"x","generators":[
      {"name":"g","kind":"rotation","axis":[0,0,1],"angle":1}],"experiments":["wat"]})"),
                    ScenarioError);
  }
}

TEST_CASE("so3 baseline smoke run") {
  Scenario s = load_scenario(scenario_path("so3-baseline.json"));
  s.experiments = {"growth", "derivs", "qc", "order"};
  s.samples = 400;
  RunOptions opt;
  json report = run_scenario(s, opt);
  const json& res = report["results"];

  CHECK(res["growth"]["classification"] == "finite");
  // the tetrahedral rotation group has twelve elements
  CHECK(res["growth"]["counts"].back() == 12);
  CHECK(res["derivs"]["exponent"].get<double>() < 1e-9);
  for (auto it = res["qc"]["round"].begin(); it != res["qc"]["round"].end(); ++it)
    CHECK(std::fabs(it.value().get<double>() - 1.0) < 1e-6);
  CHECK(res["order"]["r3d"] == 3);
  CHECK(res["order"]["r2z"] == 2);

  auto errors = validate_report(report);
  for (const auto& e : errors) INFO(e);
  CHECK(errors.empty());
}

TEST_CASE("linked twists smoke run finds the hyperbolic point") {
  Scenario s = load_scenario(scenario_path("linked-twists.json"));
  s.experiments = {"lyapunov", "recur"};
  s.samples = 400;
  s.recur.radius = 4;
  json report = run_scenario(s, {});
  const json& lyap = report["results"]["lyapunov"];
  REQUIRE(lyap.contains("periodic_point"));
  CHECK(lyap["periodic_point"]["classification"] == "hyperbolic");
  double expect = std::log(3 + 2 * std::sqrt(2.0)) / 2;
  CHECK(std::fabs(lyap["lambda1"].get<double>() - expect) < 0.02 * expect);
  CHECK(std::fabs(lyap["lambda1"].get<double>() + lyap["lambda2"].get<double>()) < 1e-8);

  auto errors = validate_report(report);
  for (const auto& e : errors) INFO(e);
  CHECK(errors.empty());
}

TEST_CASE("shipped scenarios parse and echo canonically") {
  for (const char* name : {"so3-baseline.json", "cyclic4.json", "commuting-twists.json",
                           "free-rotations.json", "linked-twists.json"}) {
    Scenario s = load_scenario(scenario_path(name));
    CHECK(!s.experiments.empty());
    CHECK(!s.epsilons.empty());
  }
}

TEST_CASE("every shipped scenario emits a schema-valid report with documented CSV headers") {
  for (const char* name : {"so3-baseline.json", "cyclic4.json", "commuting-twists.json",
                           "free-rotations.json", "linked-twists.json"}) {
    Scenario s = load_scenario(scenario_path(name));
    // trimmed knobs keep this a smoke pass; the acceptance runner uses the
    // shipped values
    s.samples = 200;
    s.max_radius = std::min(s.max_radius, 12);
    s.pesin_radius = std::min(s.effective_pesin_radius(), 5);
    s.derivs_radius = std::min(s.effective_derivs_radius(), 6);
    s.crgrowth_radius = std::min(s.effective_crgrowth_radius(), 6);
    s.recur.radius = std::min(s.recur.radius, 4);
    s.lyapunov.steps = std::min(s.lyapunov.steps, 300);
    ScenarioRunner runner(s, {});
    json report = runner.run();
    INFO(name);
    for (const auto& [exp, block] : report["results"].items()) {
      INFO(exp << ": " << block.dump());
      CHECK(!block.contains("error"));
    }
    auto errors = validate_report(report);
    for (const auto& e : errors) INFO(e);
    CHECK(errors.empty());
    for (const auto& [fname, content] : runner.csv_files()) {
      INFO(fname);
      bool growth_like = fname.rfind("growth", 0) == 0 || fname.rfind("derivs", 0) == 0;
      if (growth_like)
        CHECK(content.rfind("radius,count,log_count,max_log_Dnorm\n", 0) == 0);
      else
        CHECK(content.rfind("sample_index,x,y,z,m11,m12,m22\n", 0) == 0);
    }
  }
}

TEST_CASE("determinism: repeated runs are byte identical") {
  Scenario s = load_scenario(scenario_path("cyclic4.json"));
  s.experiments = {"growth", "pesin", "qc", "order"};
  s.samples = 300;
  std::string a = report_to_string(run_scenario(s, {}));
  std::string b = report_to_string(run_scenario(s, {}));
  CHECK(a == b);

  RunOptions threaded;
  threaded.threads = 4;
  std::string c = report_to_string(run_scenario(s, threaded));
  CHECK(a == c);
}

TEST_CASE("per-experiment failures do not abort the run") {
  Scenario s = parse_scenario(R"({
    "name": "failing",
    "generators": [{"name": "t", "kind": "twist", "axis": [0,0,1], "strength": 1.0}],
    "symmetric": false,
    "experiments": ["growth", "pesin"],
    "max_radius": 4,
    "samples": 100,
    "pesin_radius": 2
  })");
  json report = run_scenario(s, {});
  // growth ran; the asymmetric pesin Lipschitz step cannot, but pesin still
  // reports its field blocks
  CHECK(report["results"].contains("growth"));
  CHECK(report["results"].contains("pesin"));
}

namespace {

int run_cli(const std::string& args, std::string* output = nullptr) {
  std::string cmd = std::string(BURNSIDE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
  int status = pclose(pipe);
  if (output) *output = out;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("cli exit codes and output formats") {
  SECTION("successful run exits zero") {
    std::string out;
    int rc = run_cli("order --scenario " + scenario_path("cyclic4.json"), &out);
    CHECK(rc == 0);
    CHECK(json::parse(out)["results"]["order"]["r4"] == 4);
  }
  SECTION("validation error exits two") {
    CHECK(run_cli("run --scenario /nonexistent.json") == 2);
  }
  SECTION("csv format emits the documented headers") {
    std::string out;
    int rc = run_cli("growth --scenario " + scenario_path("cyclic4.json") + " --format csv", &out);
    CHECK(rc == 0);
    CHECK(out.find("radius,count,log_count,max_log_Dnorm") != std::string::npos);
  }
  SECTION("threads env variable is accepted") {
    std::string out;
    std::string cmd = "BURNSIDE_LAB_THREADS=3 " + std::string(BURNSIDE_CLI_PATH) + " order --scenario " +
                      scenario_path("cyclic4.json") + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
    CHECK(WEXITSTATUS(pclose(pipe)) == 0);
    CHECK(json::parse(out)["results"]["order"]["r4"] == 4);
  }
}

TEST_CASE("resource cap is flagged") {
  Scenario s = parse_scenario(R"({
    "name": "capped",
    "generators": [
      {"name": "ra", "kind": "rotation", "axis": [1,0,0], "angle": 1.2309594173407747},
      {"name": "rb", "kind": "rotation", "axis": [0,0,1], "angle": 1.2309594173407747}
    ],
    "experiments": ["growth"],
    "max_radius": 8,
    "element_cap": 200
  })");
  json report = run_scenario(s, {});
  CHECK(report["resource_cap_hit"].get<bool>());
  CHECK(report["results"]["growth"]["truncated"].get<bool>());
}
