// burnside-lab: scenario-driven experiments on finitely generated groups of
// sphere diffeomorphisms. See README.md for the scenario format.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "burnside/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using burnside::json;

struct GlobalArgs {
  std::string scenario_path;
  std::string out_dir;
  std::string format;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool timings = false;
};

int run(const GlobalArgs& args, const std::vector<std::string>& experiments,
        const std::function<void(burnside::Scenario&)>& tweak) {
  burnside::Scenario scenario = burnside::load_scenario(args.scenario_path);
  if (args.seed_set) scenario.seed = args.seed;
  if (!experiments.empty()) scenario.experiments = experiments;
  if (!args.format.empty()) scenario.output_format = args.format;
  if (tweak) tweak(scenario);

  burnside::RunOptions opt;
  opt.threads = args.threads;
  opt.timings = args.timings;
  opt.out_dir = args.out_dir;

  auto t0 = std::chrono::steady_clock::now();
  burnside::ScenarioRunner runner(scenario, opt);
  json report = runner.run();
  auto t1 = std::chrono::steady_clock::now();
  if (args.timings)
    report["wall_clock_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();

  std::string text = burnside::report_to_string(report);
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    std::ofstream out(fs::path(args.out_dir) / (scenario.name + ".report.json"), std::ios::binary);
    out << text;
    if (scenario.output_format == "csv") {
      for (const auto& [name, content] : runner.csv_files()) {
        std::ofstream csv(fs::path(args.out_dir) / (scenario.name + "." + name), std::ios::binary);
        csv << content;
      }
    }
  } else {
    if (scenario.output_format == "csv") {
      for (const auto& [name, content] : runner.csv_files())
        std::cout << "# " << name << "\n" << content;
    } else {
      std::cout << text;
    }
  }
  return report["resource_cap_hit"].get<bool>() ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments on groups of area-preserving sphere diffeomorphisms"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalArgs args;
  app.add_option("--scenario", args.scenario_path, "scenario file (JSON)")->required();
  app.add_option("--out", args.out_dir, "output directory (default: stdout)");
  app.add_option("--format", args.format, "override output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt = app.add_option("--seed", args.seed, "override the scenario seed");
  app.add_option("--threads", args.threads, "worker threads for sample loops")
      ->envname("BURNSIDE_LAB_THREADS");
  app.add_flag("--timings", args.timings, "include wall-clock in the report (breaks byte-stability)");

  std::string lyap_word, lyap_start;
  int lyap_steps = 0;
  int recur_radius = 0, recur_kmax = 0, order_kmax = 0;
  std::string recur_triple;

  auto* run_cmd = app.add_subcommand("run", "run every experiment listed in the scenario");
  auto* growth = app.add_subcommand("growth", "word-ball counts and growth exponent");
  auto* derivs = app.add_subcommand("derivs", "derivative growth over word length");
  auto* crgrowth = app.add_subcommand("crgrowth", "C^2-norm growth over word length");
  auto* lyapunov = app.add_subcommand("lyapunov", "fiber Lyapunov exponents along a symbolic word");
  lyapunov->add_option("--word", lyap_word, "periodic:all | periodic:<letter indices> | random");
  lyapunov->add_option("--steps", lyap_steps, "orbit length (>= 100)");
  lyapunov->add_option("--start", lyap_start, "start point x,y,z");
  auto* pesin = app.add_subcommand("pesin", "averaged metric, tail decay, Lipschitz check");
  auto* qc = app.add_subcommand("qc", "quasiconformal dilatations");
  auto* recur = app.add_subcommand("recur", "pigeonhole recurrence and fixed points");
  recur->add_option("--radius", recur_radius, "ball radius for the pigeonhole search");
  recur->add_option("--kmax", recur_kmax, "order detection cap");
  recur->add_option("--triple", recur_triple, "triple x1,y1,z1,x2,y2,z2,x3,y3,z3");
  auto* order = app.add_subcommand("order", "orders of the generators");
  order->add_option("--kmax", order_kmax, "order detection cap");
  auto* conjfamily = app.add_subcommand("conjfamily", "conjugated-rotation convergence table");

  CLI11_PARSE(app, argc, argv);
  args.seed_set = seed_opt->count() > 0;

  auto tweak = [&](burnside::Scenario& s) {
    if (!lyap_word.empty()) s.lyapunov.word = lyap_word;
    if (lyap_steps > 0) s.lyapunov.steps = lyap_steps;
    if (!lyap_start.empty()) {
      std::stringstream ss(lyap_start);
      std::string tok;
      std::vector<double> vals;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
      if (vals.size() != 3) throw burnside::ScenarioError("--start: expected x,y,z");
      s.lyapunov.start = {vals[0], vals[1], vals[2]};
    }
    if (recur_radius > 0) s.recur.radius = recur_radius;
    if (recur_kmax > 0) s.recur.kmax = recur_kmax;
    if (order_kmax > 0) s.order_kmax = order_kmax;
    if (!recur_triple.empty()) {
      std::stringstream ss(recur_triple);
      std::string tok;
      std::vector<double> vals;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
      if (vals.size() != 9) throw burnside::ScenarioError("--triple: expected 9 numbers");
      s.recur.triple = {{burnside::SpherePoint::project({vals[0], vals[1], vals[2]}),
                         burnside::SpherePoint::project({vals[3], vals[4], vals[5]}),
                         burnside::SpherePoint::project({vals[6], vals[7], vals[8]})}};
    }
  };

  try {
    std::vector<std::string> experiments;
    if (growth->parsed()) experiments = {"growth"};
    else if (derivs->parsed()) experiments = {"derivs"};
    else if (crgrowth->parsed()) experiments = {"crgrowth"};
    else if (lyapunov->parsed()) experiments = {"lyapunov"};
    else if (pesin->parsed()) experiments = {"pesin"};
    else if (qc->parsed()) experiments = {"qc"};
    else if (recur->parsed()) experiments = {"recur"};
    else if (order->parsed()) experiments = {"order"};
    else if (conjfamily->parsed()) experiments = {"conjfamily"};
    else if (!run_cmd->parsed()) return 1;
    return run(args, experiments, tweak);
  } catch (const burnside::ScenarioError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const burnside::ResourceCapError& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
