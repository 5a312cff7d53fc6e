// sphereot: spherical sliced optimal transport toolkit.
// Subcommands: distance, flow, evolve, bench. Exit codes: 0 success,
// 2 configuration error, 3 numerical error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphereot/cli.hpp"

namespace {

using nlohmann::json;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw sphereot::ConfigError("cannot open config file: " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw sphereot::ConfigError(std::string("bad config JSON: ") + e.what());
  }
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> method;
  std::optional<std::string> kind;
  std::optional<int> p;
  std::optional<int> L;
  bool timing = false;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config_path, "JSON config file");
  app->add_option("--seed", flags.seed, "master seed");
  app->add_option("--out", flags.out_dir, "output directory");
  app->add_option("--threads", flags.threads, "worker threads (default 1)");
  app->add_option("--method", flags.method, "sw | ssw | dssw");
  app->add_option("--kind", flags.kind,
                  "exp | identity | poly | linear | nonlinear | attention");
  app->add_option("--p", flags.p, "order of the distance (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  app->add_option("--L", flags.L, "number of projection directions");
  app->add_flag("--timing", flags.timing, "emit real wallclock fields");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherical sliced optimal transport toolkit"};
  app.require_subcommand(1);

  CommonFlags dist_flags, flow_flags, evolve_flags, bench_flags;
  std::string evolve_sweep;
  std::string flow_preset;

  CLI::App* dist = app.add_subcommand("distance", "evaluate a sliced distance");
  add_common(dist, dist_flags);
  CLI::App* flow = app.add_subcommand("flow", "run a particle gradient flow");
  add_common(flow, flow_flags);
  flow->add_option("--preset", flow_preset, "mini | full");
  CLI::App* evolve = app.add_subcommand("evolve", "sweep a parameter");
  add_common(evolve, evolve_flags);
  evolve->add_option("--sweep", evolve_sweep, "kappa | L | theta | d");
  CLI::App* bench = app.add_subcommand("bench", "runtime benchmarks");
  add_common(bench, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (dist->parsed()) {
      json j = load_config(dist_flags.config_path);
      if (dist_flags.seed) j["seed"] = *dist_flags.seed;
      if (dist_flags.threads) j["threads"] = *dist_flags.threads;
      if (dist_flags.method) j["method"] = *dist_flags.method;
      if (dist_flags.kind) j["kind"] = *dist_flags.kind;
      if (dist_flags.p) j["p"] = *dist_flags.p;
      if (dist_flags.L) j["L"] = *dist_flags.L;
      auto cfg = sphereot::cli::distance_from_json(j);
      return sphereot::cli::cmd_distance(cfg, std::cout, dist_flags.timing);
    }
    if (flow->parsed()) {
      json j = load_config(flow_flags.config_path);
      if (!flow_preset.empty()) j["preset"] = flow_preset;
      if (flow_flags.seed) j["seed"] = *flow_flags.seed;
      if (flow_flags.threads) j["threads"] = *flow_flags.threads;
      if (flow_flags.method) j["method"] = *flow_flags.method;
      if (flow_flags.kind) j["kind"] = *flow_flags.kind;
      if (flow_flags.p) j["p"] = *flow_flags.p;
      if (flow_flags.L) j["L"] = *flow_flags.L;
      auto cfg = sphereot::cli::flow_from_json(j);
      return sphereot::cli::cmd_flow(cfg, flow_flags.out_dir, std::cout,
                                     flow_flags.timing);
    }
    if (evolve->parsed()) {
      json j = load_config(evolve_flags.config_path);
      if (!evolve_sweep.empty()) j["sweep"] = evolve_sweep;
      if (evolve_flags.seed) j["seed"] = *evolve_flags.seed;
      if (evolve_flags.threads) j["threads"] = *evolve_flags.threads;
      if (evolve_flags.method) j["method"] = *evolve_flags.method;
      if (evolve_flags.kind) j["kind"] = *evolve_flags.kind;
      if (evolve_flags.p) j["p"] = *evolve_flags.p;
      if (evolve_flags.L) j["L"] = *evolve_flags.L;
      auto cfg = sphereot::cli::evolve_from_json(j);
      return sphereot::cli::cmd_evolve(cfg, evolve_flags.out_dir, std::cout);
    }
    if (bench->parsed()) {
      json j = load_config(bench_flags.config_path);
      if (bench_flags.seed) j["seed"] = *bench_flags.seed;
      if (bench_flags.threads) j["threads"] = *bench_flags.threads;
      if (bench_flags.p) j["p"] = *bench_flags.p;
      auto cfg = sphereot::cli::bench_from_json(j);
      return sphereot::cli::cmd_bench(cfg, bench_flags.out_dir, std::cout);
    }
  } catch (const sphereot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sphereot::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
