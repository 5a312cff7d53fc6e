#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphereot/bench.hpp"
#include "sphereot/common.hpp"
#include "sphereot/dssw.hpp"
#include "sphereot/flows.hpp"
#include "sphereot/io.hpp"
#include "sphereot/sphere.hpp"

namespace sphereot::cli {

using nlohmann::json;

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

// ---------------------------------------------------------------------------
// Shared energy/solver settings
// ---------------------------------------------------------------------------

struct EnergyConfig {
  std::string kind = "exp";
  int train_epochs = 50;
  double train_lr = 0.05;
  bool maximize = false;
  bool literal_final_weights = false;
  bool zero_init = false;
  int hidden = 64;
  int attention_width = 640;

  EnergySpec to_spec() const {
    EnergySpec s;
    s.kind = energy_kind_from_string(kind);
    s.train_epochs = train_epochs;
    s.train_lr = train_lr;
    s.maximize = maximize;
    s.literal_final_weights = literal_final_weights;
    s.zero_init = zero_init;
    s.hidden = hidden;
    s.attention_width = attention_width;
    return s;
  }
};

inline const std::vector<std::string>& energy_keys() {
  static const std::vector<std::string> keys = {
      "kind",      "train_epochs",          "train_lr",  "maximize",
      "literal_final_weights", "zero_init", "hidden",    "attention_width"};
  return keys;
}

inline void energy_from_json(const json& j, EnergyConfig& e) {
  if (j.contains("kind")) e.kind = j.at("kind").get<std::string>();
  if (j.contains("train_epochs")) e.train_epochs = j.at("train_epochs").get<int>();
  if (j.contains("train_lr")) e.train_lr = j.at("train_lr").get<double>();
  if (j.contains("maximize")) e.maximize = j.at("maximize").get<bool>();
  if (j.contains("literal_final_weights"))
    e.literal_final_weights = j.at("literal_final_weights").get<bool>();
  if (j.contains("zero_init")) e.zero_init = j.at("zero_init").get<bool>();
  if (j.contains("hidden")) e.hidden = j.at("hidden").get<int>();
  if (j.contains("attention_width"))
    e.attention_width = j.at("attention_width").get<int>();
}

inline void energy_to_json(json& j, const EnergyConfig& e) {
  j["kind"] = e.kind;
  j["train_epochs"] = e.train_epochs;
  j["train_lr"] = e.train_lr;
  j["maximize"] = e.maximize;
  j["literal_final_weights"] = e.literal_final_weights;
  j["zero_init"] = e.zero_init;
  j["hidden"] = e.hidden;
  j["attention_width"] = e.attention_width;
}

// ---------------------------------------------------------------------------
// distance
// ---------------------------------------------------------------------------

struct InputSpec {
  std::string file;             // CSV path; empty means synthetic
  std::string dist = "uniform"; // vmf | uniform
  int d = 3;
  int n = 500;
  double kappa = 10.0;
  std::vector<double> mean;  // vMF mean; defaults to the first axis
};

inline InputSpec input_from_json(const json& j) {
  check_keys(j, {"file", "dist", "d", "n", "kappa", "mean"}, "input");
  InputSpec in;
  if (j.contains("file")) in.file = j.at("file").get<std::string>();
  if (j.contains("dist")) in.dist = j.at("dist").get<std::string>();
  if (j.contains("d")) in.d = j.at("d").get<int>();
  if (j.contains("n")) in.n = j.at("n").get<int>();
  if (j.contains("kappa")) in.kappa = j.at("kappa").get<double>();
  if (j.contains("mean")) in.mean = j.at("mean").get<std::vector<double>>();
  if (in.file.empty() && in.dist != "vmf" && in.dist != "uniform")
    throw ConfigError("input dist must be vmf or uniform");
  return in;
}

inline json input_to_json(const InputSpec& in) {
  json j;
  j["file"] = in.file;
  j["dist"] = in.dist;
  j["d"] = in.d;
  j["n"] = in.n;
  j["kappa"] = in.kappa;
  j["mean"] = in.mean;
  return j;
}

inline Mat realize_input(const InputSpec& in, uint64_t seed) {
  if (!in.file.empty()) return load_samples_csv(in.file);
  Rng rng(seed);
  if (in.dist == "uniform") return sample_uniform_sphere(in.d, in.n, rng);
  UnitVector mu = in.mean.empty()
                      ? UnitVector::axis(in.d, 0)
                      : UnitVector(Eigen::Map<const Vec>(
                            in.mean.data(), static_cast<Eigen::Index>(in.mean.size())));
  if (mu.dim() != in.d) throw ConfigError("vMF mean dimension mismatch");
  return sample_vmf(VmfComponent(mu, in.kappa), in.n, rng);
}

struct DistanceConfig {
  std::string method = "dssw";  // sw | ssw | dssw
  EnergyConfig energy;
  int p = 2;
  int L = 200;
  std::string solver = "binary_search";
  uint64_t seed = 0;
  bool unit_prefactor = false;
  double solver_tol = 1e-8;
  int threads = 1;
  std::vector<InputSpec> inputs = {InputSpec{}, InputSpec{}};
  std::string net_in;   // parametric checkpoint to resume from
  std::string net_out;  // where to store the trained network
};

inline DistanceConfig distance_from_json(const json& j) {
  std::vector<std::string> keys = {"method", "p",        "L",       "solver",
                                   "seed",   "unit_prefactor",      "solver_tol",
                                   "threads", "inputs",  "net_in",  "net_out"};
  for (const auto& k : energy_keys()) keys.push_back(k);
  check_keys(j, keys, "distance config");
  DistanceConfig c;
  energy_from_json(j, c.energy);
  if (j.contains("method")) c.method = j.at("method").get<std::string>();
  if (j.contains("p")) c.p = j.at("p").get<int>();
  if (j.contains("L")) c.L = j.at("L").get<int>();
  if (j.contains("solver")) c.solver = j.at("solver").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("unit_prefactor")) c.unit_prefactor = j.at("unit_prefactor").get<bool>();
  if (j.contains("solver_tol")) c.solver_tol = j.at("solver_tol").get<double>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("net_in")) c.net_in = j.at("net_in").get<std::string>();
  if (j.contains("net_out")) c.net_out = j.at("net_out").get<std::string>();
  if (j.contains("inputs")) {
    const auto& arr = j.at("inputs");
    if (!arr.is_array() || arr.size() != 2)
      throw ConfigError("distance config needs exactly 2 inputs");
    c.inputs = {input_from_json(arr[0]), input_from_json(arr[1])};
  }
  return c;
}

inline json distance_to_json(const DistanceConfig& c) {
  json j;
  energy_to_json(j, c.energy);
  j["method"] = c.method;
  j["p"] = c.p;
  j["L"] = c.L;
  j["solver"] = c.solver;
  j["seed"] = c.seed;
  j["unit_prefactor"] = c.unit_prefactor;
  j["solver_tol"] = c.solver_tol;
  j["threads"] = c.threads;
  j["inputs"] = json::array({input_to_json(c.inputs[0]), input_to_json(c.inputs[1])});
  j["net_in"] = c.net_in;
  j["net_out"] = c.net_out;
  return j;
}

inline SlicedConfig to_sliced_config(const DistanceConfig& c) {
  SlicedConfig s;
  s.p = c.p;
  s.L = c.L;
  s.solver = solver_from_string(c.solver);
  s.energy = c.energy.to_spec();
  s.seed = c.seed;
  s.unit_prefactor = c.unit_prefactor;
  s.solver_tol = c.solver_tol;
  s.threads = c.threads;
  return s;
}

inline int cmd_distance(const DistanceConfig& c, std::ostream& out,
                        bool include_timing = false) {
  SlicedConfig cfg = to_sliced_config(c);
  Mat X = realize_input(c.inputs[0], derive_seed(c.seed, 0x101));

  std::optional<NetworkParams> warm;
  if (!c.net_in.empty()) {
    std::ifstream f(c.net_in);
    if (!f) throw ConfigError("cannot open network checkpoint: " + c.net_in);
    warm = network_from_json(json::parse(f));
  }

  DistanceReport rep;
  std::optional<NetworkParams> trained;
  if (cfg.solver == CircularSolver::VsUniform) {
    bool uniform_side = c.inputs[1].file.empty() && c.inputs[1].dist == "uniform";
    if (!uniform_side)
      throw ConfigError("vs_uniform solver requires the second input to be "
                        "the synthetic uniform distribution");
    if (c.method == "ssw") {
      rep = ssw_hat_uniform(X, cfg);
    } else if (c.method == "dssw") {
      rep = dssw_hat_uniform(X, cfg);
    } else {
      throw ConfigError("vs_uniform solver supports methods ssw and dssw");
    }
  } else {
    Mat Y = realize_input(c.inputs[1], derive_seed(c.seed, 0x102));
    if (c.method == "sw") {
      double v = sw_hat(X, Y, cfg);
      rep.value = v;
      rep.frames_seed = cfg.seed;
      rep.prefactor = 1.0 / static_cast<double>(cfg.L);
    } else if (c.method == "ssw") {
      rep = ssw_hat(X, Y, cfg);
    } else if (c.method == "dssw") {
      EstimateOutcome eo = dssw_hat_full(X, Y, cfg, warm ? &*warm : nullptr);
      rep = std::move(eo.report);
      trained = std::move(eo.net);
    } else {
      throw ConfigError("unknown method: " + c.method);
    }
  }

  if (!c.net_out.empty()) {
    if (!trained) throw ConfigError("net_out requires method dssw with a parametric kind");
    std::ofstream f(c.net_out);
    if (!f) throw ConfigError("cannot write network checkpoint: " + c.net_out);
    f << network_to_json(*trained).dump() << "\n";
  }

  out << report_to_json(rep, include_timing).dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

struct FlowCommandConfig {
  std::string preset;  // "", "mini", "full"
  std::string method = "dssw";
  EnergyConfig energy;
  int p = 2;
  int L = 1000;
  std::string solver = "binary_search";
  std::string optimizer = "adam";
  double learning_rate = 0.001;
  int steps = 500;
  std::string batch = "mini";  // mini | full
  int batch_size = 200;
  int eval_every = 25;
  int w2_eval_size = 500;
  int n_particles = 2400;
  int target_samples = 2400;
  double kappa = 50.0;
  uint64_t seed = 0;
  int threads = 1;
  bool resample_frames = true;
  bool unit_prefactor = false;
  double solver_tol = 1e-7;
};

inline void apply_flow_preset(FlowCommandConfig& c, const std::string& preset) {
  if (preset.empty()) return;
  if (preset != "mini" && preset != "full")
    throw ConfigError("unknown flow preset: " + preset);
  c.preset = preset;
  c.n_particles = 2400;
  c.target_samples = 2400;
  c.kappa = 50.0;
  c.L = 1000;
  c.steps = 500;
  c.optimizer = "adam";
  c.p = 2;
  c.solver = "binary_search";
  c.eval_every = 25;
  c.w2_eval_size = 500;
  if (preset == "mini") {
    c.batch = "mini";
    c.batch_size = 200;
    c.learning_rate = 0.001;
  } else {
    c.batch = "full";
    c.batch_size = 2400;
    c.learning_rate = 0.01;
  }
}

inline FlowCommandConfig flow_from_json(const json& j) {
  std::vector<std::string> keys = {
      "preset",     "method",        "p",          "L",           "solver",
      "optimizer",  "learning_rate", "steps",      "batch",       "batch_size",
      "eval_every", "w2_eval_size",  "n_particles", "target_samples",
      "kappa",      "seed",          "threads",    "resample_frames",
      "unit_prefactor", "solver_tol"};
  for (const auto& k : energy_keys()) keys.push_back(k);
  check_keys(j, keys, "flow config");
  FlowCommandConfig c;
  if (j.contains("preset")) apply_flow_preset(c, j.at("preset").get<std::string>());
  energy_from_json(j, c.energy);
  if (j.contains("method")) c.method = j.at("method").get<std::string>();
  if (j.contains("p")) c.p = j.at("p").get<int>();
  if (j.contains("L")) c.L = j.at("L").get<int>();
  if (j.contains("solver")) c.solver = j.at("solver").get<std::string>();
  if (j.contains("optimizer")) c.optimizer = j.at("optimizer").get<std::string>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("steps")) c.steps = j.at("steps").get<int>();
  if (j.contains("batch")) c.batch = j.at("batch").get<std::string>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("eval_every")) c.eval_every = j.at("eval_every").get<int>();
  if (j.contains("w2_eval_size")) c.w2_eval_size = j.at("w2_eval_size").get<int>();
  if (j.contains("n_particles")) c.n_particles = j.at("n_particles").get<int>();
  if (j.contains("target_samples"))
    c.target_samples = j.at("target_samples").get<int>();
  if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("resample_frames"))
    c.resample_frames = j.at("resample_frames").get<bool>();
  if (j.contains("unit_prefactor"))
    c.unit_prefactor = j.at("unit_prefactor").get<bool>();
  if (j.contains("solver_tol")) c.solver_tol = j.at("solver_tol").get<double>();
  return c;
}

inline json flow_to_json(const FlowCommandConfig& c) {
  json j;
  energy_to_json(j, c.energy);
  j["preset"] = c.preset;
  j["method"] = c.method;
  j["p"] = c.p;
  j["L"] = c.L;
  j["solver"] = c.solver;
  j["optimizer"] = c.optimizer;
  j["learning_rate"] = c.learning_rate;
  j["steps"] = c.steps;
  j["batch"] = c.batch;
  j["batch_size"] = c.batch_size;
  j["eval_every"] = c.eval_every;
  j["w2_eval_size"] = c.w2_eval_size;
  j["n_particles"] = c.n_particles;
  j["target_samples"] = c.target_samples;
  j["kappa"] = c.kappa;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["resample_frames"] = c.resample_frames;
  j["unit_prefactor"] = c.unit_prefactor;
  j["solver_tol"] = c.solver_tol;
  return j;
}

inline FlowConfig to_flow_config(const FlowCommandConfig& c) {
  FlowConfig fc;
  fc.distance.p = c.p;
  fc.distance.L = c.L;
  fc.distance.solver = solver_from_string(c.solver);
  fc.distance.energy = c.energy.to_spec();
  fc.distance.threads = c.threads;
  fc.distance.unit_prefactor = c.unit_prefactor;
  fc.distance.solver_tol = c.solver_tol;
  fc.method = method_from_string(c.method);
  fc.optimizer = optimizer_from_string(c.optimizer);
  fc.learning_rate = c.learning_rate;
  fc.steps = c.steps;
  if (c.batch == "mini")
    fc.batch_mode = BatchMode::Mini;
  else if (c.batch == "full")
    fc.batch_mode = BatchMode::Full;
  else
    throw ConfigError("batch must be mini or full");
  fc.batch_size = c.batch_size;
  fc.eval_every = c.eval_every;
  fc.w2_eval_size = c.w2_eval_size;
  fc.resample_frames = c.resample_frames;
  fc.master_seed = c.seed;
  return fc;
}

inline int cmd_flow(const FlowCommandConfig& c, const std::string& out_dir,
                    std::ostream& out, bool include_timing = false) {
  FlowConfig fc = to_flow_config(c);
  VmfMixture target_density = icosahedron_mixture(c.kappa);
  Rng trng(derive_seed(c.seed, 0x7a67));
  Mat target = sample_mixture(target_density, c.target_samples, trng);
  Rng irng(derive_seed(c.seed, 0x7a68));
  Mat initial = sample_uniform_sphere(3, c.n_particles, irng);

  FlowResult result = run_flow(std::move(initial), target, target_density, fc);

  std::filesystem::create_directories(out_dir);
  save_trajectory_csv(out_dir + "/trajectory.csv", result.snapshots);
  save_metrics_ndjson(out_dir + "/metrics.ndjson", result.metrics, include_timing);

  const MetricRow& last = result.metrics.back();
  char buf[160];
  std::snprintf(buf, sizeof buf, "final step=%d nll=%.6f log_w2=%.6f\n", last.step,
                last.nll, last.log_w2);
  out << buf;
  return 0;
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

struct EvolveConfig {
  std::string sweep = "kappa";  // kappa | L | theta | d
  std::vector<double> values;   // empty -> per-sweep defaults
  int seeds = 20;
  std::string method = "dssw";
  EnergyConfig energy;
  int p = 2;
  int L = 200;
  int n = 500;
  int d = 3;
  double kappa = 10.0;
  std::string solver = "binary_search";
  uint64_t seed = 0;
  int threads = 1;
};

inline EvolveConfig evolve_from_json(const json& j) {
  std::vector<std::string> keys = {"sweep", "values", "seeds",  "method", "p",
                                   "L",     "n",      "d",      "kappa",
                                   "solver", "seed",  "threads"};
  for (const auto& k : energy_keys()) keys.push_back(k);
  check_keys(j, keys, "evolve config");
  EvolveConfig c;
  energy_from_json(j, c.energy);
  if (j.contains("sweep")) c.sweep = j.at("sweep").get<std::string>();
  if (j.contains("values")) c.values = j.at("values").get<std::vector<double>>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<int>();
  if (j.contains("method")) c.method = j.at("method").get<std::string>();
  if (j.contains("p")) c.p = j.at("p").get<int>();
  if (j.contains("L")) c.L = j.at("L").get<int>();
  if (j.contains("n")) c.n = j.at("n").get<int>();
  if (j.contains("d")) c.d = j.at("d").get<int>();
  if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
  if (j.contains("solver")) c.solver = j.at("solver").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

inline json evolve_to_json(const EvolveConfig& c) {
  json j;
  energy_to_json(j, c.energy);
  j["sweep"] = c.sweep;
  j["values"] = c.values;
  j["seeds"] = c.seeds;
  j["method"] = c.method;
  j["p"] = c.p;
  j["L"] = c.L;
  j["n"] = c.n;
  j["d"] = c.d;
  j["kappa"] = c.kappa;
  j["solver"] = c.solver;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

struct EvolveRow {
  double value;
  double median;
  double dispersion;  // standard deviation over seeds
};

namespace detail_evolve {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double stddev_of(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace detail_evolve

inline std::vector<double> default_sweep_values(const std::string& sweep) {
  if (sweep == "kappa") return {1, 5, 10, 50, 100};
  if (sweep == "L") return {10, 100, 1000};
  if (sweep == "theta") {
    std::vector<double> v;
    for (int k = 0; k < 8; ++k) v.push_back(k * M_PI / 4.0);
    return v;
  }
  if (sweep == "d") return {3, 20, 100};
  throw ConfigError("unknown sweep: " + sweep);
}

/// One sweep of (value -> median, dispersion) over seeds. The L sweep keeps
/// the sample sets fixed and varies only the projection seed, so the
/// dispersion column isolates the Monte Carlo error of the estimator.
inline std::vector<EvolveRow> evolve_run(const EvolveConfig& c) {
  std::vector<double> values = c.values.empty() ? default_sweep_values(c.sweep) : c.values;
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (c.seeds < 1) throw ConfigError("seeds must be >= 1");
  SlicedMethod method = method_from_string(c.method);

  auto eval_distance = [&](const Mat& X, const Mat& Y, int L, uint64_t frame_seed) {
    SlicedConfig cfg;
    cfg.p = c.p;
    cfg.L = L;
    cfg.solver = solver_from_string(c.solver);
    cfg.energy = c.energy.to_spec();
    cfg.seed = frame_seed;
    cfg.threads = c.threads;
    switch (method) {
      case SlicedMethod::Sw: return sw_hat(X, Y, cfg);
      case SlicedMethod::Ssw: return ssw_hat(X, Y, cfg).value;
      case SlicedMethod::Dssw: return dssw_hat(X, Y, cfg).value;
    }
    throw ConfigError("unknown method");
  };

  std::vector<EvolveRow> rows;
  for (size_t vi = 0; vi < values.size(); ++vi) {
    double value = values[vi];
    std::vector<double> samples(c.seeds);
    for (int s = 0; s < c.seeds; ++s) {
      uint64_t base = derive_seed(c.seed, (vi << 20) + static_cast<uint64_t>(s));
      if (c.sweep == "kappa") {
        Rng rx(derive_seed(base, 1)), ry(derive_seed(base, 2));
        Mat X = sample_vmf(VmfComponent(UnitVector::axis(c.d, 0), value), c.n, rx);
        Mat Y = sample_uniform_sphere(c.d, c.n, ry);
        samples[s] = eval_distance(X, Y, c.L, derive_seed(base, 3));
      } else if (c.sweep == "L") {
        // fixed samples across seeds; the frame seed is the only variation
        Rng rx(derive_seed(c.seed, 0xf1)), ry(derive_seed(c.seed, 0xf2));
        Mat X = sample_vmf(VmfComponent(UnitVector::axis(c.d, 0), c.kappa), c.n, rx);
        Mat Y = sample_uniform_sphere(c.d, c.n, ry);
        samples[s] = eval_distance(X, Y, static_cast<int>(value), derive_seed(base, 3));
      } else if (c.sweep == "theta") {
        UnitVector mu = UnitVector::axis(c.d, 0);
        UnitVector w = orthogonal_direction(mu);
        Rng rx(derive_seed(base, 1)), ry(derive_seed(base, 2));
        Mat X = sample_vmf(VmfComponent(mu, c.kappa), c.n, rx);
        Mat Y0 = sample_vmf(VmfComponent(mu, c.kappa), c.n, ry);
        Mat Y = rotate_along_great_circle(Y0, mu, w, value);
        Y = normalize_rows(std::move(Y));
        samples[s] = eval_distance(X, Y, c.L, derive_seed(base, 3));
      } else if (c.sweep == "d") {
        int d = static_cast<int>(value);
        Rng rx(derive_seed(base, 1)), ry(derive_seed(base, 2));
        Mat X = sample_vmf(VmfComponent(UnitVector::axis(d, 0), c.kappa), c.n, rx);
        Mat Y = sample_uniform_sphere(d, c.n, ry);
        samples[s] = eval_distance(X, Y, c.L, derive_seed(base, 3));
      } else {
        throw ConfigError("unknown sweep: " + c.sweep);
      }
    }
    rows.push_back({value, detail_evolve::median_of(samples),
                    detail_evolve::stddev_of(samples)});
  }
  return rows;
}

inline std::string evolve_csv(const std::string& sweep,
                              const std::vector<EvolveRow>& rows) {
  std::ostringstream os;
  os << sweep << ",median,dispersion\n";
  char buf[120];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g,%.12g,%.12g\n", r.value, r.median,
                  r.dispersion);
    os << buf;
  }
  return os.str();
}

inline int cmd_evolve(const EvolveConfig& c, const std::string& out_dir,
                      std::ostream& out) {
  std::vector<EvolveRow> rows = evolve_run(c);
  std::string csv = evolve_csv(c.sweep, rows);
  std::filesystem::create_directories(out_dir);
  std::ofstream f(out_dir + "/evolve_" + c.sweep + ".csv");
  if (!f) throw ConfigError("cannot write evolve CSV");
  f << csv;
  out << csv;
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchCommandConfig {
  BenchGrid grid;
  uint64_t seed = 0;
  int threads = 1;
};

inline BenchCommandConfig bench_from_json(const json& j) {
  check_keys(j,
             {"methods", "ns", "Ls", "ds", "p", "repeats", "train_epochs",
              "train_lr", "input_kappa", "seed", "threads"},
             "bench config");
  BenchCommandConfig c;
  if (j.contains("methods"))
    c.grid.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("ns")) c.grid.ns = j.at("ns").get<std::vector<int>>();
  if (j.contains("Ls")) c.grid.Ls = j.at("Ls").get<std::vector<int>>();
  if (j.contains("ds")) c.grid.ds = j.at("ds").get<std::vector<int>>();
  if (j.contains("p")) c.grid.p = j.at("p").get<int>();
  if (j.contains("repeats")) c.grid.repeats = j.at("repeats").get<int>();
  if (j.contains("train_epochs"))
    c.grid.train_epochs = j.at("train_epochs").get<int>();
  if (j.contains("train_lr")) c.grid.train_lr = j.at("train_lr").get<double>();
  if (j.contains("input_kappa"))
    c.grid.input_kappa = j.at("input_kappa").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

inline json bench_to_json(const BenchCommandConfig& c) {
  json j;
  j["methods"] = c.grid.methods;
  j["ns"] = c.grid.ns;
  j["Ls"] = c.grid.Ls;
  j["ds"] = c.grid.ds;
  j["p"] = c.grid.p;
  j["repeats"] = c.grid.repeats;
  j["train_epochs"] = c.grid.train_epochs;
  j["train_lr"] = c.grid.train_lr;
  j["input_kappa"] = c.grid.input_kappa;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

inline int cmd_bench(const BenchCommandConfig& c, const std::string& out_dir,
                     std::ostream& out) {
  std::vector<BenchPoint> points = run_bench(c.grid, c.seed, c.threads);
  std::filesystem::create_directories(out_dir);
  std::ofstream f(out_dir + "/bench.csv");
  if (!f) throw ConfigError("cannot write bench CSV");
  f << bench_csv(points);
  for (const auto& pt : points) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s n=%d L=%d d=%d input_hash=%016llx median_s=%.6g\n",
                  pt.method.c_str(), pt.n, pt.L, pt.d,
                  static_cast<unsigned long long>(pt.input_hash), pt.median_s);
    out << buf;
  }
  return 0;
}

}  // namespace sphereot::cli
