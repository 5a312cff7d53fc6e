#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sphereot/common.hpp"
#include "sphereot/dssw.hpp"
#include "sphereot/sphere.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Wallclock scaling studies: vMF vs uniform inputs, warm-up excluded,
// median over repeats. RNG setup and input generation stay outside the
// timed region.
// ---------------------------------------------------------------------------

struct BenchPoint {
  std::string method;
  int p = 2;
  int L = 0;
  int n = 0;
  int d = 0;
  uint64_t seed = 0;
  int repeats = 0;
  double median_s = 0.0;
  double p10_s = 0.0;
  double p90_s = 0.0;
  double mean_s = 0.0;
  uint64_t input_hash = 0;
};

struct BenchGrid {
  std::vector<std::string> methods = {"ssw", "dssw-exp"};
  std::vector<int> ns = {500};
  std::vector<int> Ls = {200};
  std::vector<int> ds = {101};
  int p = 2;
  int repeats = 10;
  int train_epochs = 50;
  double train_lr = 0.05;
  double input_kappa = 10.0;

  void validate() const {
    if (repeats < 5) throw ConfigError("bench repeats must be >= 5");
    if (methods.empty() || ns.empty() || Ls.empty() || ds.empty())
      throw ConfigError("bench grid must be non-empty");
    for (int n : ns)
      if (n < 2) throw ConfigError("bench n must be >= 2");
  }
};

namespace detail {

inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline SlicedConfig bench_config(const std::string& method, const BenchGrid& grid,
                                 int L, uint64_t seed, int threads) {
  SlicedConfig cfg;
  cfg.p = grid.p;
  cfg.L = L;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.energy.train_epochs = grid.train_epochs;
  cfg.energy.train_lr = grid.train_lr;
  if (method.rfind("dssw-", 0) == 0)
    cfg.energy.kind = energy_kind_from_string(method.substr(5));
  if (method == "ssw-unif" || method == "dssw-unif-exp") {
    cfg.solver = CircularSolver::VsUniform;
    cfg.p = 2;
  } else if (cfg.p == 1) {
    cfg.solver = CircularSolver::LevelMedian;
  }
  return cfg;
}

}  // namespace detail

/// Evaluate one timed point. Methods: sw, ssw, ssw-unif, dssw-<kind>,
/// dssw-unif-exp.
inline BenchPoint bench_point(const std::string& method, int n, int L, int d,
                              const BenchGrid& grid, uint64_t seed, int threads) {
  // Inputs depend only on (n, d, seed) so every method at a grid point sees
  // the same bytes; the hash lets harnesses verify that.
  uint64_t input_seed = derive_seed(seed, fnv1a64(&n, sizeof n) ^ fnv1a64(&d, sizeof d));
  Rng rx(derive_seed(input_seed, 1));
  Rng ry(derive_seed(input_seed, 2));
  Mat X = sample_vmf(VmfComponent(UnitVector::axis(d, 0), grid.input_kappa), n, rx);
  Mat Y = sample_uniform_sphere(d, n, ry);

  BenchPoint pt;
  pt.method = method;
  pt.p = grid.p;
  pt.L = L;
  pt.n = n;
  pt.d = d;
  pt.seed = seed;
  pt.repeats = grid.repeats;
  pt.input_hash = hash_matrix(Y, hash_matrix(X));

  auto run_once = [&](uint64_t rep_seed) {
    SlicedConfig cfg = detail::bench_config(method, grid, L, rep_seed, threads);
    if (method == "sw") {
      sw_hat(X, Y, cfg);
    } else if (method == "ssw") {
      ssw_hat(X, Y, cfg);
    } else if (method == "ssw-unif") {
      ssw_hat_uniform(X, cfg);
    } else if (method == "dssw-unif-exp") {
      dssw_hat_uniform(X, cfg);
    } else if (method.rfind("dssw-", 0) == 0) {
      dssw_hat(X, Y, cfg);
    } else {
      throw ConfigError("unknown bench method: " + method);
    }
  };

  run_once(derive_seed(seed, 0xbe7c0));  // warm-up, untimed
  std::vector<double> times(grid.repeats);
  for (int r = 0; r < grid.repeats; ++r) {
    detail::Stopwatch timer;
    run_once(derive_seed(seed, 0xbe7c1 + static_cast<uint64_t>(r)));
    times[r] = timer.seconds();
  }
  pt.median_s = detail::percentile(times, 0.5);
  pt.p10_s = detail::percentile(times, 0.1);
  pt.p90_s = detail::percentile(times, 0.9);
  pt.mean_s = Eigen::Map<Vec>(times.data(), grid.repeats).mean();
  return pt;
}

inline std::vector<BenchPoint> run_bench(const BenchGrid& grid, uint64_t seed,
                                         int threads = 1) {
  grid.validate();
  std::vector<BenchPoint> out;
  for (int d : grid.ds)
    for (int n : grid.ns)
      for (int L : grid.Ls)
        for (const std::string& method : grid.methods)
          out.push_back(bench_point(method, n, L, d, grid, seed, threads));
  return out;
}

inline std::string bench_csv(const std::vector<BenchPoint>& points) {
  std::ostringstream os;
  os << "method,p,L,n,d,seed,median_s,p10_s,p90_s\n";
  char buf[340];
  for (const auto& pt : points) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%llu,%.9g,%.9g,%.9g\n",
                  pt.method.c_str(), pt.p, pt.L, pt.n, pt.d,
                  static_cast<unsigned long long>(pt.seed), pt.median_s, pt.p10_s,
                  pt.p90_s);
    os << buf;
  }
  return os.str();
}

}  // namespace sphereot
