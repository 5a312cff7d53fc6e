#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "sphereot/common.hpp"
#include "sphereot/dssw.hpp"
#include "sphereot/sphere.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Exact small-n spherical W2 (assignment on squared geodesic costs)
// ---------------------------------------------------------------------------

namespace detail {

// Jonker-Volgenant style shortest augmenting path; returns the column
// assigned to each row.
inline std::vector<int> solve_assignment(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> rowsol(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) rowsol[p[j] - 1] = j - 1;
  return rowsol;
}

}  // namespace detail

/// Exact 2-Wasserstein between equal-count empirical measures on the sphere
/// with squared geodesic cost: sqrt of the minimum-assignment mean of
/// arccos^2 <x_i, y_j>.
inline double exact_sphere_w2(const Mat& X, const Mat& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols())
    throw SizeMismatch("exact_sphere_w2 needs equal-size point sets");
  const int n = static_cast<int>(X.rows());
  if (n < 1) throw EmptyMeasure("empty point set");
  if (n > 4096) throw TooLarge("assignment solver limited to n <= 4096");
  // Angle from the chord length: exact zero for identical points and
  // accurate near zero, unlike acos of a dot product.
  Mat cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double chord = (X.row(i) - Y.row(j)).norm();
      double a = 2.0 * std::asin(std::min(1.0, 0.5 * chord));
      cost(i, j) = a * a;
    }
  std::vector<int> rowsol = detail::solve_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, rowsol[i]);
  return std::sqrt(total / n);
}

/// Negative log-likelihood of a particle set under a vMF mixture
/// (sum over particles, not mean).
inline double nll(const Mat& particles, const VmfMixture& target) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < particles.rows(); ++i)
    acc -= mixture_log_density(target, Vec(particles.row(i)));
  return acc;
}

// ---------------------------------------------------------------------------
// Geodesic Langevin step
// ---------------------------------------------------------------------------

/// One Langevin step per particle: tangent-projected drift of the potential
/// gradient plus isotropic Gaussian noise, then renormalization:
/// x' = normalize(x - gamma (g - <g,x>x) + sqrt(2 gamma) Z).
inline Mat gla_step(const Mat& particles,
                    const std::function<Vec(const Vec&)>& potential_gradient,
                    double gamma, Rng& rng) {
  if (!(gamma > 0.0)) throw ConfigError("gla_step needs gamma > 0");
  const int n = static_cast<int>(particles.rows());
  const int d = static_cast<int>(particles.cols());
  const double noise_scale = std::sqrt(2.0 * gamma);
  Mat out(n, d);
  Vec z(d);
  for (int i = 0; i < n; ++i) {
    Vec x = particles.row(i);
    Vec g = potential_gradient(x);
    if (!g.allFinite()) throw NonFinitePotential("non-finite potential gradient");
    Vec drift = g - g.dot(x) * x;
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    Vec next = x - gamma * drift + noise_scale * z;
    double norm = next.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NonFiniteUpdate("langevin step produced a zero or non-finite point");
    out.row(i) = next.transpose() / norm;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Particle gradient flows
// ---------------------------------------------------------------------------

enum class OptimizerKind { Pgd, Adam };

inline std::string to_string(OptimizerKind o) {
  return o == OptimizerKind::Pgd ? "pgd" : "adam";
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "pgd") return OptimizerKind::Pgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer: " + s);
}

enum class BatchMode { Full, Mini };

struct FlowConfig {
  SlicedConfig distance;
  SlicedMethod method = SlicedMethod::Dssw;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;  // gamma
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  // sliced-distance gradients per coordinate sit around 1e-9; the usual
  // 1e-8 epsilon would swallow the update
  double adam_eps = 1e-12;
  int steps = 500;
  BatchMode batch_mode = BatchMode::Mini;
  int batch_size = 200;
  int eval_every = 25;
  int w2_eval_size = 500;  // 0 = full particle set
  bool resample_frames = true;
  uint64_t master_seed = 0;

  void validate() const {
    distance.validate();
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (batch_mode == BatchMode::Mini && batch_size < 1)
      throw ConfigError("batch_size must be >= 1");
    if (w2_eval_size < 0) throw ConfigError("w2_eval_size must be >= 0");
  }
};

struct FlowState {
  Mat particles;
  int step = 0;
  Mat m1, m2;  // Adam moments
  long adam_t = 0;

  static FlowState init(Mat particles0) {
    FlowState st;
    st.m1 = Mat::Zero(particles0.rows(), particles0.cols());
    st.m2 = Mat::Zero(particles0.rows(), particles0.cols());
    st.particles = std::move(particles0);
    return st;
  }
};

/// One optimizer step against a target batch: sliced-distance gradient,
/// ambient update, renormalization.
inline FlowState flow_step(FlowState state, const Mat& target_batch,
                           const FlowConfig& cfg, uint64_t frames_seed) {
  cfg.validate();
  if (target_batch.rows() < 1) throw EmptyMeasure("empty target batch");
  SlicedConfig dcfg = cfg.distance;
  dcfg.seed = frames_seed;
  GradientResult gr =
      sliced_gradient(state.particles, target_batch, dcfg, cfg.method);

  Mat update;
  if (cfg.optimizer == OptimizerKind::Pgd) {
    update = cfg.learning_rate * gr.grad;
  } else {
    state.adam_t += 1;
    state.m1 = cfg.adam_beta1 * state.m1 + (1.0 - cfg.adam_beta1) * gr.grad;
    state.m2 = cfg.adam_beta2 * state.m2 +
               (1.0 - cfg.adam_beta2) * gr.grad.cwiseProduct(gr.grad);
    double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.adam_t));
    double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.adam_t));
    Mat mhat = state.m1 / c1;
    Mat vhat = state.m2 / c2;
    Mat denom = (vhat.cwiseSqrt().array() + cfg.adam_eps).matrix();
    update = cfg.learning_rate * mhat.cwiseQuotient(denom);
  }
  if (!update.allFinite()) throw NonFiniteUpdate("non-finite optimizer update");
  // a zero update is the exact identity; skip the renormalization so it
  // cannot perturb the last bits
  if (update.cwiseAbs().maxCoeff() != 0.0) {
    state.particles -= update;
    state.particles = normalize_rows(std::move(state.particles));
  }
  state.step += 1;
  return state;
}

struct MetricRow {
  int step;
  double nll;
  double log_w2;
  double wallclock;
};

struct FlowResult {
  FlowState final_state;
  std::vector<MetricRow> metrics;
  std::vector<std::pair<int, Mat>> snapshots;  // (step, particles)
};

namespace detail {

/// k rows chosen without replacement, deterministic in the seed.
inline Mat subsample_rows(const Mat& src, int k, uint64_t seed) {
  const int n = static_cast<int>(src.rows());
  if (k >= n) return src;
  Rng rng(seed);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n - i));
    std::swap(idx[i], idx[j]);
  }
  Mat out(k, src.cols());
  for (int i = 0; i < k; ++i) out.row(i) = src.row(idx[i]);
  return out;
}

}  // namespace detail

/// Run a particle flow toward a fixed target sample set. Metrics (NLL over
/// the evaluation batch, log of the exact W2 between equal-size subsamples
/// of the particles and of the target set) are recorded at step 0, every
/// eval_every steps, and at the final step. Deterministic in the master
/// seed.
inline FlowResult run_flow(Mat initial, const Mat& target_samples,
                           const VmfMixture& target_density, const FlowConfig& cfg) {
  cfg.validate();
  if (target_samples.rows() < 1) throw EmptyMeasure("empty target sample set");
  if (cfg.batch_mode == BatchMode::Mini &&
      cfg.batch_size > static_cast<int>(target_samples.rows()))
    throw ConfigError("batch_size exceeds target sample count");

  detail::Stopwatch timer;
  FlowResult result;
  FlowState st = FlowState::init(std::move(initial));
  const int n = static_cast<int>(st.particles.rows());
  const int eval_batch = std::min(
      cfg.batch_mode == BatchMode::Mini ? cfg.batch_size : n, n);

  auto evaluate = [&](int step) {
    double nll_value = nll(st.particles.topRows(eval_batch), target_density);
    int k = cfg.w2_eval_size == 0
                ? std::min(n, static_cast<int>(target_samples.rows()))
                : std::min({cfg.w2_eval_size, n,
                            static_cast<int>(target_samples.rows())});
    Mat sub = detail::subsample_rows(
        st.particles, k, derive_seed(cfg.master_seed, 0xe5a1000ULL + step));
    Mat tgt = detail::subsample_rows(
        target_samples, k, derive_seed(cfg.master_seed, 0xe5a2000ULL + step));
    double w2 = exact_sphere_w2(sub, tgt);
    result.metrics.push_back({step, nll_value, std::log(w2), timer.seconds()});
    result.snapshots.emplace_back(step, st.particles);
  };

  evaluate(0);
  for (int k = 1; k <= cfg.steps; ++k) {
    Mat batch = cfg.batch_mode == BatchMode::Mini
                    ? detail::subsample_rows(target_samples, cfg.batch_size,
                                             derive_seed(cfg.master_seed,
                                                         0xba7c000ULL + k))
                    : target_samples;
    uint64_t frames_seed = cfg.resample_frames
                               ? derive_seed(cfg.master_seed, 0xf4a3000ULL + k)
                               : derive_seed(cfg.master_seed, 0xf4a3000ULL);
    st = flow_step(std::move(st), batch, cfg, frames_seed);
    if (k % cfg.eval_every == 0 || k == cfg.steps) evaluate(k);
  }
  result.final_state = std::move(st);
  return result;
}

}  // namespace sphereot
