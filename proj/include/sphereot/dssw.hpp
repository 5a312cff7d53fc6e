#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "sphereot/circular.hpp"
#include "sphereot/common.hpp"
#include "sphereot/sphere.hpp"
#include "sphereot/stiefel.hpp"
#include "sphereot/weighting.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class CircularSolver { LevelMedian, BinarySearch, VsUniform };

inline std::string to_string(CircularSolver s) {
  switch (s) {
    case CircularSolver::LevelMedian: return "level_median";
    case CircularSolver::BinarySearch: return "binary_search";
    case CircularSolver::VsUniform: return "vs_uniform";
  }
  throw ConfigError("unknown solver");
}

inline CircularSolver solver_from_string(const std::string& s) {
  if (s == "level_median") return CircularSolver::LevelMedian;
  if (s == "binary_search") return CircularSolver::BinarySearch;
  if (s == "vs_uniform") return CircularSolver::VsUniform;
  throw ConfigError("unknown solver: " + s);
}

struct SlicedConfig {
  int p = 2;
  int L = 100;
  CircularSolver solver = CircularSolver::BinarySearch;
  EnergySpec energy;
  uint64_t seed = 0;
  bool unit_prefactor = false;  // drop the 1/L estimator prefactor
  double solver_tol = 1e-8;
  double projection_eps = 1e-12;
  int threads = 1;

  void validate() const {
    if (p != 1 && p != 2) throw ConfigError("order p must be 1 or 2");
    if (L < 1) throw ConfigError("projection count L must be >= 1");
    if (solver == CircularSolver::LevelMedian && p != 1)
      throw ConfigError("level_median solver requires p = 1");
    if (solver == CircularSolver::VsUniform && p != 2)
      throw ConfigError("vs_uniform solver requires p = 2");
    if (!(solver_tol > 0.0)) throw ConfigError("solver_tol must be positive");
    if (!(projection_eps > 0.0)) throw ConfigError("projection_eps must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    energy.validate();
  }
};

struct DirectionEntry {
  double distance;  // W_p^p along this direction
  double weight;
};

struct DistanceReport {
  double value = 0.0;
  std::vector<DirectionEntry> per_direction;
  uint64_t frames_seed = 0;
  double wallclock_seconds = 0.0;
  double prefactor = 1.0;  // value = prefactor * sum_l weight_l * distance_l
};

// ---------------------------------------------------------------------------
// Projection plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline void check_unit_cloud(const Mat& X, const char* what) {
  if (X.rows() < 1 || X.cols() < 2) throw ConfigError("point set must be n x d, d >= 2");
  if (max_row_norm_deviation(X) > 1e-6)
    throw ConfigError(std::string(what) + ": points must be unit norm");
}

inline bool cloud_lex_greater(const Mat& X, const Mat& Y) {
  if (X.rows() != Y.rows()) return X.rows() > Y.rows();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (X(i, j) != Y(i, j)) return X(i, j) > Y(i, j);
  return false;
}

// Circle coordinates of a point set under one frame. A point orthogonal to
// the frame plane triggers one retry with a deterministically jittered
// frame; a second failure propagates. z_out, when given, receives the raw
// 2-D images (pre-normalization) for gradient chain rules.
inline Vec project_circle_coords(const Mat& X, const StiefelFrame& frame,
                                 double eps, int frame_index, Mat* z_out) {
  auto attempt = [&](const StiefelFrame& f, Vec& t) -> bool {
    Mat z = X * f.basis;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      double r = std::hypot(z(i, 0), z(i, 1));
      if (!(r > eps)) return false;
      t[i] = circle_coord(z(i, 0) / r, z(i, 1) / r);
    }
    if (z_out) *z_out = std::move(z);
    return true;
  };
  Vec t(X.rows());
  if (attempt(frame, t)) return t;
  // jitter of 1e-10, derived from the frame index only
  Rng jrng(derive_seed(0x6a697474, static_cast<uint64_t>(frame_index)));
  Mat zj = frame.basis;
  for (Eigen::Index i = 0; i < zj.rows(); ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      zj(i, j) += 1e-10 * (2.0 * jrng.uniform() - 1.0);
  StiefelFrame jittered = orthonormalize_columns(zj);
  if (attempt(jittered, t)) {
    log_msg(LogLevel::Debug, "degenerate projection recovered by frame jitter");
    return t;
  }
  throw DegenerateProjection("point orthogonal to frame plane after jitter retry");
}

struct SortedProjection {
  Vec t;                  // sorted ascending
  std::vector<int> perm;  // perm[s] = original row of sorted position s
  Mat z;                  // raw images in original row order (grad path only)
};

inline SortedProjection sorted_projection(const Mat& X, const StiefelFrame& frame,
                                          double eps, int frame_index,
                                          bool keep_grad_info) {
  SortedProjection out;
  Vec raw = project_circle_coords(X, frame, eps, frame_index,
                                  keep_grad_info ? &out.z : nullptr);
  const int n = static_cast<int>(raw.size());
  out.perm.resize(n);
  std::iota(out.perm.begin(), out.perm.end(), 0);
  std::sort(out.perm.begin(), out.perm.end(),
            [&](int a, int b) { return raw[a] < raw[b]; });
  out.t.resize(n);
  for (int s = 0; s < n; ++s) out.t[s] = raw[out.perm[s]];
  return out;
}

struct DirectionSolve {
  double distance = 0.0;
  double alpha = 0.0;  // optimal shift in (X, Y) order; unused for vs-uniform
};

inline DirectionSolve solve_direction(const Vec& tx, const Vec& ty,
                                      const SlicedConfig& cfg) {
  switch (cfg.solver) {
    case CircularSolver::LevelMedian: {
      if (lex_greater(tx, ty)) {
        CircularSolution s = level_median_w1(ty, tx);
        return {s.cost, -s.alpha};
      }
      CircularSolution s = level_median_w1(tx, ty);
      return {s.cost, s.alpha};
    }
    case CircularSolver::BinarySearch: {
      CircularSolution s = solve_circular(tx, ty, cfg.p, cfg.solver_tol);
      return {s.cost, s.alpha};
    }
    case CircularSolver::VsUniform:
      return {circ_w2_vs_uniform(CircularEmpirical::from_sorted(tx)), 0.0};
  }
  throw ConfigError("unknown solver");
}

// Per-direction distances; optionally fills the L x (m+n) matrix of sorted
// circle coordinates consumed by the parametric energy functions. Slots are
// written by index so the result is identical for any thread count.
inline Vec direction_distances(const Mat& X, const Mat* Y, const FrameBatch& frames,
                               const SlicedConfig& cfg, Mat* proj_store,
                               std::vector<double>* alphas) {
  const int L = frames.L;
  Vec dist(L);
  parallel_for(L, cfg.threads, [&](int l) {
    SortedProjection px =
        sorted_projection(X, frames.frames[l], cfg.projection_eps, l, false);
    DirectionSolve s;
    if (Y) {
      SortedProjection py =
          sorted_projection(*Y, frames.frames[l], cfg.projection_eps, l, false);
      s = solve_direction(px.t, py.t, cfg);
      if (proj_store) {
        proj_store->row(l).head(px.t.size()) = px.t.transpose();
        proj_store->row(l).tail(py.t.size()) = py.t.transpose();
      }
    } else {
      s = solve_direction(px.t, px.t /*unused*/, cfg);
      if (proj_store) proj_store->row(l) = px.t.transpose();
    }
    dist[l] = s.distance;
    if (alphas) (*alphas)[l] = s.alpha;
  });
  return dist;
}

struct WeightOutcome {
  WeightVector weights;
  std::optional<NetworkParams> net;
};

inline WeightOutcome compute_direction_weights(const Vec& distances,
                                               const Mat& projections,
                                               const SlicedConfig& cfg,
                                               const NetworkParams* warm_start = nullptr) {
  WeightOutcome out;
  if (!is_parametric(cfg.energy.kind)) {
    out.weights = nonparametric_weights(distances, cfg.energy.kind);
    return out;
  }
  NetworkParams net;
  if (warm_start) {
    if (warm_start->kind != cfg.energy.kind ||
        warm_start->directions != static_cast<int>(distances.size()) ||
        warm_start->input_width != static_cast<int>(projections.cols()))
      throw ConfigError("network checkpoint does not match this configuration");
    net = *warm_start;
  } else {
    net = make_network(cfg.energy, static_cast<int>(distances.size()),
                       static_cast<int>(projections.cols()),
                       derive_seed(cfg.seed, 0x696e6974));
  }
  if (cfg.energy.train_epochs > 0) {
    net = train_network(std::move(net), projections, distances,
                        cfg.energy.train_epochs, cfg.energy.train_lr,
                        cfg.energy.maximize)
              .net;
  }
  out.weights = cfg.energy.literal_final_weights
                    ? nonparametric_weights(distances, EnergyKind::Exp)
                    : parametric_weights(net, projections);
  out.net = std::move(net);
  return out;
}

inline DistanceReport assemble_report(const Vec& distances, const Vec& weights,
                                      const SlicedConfig& cfg, double seconds) {
  DistanceReport rep;
  rep.frames_seed = cfg.seed;
  rep.prefactor = cfg.unit_prefactor ? 1.0 : 1.0 / static_cast<double>(cfg.L);
  rep.per_direction.resize(cfg.L);
  double acc = 0.0;
  for (int l = 0; l < cfg.L; ++l) {
    rep.per_direction[l] = {distances[l], weights[l]};
    acc += weights[l] * distances[l];
  }
  rep.value = rep.prefactor * acc;
  rep.wallclock_seconds = seconds;
  return rep;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Sliced estimators
// ---------------------------------------------------------------------------

/// Euclidean sliced Wasserstein: mean over L uniform directions of the 1-D
/// quantile-matching cost of the linear projections.
inline double sw_hat(const Mat& X, const Mat& Y, const SlicedConfig& cfg) {
  cfg.validate();
  if (X.cols() != Y.cols()) throw SizeMismatch("dimension mismatch");
  if (X.rows() < 1 || Y.rows() < 1) throw EmptyMeasure("empty point set");
  Rng rng(derive_seed(cfg.seed, 0x7377));
  Mat dirs = sample_uniform_sphere(static_cast<int>(X.cols()), cfg.L, rng);
  Vec dist(cfg.L);
  parallel_for(cfg.L, cfg.threads, [&](int l) {
    Vec a = X * dirs.row(l).transpose();
    Vec b = Y * dirs.row(l).transpose();
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    dist[l] = detail::line_cost_impl(a, b, cfg.p, 0.0, nullptr, nullptr);
  });
  return dist.mean();
}

/// Spherical sliced Wasserstein with uniform direction weights. The report
/// stores weight 1 per direction; the value is the plain mean.
inline DistanceReport ssw_hat(const Mat& X0, const Mat& Y0, const SlicedConfig& cfg) {
  cfg.validate();
  if (cfg.solver == CircularSolver::VsUniform)
    throw ConfigError("use the *_uniform entry point for the vs_uniform solver");
  detail::check_unit_cloud(X0, "ssw_hat X");
  detail::check_unit_cloud(Y0, "ssw_hat Y");
  if (X0.cols() != Y0.cols()) throw SizeMismatch("dimension mismatch");
  detail::Stopwatch timer;
  const bool swapped = detail::cloud_lex_greater(X0, Y0);
  const Mat& X = swapped ? Y0 : X0;
  const Mat& Y = swapped ? X0 : Y0;
  FrameBatch frames = sample_frames(static_cast<int>(X.cols()), cfg.L, cfg.seed);
  Vec dist = detail::direction_distances(X, &Y, frames, cfg, nullptr, nullptr);
  DistanceReport rep;
  rep.frames_seed = cfg.seed;
  rep.prefactor = 1.0 / static_cast<double>(cfg.L);
  rep.per_direction.resize(cfg.L);
  double acc = 0.0;
  for (int l = 0; l < cfg.L; ++l) {
    rep.per_direction[l] = {dist[l], 1.0};
    acc += dist[l];
  }
  rep.value = rep.prefactor * acc;
  rep.wallclock_seconds = timer.seconds();
  return rep;
}

struct EstimateOutcome {
  DistanceReport report;
  std::optional<NetworkParams> net;  // trained energy network, parametric kinds
};

/// Discriminative spherical sliced Wasserstein with access to the trained
/// energy network; warm_start resumes training from a checkpoint.
inline EstimateOutcome dssw_hat_full(const Mat& X0, const Mat& Y0,
                                     const SlicedConfig& cfg,
                                     const NetworkParams* warm_start = nullptr) {
  cfg.validate();
  if (cfg.solver == CircularSolver::VsUniform)
    throw ConfigError("use the *_uniform entry point for the vs_uniform solver");
  detail::check_unit_cloud(X0, "dssw_hat X");
  detail::check_unit_cloud(Y0, "dssw_hat Y");
  if (X0.cols() != Y0.cols()) throw SizeMismatch("dimension mismatch");
  detail::Stopwatch timer;
  const bool swapped = detail::cloud_lex_greater(X0, Y0);
  const Mat& X = swapped ? Y0 : X0;
  const Mat& Y = swapped ? X0 : Y0;
  FrameBatch frames = sample_frames(static_cast<int>(X.cols()), cfg.L, cfg.seed);
  const bool parametric = is_parametric(cfg.energy.kind);
  Mat proj;
  if (parametric) proj.resize(cfg.L, X.rows() + Y.rows());
  Vec dist = detail::direction_distances(X, &Y, frames, cfg,
                                         parametric ? &proj : nullptr, nullptr);
  detail::WeightOutcome wo =
      detail::compute_direction_weights(dist, proj, cfg, warm_start);
  EstimateOutcome out;
  out.report = detail::assemble_report(dist, wo.weights.w, cfg, timer.seconds());
  out.net = std::move(wo.net);
  return out;
}

/// Discriminative spherical sliced Wasserstein: per-direction weights from
/// the projected energy function, value = prefactor * sum_l w_l W_l.
inline DistanceReport dssw_hat(const Mat& X0, const Mat& Y0, const SlicedConfig& cfg) {
  return dssw_hat_full(X0, Y0, cfg).report;
}

/// SSW against the uniform measure on the sphere: every geodesic projection
/// of the uniform measure is uniform on the circle, so each direction uses
/// the closed-form W2 against uniform.
inline DistanceReport ssw_hat_uniform(const Mat& X, const SlicedConfig& cfg) {
  cfg.validate();
  if (cfg.solver != CircularSolver::VsUniform)
    throw ConfigError("ssw_hat_uniform requires the vs_uniform solver");
  detail::check_unit_cloud(X, "ssw_hat_uniform X");
  detail::Stopwatch timer;
  FrameBatch frames = sample_frames(static_cast<int>(X.cols()), cfg.L, cfg.seed);
  Vec dist = detail::direction_distances(X, nullptr, frames, cfg, nullptr, nullptr);
  DistanceReport rep;
  rep.frames_seed = cfg.seed;
  rep.prefactor = 1.0 / static_cast<double>(cfg.L);
  rep.per_direction.resize(cfg.L);
  double acc = 0.0;
  for (int l = 0; l < cfg.L; ++l) {
    rep.per_direction[l] = {dist[l], 1.0};
    acc += dist[l];
  }
  rep.value = rep.prefactor * acc;
  rep.wallclock_seconds = timer.seconds();
  return rep;
}

/// DSSW against the uniform measure; parametric energies see only the
/// sample-side projections.
inline DistanceReport dssw_hat_uniform(const Mat& X, const SlicedConfig& cfg) {
  cfg.validate();
  if (cfg.solver != CircularSolver::VsUniform)
    throw ConfigError("dssw_hat_uniform requires the vs_uniform solver");
  detail::check_unit_cloud(X, "dssw_hat_uniform X");
  detail::Stopwatch timer;
  FrameBatch frames = sample_frames(static_cast<int>(X.cols()), cfg.L, cfg.seed);
  const bool parametric = is_parametric(cfg.energy.kind);
  Mat proj;
  if (parametric) proj.resize(cfg.L, X.rows());
  Vec dist = detail::direction_distances(X, nullptr, frames, cfg,
                                         parametric ? &proj : nullptr, nullptr);
  detail::WeightOutcome wo = detail::compute_direction_weights(dist, proj, cfg);
  return detail::assemble_report(dist, wo.weights.w, cfg, timer.seconds());
}

// ---------------------------------------------------------------------------
// Particle gradients (envelope scheme: matching, shift and weights frozen)
// ---------------------------------------------------------------------------

enum class SlicedMethod { Sw, Ssw, Dssw };

inline std::string to_string(SlicedMethod m) {
  switch (m) {
    case SlicedMethod::Sw: return "sw";
    case SlicedMethod::Ssw: return "ssw";
    case SlicedMethod::Dssw: return "dssw";
  }
  throw ConfigError("unknown method");
}

inline SlicedMethod method_from_string(const std::string& s) {
  if (s == "sw") return SlicedMethod::Sw;
  if (s == "ssw") return SlicedMethod::Ssw;
  if (s == "dssw") return SlicedMethod::Dssw;
  throw ConfigError("unknown method: " + s);
}

struct GradientResult {
  Mat grad;  // n x d, tangent to the sphere at each particle
  bool nondifferentiable = false;
};

/// Evaluate prefactor * sum_l w_l W_l with a fixed frame batch and fixed
/// weights; the finite-difference oracle for the envelope gradients.
inline double frozen_weight_value(const Mat& X, const Mat& Y,
                                  const FrameBatch& frames, const Vec& weights,
                                  const SlicedConfig& cfg) {
  Vec dist = detail::direction_distances(X, &Y, frames, cfg, nullptr, nullptr);
  double pref = cfg.unit_prefactor ? 1.0 : 1.0 / static_cast<double>(cfg.L);
  double acc = 0.0;
  for (int l = 0; l < cfg.L; ++l) acc += weights[l] * dist[l];
  return pref * acc;
}

namespace detail {

// Tangent-projected chain rule from d/dt of one direction's cost into the
// ambient gradient rows. grad_t is indexed by sorted position.
inline void chain_to_ambient(const SortedProjection& px, const StiefelFrame& frame,
                             const Vec& grad_t, Mat& grad) {
  const double two_pi = 2.0 * M_PI;
  for (int s = 0; s < static_cast<int>(px.perm.size()); ++s) {
    double gt = grad_t[s];
    if (gt == 0.0) continue;
    int q = px.perm[s];
    double z1 = px.z(q, 0), z2 = px.z(q, 1);
    double r2 = z1 * z1 + z2 * z2;
    double scale = gt / (two_pi * r2);
    grad.row(q) += scale * (-z2 * frame.basis.col(0) + z1 * frame.basis.col(1)).transpose();
  }
}

}  // namespace detail

/// Per-particle gradients of the sliced distance with respect to X. The
/// optimal matching, optimal shift, and direction weights are held fixed;
/// the result rows are tangent to the sphere. Atoms exactly at the circle
/// cut or exactly tied matchings set the nondifferentiable flag and use the
/// one-sided choice.
inline GradientResult sliced_gradient(const Mat& X, const Mat& Y,
                                      const SlicedConfig& cfg, SlicedMethod method) {
  cfg.validate();
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  GradientResult out;
  out.grad = Mat::Zero(n, d);

  if (method == SlicedMethod::Sw) {
    Rng rng(derive_seed(cfg.seed, 0x7377));
    Mat dirs = sample_uniform_sphere(d, cfg.L, rng);
    double pref = 1.0 / static_cast<double>(cfg.L);
    std::vector<Mat> slot(cfg.L);
    std::vector<uint8_t> tie(cfg.L, 0);
    parallel_for(cfg.L, cfg.threads, [&](int l) {
      Vec raw = X * dirs.row(l).transpose();
      Vec b = Y * dirs.row(l).transpose();
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::sort(perm.begin(), perm.end(),
                [&](int p1, int p2) { return raw[p1] < raw[p2]; });
      Vec a(n);
      for (int s = 0; s < n; ++s) a[s] = raw[perm[s]];
      std::sort(b.data(), b.data() + b.size());
      Vec grad_a = Vec::Zero(n);
      bool t = false;
      detail::line_cost_impl(a, b, cfg.p, pref, &grad_a, &t);
      tie[l] = t;
      Mat g = Mat::Zero(n, d);
      for (int s = 0; s < n; ++s)
        if (grad_a[s] != 0.0) g.row(perm[s]) += grad_a[s] * dirs.row(l);
      slot[l] = std::move(g);
    });
    for (int l = 0; l < cfg.L; ++l) {
      out.grad += slot[l];
      out.nondifferentiable |= tie[l] != 0;
    }
  } else {
    detail::check_unit_cloud(X, "sliced_gradient X");
    detail::check_unit_cloud(Y, "sliced_gradient Y");
    if (cfg.solver == CircularSolver::VsUniform)
      throw ConfigError("vs_uniform gradients not supported for two-sample inputs");
    FrameBatch frames = sample_frames(d, cfg.L, cfg.seed);

    // Pass 1: distances and optimal shifts (and weights for the dssw path).
    const bool parametric =
        method == SlicedMethod::Dssw && is_parametric(cfg.energy.kind);
    Mat proj;
    if (parametric) proj.resize(cfg.L, X.rows() + Y.rows());
    std::vector<double> alphas(cfg.L, 0.0);
    Vec dist = detail::direction_distances(X, &Y, frames, cfg,
                                           parametric ? &proj : nullptr, &alphas);
    Vec weights;
    if (method == SlicedMethod::Ssw) {
      weights = Vec::Ones(cfg.L);
    } else {
      weights = detail::compute_direction_weights(dist, proj, cfg).weights.w;
    }
    double pref = cfg.unit_prefactor && method == SlicedMethod::Dssw
                      ? 1.0
                      : 1.0 / static_cast<double>(cfg.L);

    // Pass 2: gradient sweep at the stored shift, chunked so slots stay
    // small and the reduction order is independent of the thread count.
    const int block = 32;
    std::vector<Mat> slot(std::min(block, cfg.L));
    std::vector<uint8_t> tie(cfg.L, 0);
    for (int base = 0; base < cfg.L; base += block) {
      int count = std::min(block, cfg.L - base);
      parallel_for(count, cfg.threads, [&](int q) {
        int l = base + q;
        detail::SortedProjection px = detail::sorted_projection(
            X, frames.frames[l], cfg.projection_eps, l, true);
        Vec grad_t = Vec::Zero(n);
        bool t = false;
        double wl = pref * weights[l];
        if (cfg.solver == CircularSolver::LevelMedian ||
            cfg.solver == CircularSolver::BinarySearch) {
          detail::SortedProjection py = detail::sorted_projection(
              Y, frames.frames[l], cfg.projection_eps, l, false);
          detail::circ_shift_cost_impl(px.t, py.t, cfg.p, alphas[l], nullptr, wl,
                                       &grad_t, &t);
        }
        for (int s = 0; s < n; ++s)
          if (px.t[s] == 0.0) t = true;  // atom exactly at the coordinate cut
        tie[l] = t;
        slot[q] = Mat::Zero(n, d);
        detail::chain_to_ambient(px, frames.frames[l], grad_t, slot[q]);
      });
      for (int q = 0; q < count; ++q) {
        out.grad += slot[q];
        out.nondifferentiable |= tie[base + q] != 0;
      }
    }
  }

  // Remove the radial component so the gradient lives in the tangent space.
  for (int i = 0; i < n; ++i) {
    double radial = out.grad.row(i).dot(X.row(i));
    out.grad.row(i) -= radial * X.row(i);
  }
  return out;
}

/// DSSW gradient with weights from the configured energy function.
inline GradientResult dssw_gradient(const Mat& X, const Mat& Y,
                                    const SlicedConfig& cfg) {
  return sliced_gradient(X, Y, cfg, SlicedMethod::Dssw);
}

/// Gradient of W2^2 against the uniform measure (per direction, closed
/// form), assembled like sliced_gradient.
inline GradientResult sliced_gradient_uniform(const Mat& X, const SlicedConfig& cfg,
                                              SlicedMethod method) {
  cfg.validate();
  if (cfg.solver != CircularSolver::VsUniform)
    throw ConfigError("sliced_gradient_uniform requires the vs_uniform solver");
  detail::check_unit_cloud(X, "sliced_gradient_uniform X");
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  FrameBatch frames = sample_frames(d, cfg.L, cfg.seed);

  const bool parametric =
      method == SlicedMethod::Dssw && is_parametric(cfg.energy.kind);
  Mat proj;
  if (parametric) proj.resize(cfg.L, n);
  Vec dist = detail::direction_distances(X, nullptr, frames, cfg,
                                         parametric ? &proj : nullptr, nullptr);
  Vec weights;
  if (method != SlicedMethod::Dssw)
    weights = Vec::Ones(cfg.L);
  else
    weights = detail::compute_direction_weights(dist, proj, cfg).weights.w;
  double pref = cfg.unit_prefactor && method == SlicedMethod::Dssw
                    ? 1.0
                    : 1.0 / static_cast<double>(cfg.L);

  GradientResult out;
  out.grad = Mat::Zero(n, d);
  const int block = 32;
  std::vector<Mat> slot(std::min(block, cfg.L));
  for (int base = 0; base < cfg.L; base += block) {
    int count = std::min(block, cfg.L - base);
    parallel_for(count, cfg.threads, [&](int q) {
      int l = base + q;
      detail::SortedProjection px = detail::sorted_projection(
          X, frames.frames[l], cfg.projection_eps, l, true);
      double alpha = px.t.mean() - 0.5;
      Vec grad_t(n);
      double wl = pref * weights[l];
      for (int s = 0; s < n; ++s) {
        double c = px.t[s] - alpha;
        double mid = (2.0 * s + 1.0) / (2.0 * n);
        grad_t[s] = wl * (2.0 / n) * (c - mid);
      }
      slot[q] = Mat::Zero(n, d);
      detail::chain_to_ambient(px, frames.frames[l], grad_t, slot[q]);
    });
    for (int q = 0; q < count; ++q) out.grad += slot[q];
  }
  for (int i = 0; i < n; ++i) {
    double radial = out.grad.row(i).dot(X.row(i));
    out.grad.row(i) -= radial * X.row(i);
  }
  return out;
}

}  // namespace sphereot
