#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "sphereot/common.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Empirical measures on the circle, coordinates normalized to [0, 1).
// All solvers work in these units, so the diameter is 1/2.
// ---------------------------------------------------------------------------

class CircularEmpirical {
 public:
  static CircularEmpirical from_samples(std::vector<double> ts) {
    if (ts.empty()) throw EmptyMeasure("empirical measure needs >= 1 atom");
    std::sort(ts.begin(), ts.end());
    if (ts.front() < 0.0 || ts.back() >= 1.0)
      throw ConfigError("circle coordinates must lie in [0, 1)");
    Vec v = Eigen::Map<Vec>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    return CircularEmpirical(std::move(v));
  }

  static CircularEmpirical from_sorted(Vec ts) {
    if (ts.size() == 0) throw EmptyMeasure("empirical measure needs >= 1 atom");
    return CircularEmpirical(std::move(ts));
  }

  const Vec& atoms() const { return atoms_; }
  int size() const { return static_cast<int>(atoms_.size()); }

 private:
  explicit CircularEmpirical(Vec ts) : atoms_(std::move(ts)) {}
  Vec atoms_;
};

namespace detail {

inline bool lex_greater(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

// Shift cost C(alpha) = int_0^1 |Fa^{-1}(t) - Fb^{-1}(t + alpha)|^p dt with
// quantile functions extended by F^{-1}(t + 1) = F^{-1}(t) + 1. Piecewise
// sweep over the merged quantile grid. Optional outputs:
//   slope_out: exact dC/dalpha (C is piecewise linear in alpha; the b-side
//              cell boundaries move at rate -1, so each interior b-boundary
//              contributes diff_right^p - diff_left^p),
//   grad_a:    accumulates weight * dC/da_i (sorted index order),
//   tie_flag:  set on exactly tied matchings (p = 1 sign ambiguity).
inline double circ_shift_cost_impl(const Vec& a, const Vec& b, int p,
                                   double alpha, double* slope_out,
                                   double weight, Vec* grad_a, bool* tie_flag) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const double inv_n = 1.0 / n;
  const double inv_m = 1.0 / m;

  double t = 0.0;
  int i = 0;
  long k = static_cast<long>(std::floor(alpha));
  double r0 = alpha - static_cast<double>(k);
  int j = std::min(static_cast<int>(r0 * m), m - 1);

  // One boundary advances per iteration, the b side first on ties; the
  // zero-length cells this creates carry no mass but make the slope the
  // exact right-derivative even when boundaries coincide.
  double total = 0.0;
  double slope = 0.0;
  bool start_is_b = false;
  while (t < 1.0) {
    double t_a = (i + 1 >= n) ? 1.0 : (i + 1) * inv_n;
    double t_b = (j + 1) * inv_m + static_cast<double>(k) - alpha;
    double t_end = std::min(1.0, std::min(t_a, t_b));
    double len = t_end - t;
    bool end_is_b = t_b <= t_a && t_b <= 1.0;
    double diff = a[i] - (b[j] + static_cast<double>(k));
    double pow_term;
    if (p == 1) {
      pow_term = std::abs(diff);
      if (len > 0.0) {
        total += len * pow_term;
        if (grad_a) {
          if (diff == 0.0 && tie_flag) *tie_flag = true;
          (*grad_a)[i] +=
              weight * len * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
        }
      }
    } else {
      pow_term = diff * diff;
      if (len > 0.0) {
        total += len * pow_term;
        if (grad_a) (*grad_a)[i] += weight * len * 2.0 * diff;
      }
    }
    if (slope_out) {
      if (start_is_b) slope += pow_term;
      if (end_is_b) slope -= pow_term;
    }
    t = t_end;
    if (t >= 1.0) {
      // A b-boundary exactly on the window edge enters as alpha grows; its
      // cell pairs the current a-quantile with the next b value.
      if (slope_out && end_is_b && t_b == 1.0) {
        int j_next = j + 1 == m ? 0 : j + 1;
        double k_next = static_cast<double>(j + 1 == m ? k + 1 : k);
        double diff_next = a[i] - (b[j_next] + k_next);
        slope += p == 1 ? std::abs(diff_next) : diff_next * diff_next;
      }
      break;
    }
    if (end_is_b) {
      start_is_b = true;
      if (++j == m) {
        j = 0;
        ++k;
      }
    } else {
      start_is_b = false;
      if (i + 1 < n) ++i;
    }
  }
  if (slope_out) *slope_out = slope;
  return total;
}

inline double circ_shift_cost(const Vec& a, const Vec& b, int p, double alpha) {
  return circ_shift_cost_impl(a, b, p, alpha, nullptr, 0.0, nullptr, nullptr);
}

// dC/dalpha in O(m): only the b-side boundaries tau = (j+1)/m + k - alpha
// inside (0, 1] contribute, each with the a-quantile cell found by direct
// indexing. When b is the larger measure the computation runs in the
// swapped orientation via C_ab'(alpha) = -C_ba'(-alpha). The sign at kinks
// is a one-sided convention, which bisection tolerates.
inline double circ_shift_slope(const Vec& a, const Vec& b, int p, double alpha) {
  if (b.size() > a.size()) return -circ_shift_slope(b, a, p, -alpha);
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  long k = static_cast<long>(std::floor(alpha));
  double r0 = alpha - static_cast<double>(k);
  int j = std::min(static_cast<int>(r0 * m), m - 1);
  double slope = 0.0;
  for (;;) {
    double tau = (j + 1.0) / m + static_cast<double>(k) - alpha;
    if (tau > 1.0) break;
    if (tau > 0.0) {
      int i = std::clamp(static_cast<int>(std::ceil(tau * n)) - 1, 0, n - 1);
      int j_next = j + 1 == m ? 0 : j + 1;
      double k_next = static_cast<double>(j + 1 == m ? k + 1 : k);
      double d_left = a[i] - (b[j] + static_cast<double>(k));
      double d_right = a[i] - (b[j_next] + k_next);
      if (p == 1)
        slope += std::abs(d_right) - std::abs(d_left);
      else
        slope += d_right * d_right - d_left * d_left;
    }
    if (++j == m) {
      j = 0;
      ++k;
    }
  }
  return slope;
}

struct CircularSolution {
  double cost;
  double alpha;  // optimal shift in (a, b) argument order
};

// W1 between CDF step functions via the weighted level median of
// F_a - F_b over the common refinement. Returns the cost and the optimal
// vertical shift (same alpha parameter as the quantile formulation).
inline CircularSolution level_median_w1(const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  std::vector<std::pair<double, double>> segs;  // (D value, length)
  segs.reserve(n + m + 1);
  int ia = 0, ib = 0;
  double pos = 0.0;
  auto flush = [&](double to) {
    if (to > pos) {
      segs.emplace_back(static_cast<double>(ia) / n - static_cast<double>(ib) / m,
                        to - pos);
      pos = to;
    }
  };
  while (ia < n || ib < m) {
    double next = std::numeric_limits<double>::infinity();
    if (ia < n) next = std::min(next, a[ia]);
    if (ib < m) next = std::min(next, b[ib]);
    flush(next);
    while (ia < n && a[ia] <= next) ++ia;
    while (ib < m && b[ib] <= next) ++ib;
  }
  flush(1.0);

  std::sort(segs.begin(), segs.end());
  double cum = 0.0;
  double median = segs.back().first;
  for (auto& s : segs) {
    cum += s.second;
    if (cum >= 0.5) {
      median = s.first;
      break;
    }
  }
  double w1 = 0.0;
  for (auto& s : segs) w1 += s.second * std::abs(s.first - median);
  return {w1, median};
}

// Minimize the convex C(alpha) over [-1, 1]. C is piecewise linear in the
// shift, so the search bisects on the exact one-sweep slope when the end
// slopes bracket zero (golden-section otherwise, for flat p = 1 regions)
// and then snaps to the breakpoint grid alpha = j/m + k - i/n inside the
// final bracket, where the true minimizer lives.
inline CircularSolution minimize_shift(const Vec& a, const Vec& b, int p,
                                       double tol) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  auto cost = [&](double al) { return circ_shift_cost(a, b, p, al); };
  auto slope = [&](double al) { return circ_shift_slope(a, b, p, al); };

  double lo = -1.0, hi = 1.0;
  int iters = 0;
  auto check_budget = [&] {
    if (++iters > 200)
      throw NonConvergence("shift search exceeded 200 iterations; tol too small");
  };

  if (slope(lo) < 0.0 && slope(hi) > 0.0) {
    while (hi - lo > tol) {
      check_budget();
      double mid = 0.5 * (lo + hi);
      if (slope(mid) >= 0.0)
        hi = mid;
      else
        lo = mid;
    }
  } else {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = cost(x1), f2 = cost(x2);
    while (hi - lo > tol) {
      check_budget();
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = cost(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = cost(x2);
      }
    }
  }

  CircularSolution best{cost(0.5 * (lo + hi)), 0.5 * (lo + hi)};
  auto consider = [&](double al) {
    if (al < -1.0 || al > 1.0) return;
    double c = cost(al);
    if (c < best.cost) best = {c, al};
  };
  // Breakpoints within the bracket: for each a-boundary i/n, the nearest
  // alignments with b-boundaries j/m + k. Deduplicated: when n and m share
  // factors, many i produce the same candidate.
  double pad = std::max(hi - lo, 1e-12);
  std::vector<double> candidates;
  for (int i = 0; i <= n; ++i) {
    double target = 0.5 * (lo + hi) + static_cast<double>(i) / n;
    double aligned = std::round(target * m) / m - static_cast<double>(i) / n;
    for (int off = -1; off <= 1; ++off) {
      double cand = aligned + static_cast<double>(off) / m;
      if (cand >= lo - pad && cand <= hi + pad) candidates.push_back(cand);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  constexpr size_t kMaxSnapEvals = 64;
  if (candidates.size() > kMaxSnapEvals) candidates.resize(kMaxSnapEvals);
  for (double cand : candidates) consider(cand);
  consider(0.0);  // exact for identical atom sets
  if (p == 1) consider(level_median_w1(a, b).alpha);
  return best;
}

// Canonicalize the argument order before solving so that the computation
// (and hence the floating-point result) is identical under swapping;
// C_ab(alpha) = C_ba(-alpha).
inline CircularSolution solve_circular(const Vec& a, const Vec& b, int p,
                                       double tol) {
  if (lex_greater(a, b)) {
    CircularSolution s = minimize_shift(b, a, p, tol);
    return {s.cost, -s.alpha};
  }
  return minimize_shift(a, b, p, tol);
}

// 1-D cost on the line (no shift, no wrap) for linear projections;
// optionally accumulates weight * d/da_i into grad_a.
inline double line_cost_impl(const Vec& a, const Vec& b, int p, double weight,
                             Vec* grad_a, bool* tie_flag) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const double inv_n = 1.0 / n;
  const double inv_m = 1.0 / m;
  double t = 0.0;
  int i = 0, j = 0;
  double total = 0.0;
  while (t < 1.0) {
    double t_a = (i + 1 >= n) ? 1.0 : (i + 1) * inv_n;
    double t_b = (j + 1 >= m) ? 1.0 : (j + 1) * inv_m;
    double t_end = std::min(1.0, std::min(t_a, t_b));
    double len = t_end - t;
    if (len > 0.0) {
      double diff = a[i] - b[j];
      if (p == 1) {
        total += len * std::abs(diff);
        if (grad_a) {
          if (diff == 0.0 && tie_flag) *tie_flag = true;
          (*grad_a)[i] += weight * len * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
        }
      } else {
        total += len * diff * diff;
        if (grad_a) (*grad_a)[i] += weight * len * 2.0 * diff;
      }
    }
    t = t_end;
    if (t >= 1.0) break;
    if (t_a <= t_b && i + 1 < n) ++i;
    if (t_b <= t_a && j + 1 < m) ++j;
  }
  return total;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public solvers
// ---------------------------------------------------------------------------

/// Exact W1 on the circle via the level-median formulation:
/// W1 = int_0^1 |F_mu(t) - F_nu(t) - alpha*| dt with alpha* the weighted
/// level median of F_mu - F_nu over the common refinement.
inline double circ_w1_level_median(const CircularEmpirical& mu,
                                   const CircularEmpirical& nu) {
  const Vec& a = mu.atoms();
  const Vec& b = nu.atoms();
  if (detail::lex_greater(a, b)) return detail::level_median_w1(b, a).cost;
  return detail::level_median_w1(a, b).cost;
}

/// W_p^p on the circle, p in {1, 2}, by shift minimization of the
/// quantile-matching objective. Bracket [-1, 1]; terminates when the
/// bracket width falls below tol.
inline double circ_w_binary_search(const CircularEmpirical& mu,
                                   const CircularEmpirical& nu, int p,
                                   double tol = 1e-8) {
  if (p != 1 && p != 2) throw ConfigError("order p must be 1 or 2");
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  return detail::solve_circular(mu.atoms(), nu.atoms(), p, tol).cost;
}

/// Closed-form W2^2 between an empirical measure and the uniform measure on
/// the circle. The uniform quantile extends to the identity on R, so the
/// optimal shift is the mean residual and each quantile cell integrates to
/// a cubic difference.
inline double circ_w2_vs_uniform(const CircularEmpirical& mu) {
  const Vec& a = mu.atoms();
  const int n = static_cast<int>(a.size());
  double alpha = a.mean() - 0.5;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double c = a[i] - alpha;
    double l = c - static_cast<double>(i) / n;
    double r = c - static_cast<double>(i + 1) / n;
    total += (l * l * l - r * r * r) / 3.0;
  }
  return total;
}

/// Test oracle: minimum over grid_size evenly spaced cut points of the
/// sorted matching cost after unrolling both measures at the cut. Equal
/// atom counts only; upper-bounds the true value within O(1/grid_size).
inline double brute_force_circ_w(const CircularEmpirical& mu,
                                 const CircularEmpirical& nu, int p,
                                 int grid_size) {
  if (mu.size() != nu.size())
    throw SizeMismatch("brute force needs equal atom counts");
  if (mu.size() > 12) throw TooLarge("brute force limited to n <= 12");
  if (grid_size < 1000) throw ConfigError("grid_size must be >= 1000");
  if (p != 1 && p != 2) throw ConfigError("order p must be 1 or 2");

  const Vec& a = mu.atoms();
  const Vec& b = nu.atoms();
  const int n = mu.size();
  const double* pa = a.data();
  const double* pb = b.data();

  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid_size; ++g) {
    double cut = static_cast<double>(g) / grid_size;
    int ra = static_cast<int>(std::lower_bound(pa, pa + n, cut) - pa);
    int rb = static_cast<int>(std::lower_bound(pb, pb + n, cut) - pb);
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
      int idx_a = ra + i;
      int idx_b = rb + i;
      double xa = idx_a < n ? pa[idx_a] - cut : pa[idx_a - n] - cut + 1.0;
      double xb = idx_b < n ? pb[idx_b] - cut : pb[idx_b - n] - cut + 1.0;
      double d = xa - xb;
      cost += p == 1 ? std::abs(d) : d * d;
    }
    best = std::min(best, cost / n);
  }
  return best;
}

}  // namespace sphereot
