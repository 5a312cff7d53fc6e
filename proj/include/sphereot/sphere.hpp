#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sphereot/common.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Points on S^{d-1}
// ---------------------------------------------------------------------------

/// A point on the unit sphere. Construction normalizes, so the unit-norm
/// invariant holds for every instance.
class UnitVector {
 public:
  explicit UnitVector(Vec coords) : v_(std::move(coords)) {
    if (v_.size() < 2) throw ConfigError("UnitVector needs dimension >= 2");
    double norm = v_.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw ConfigError("UnitVector from zero or non-finite coordinates");
    v_ /= norm;
  }

  static UnitVector axis(int d, int i) {
    if (d < 2 || i < 0 || i >= d) throw ConfigError("bad axis index");
    Vec v = Vec::Zero(d);
    v[i] = 1.0;
    return UnitVector(std::move(v));
  }

  const Vec& coords() const { return v_; }
  int dim() const { return static_cast<int>(v_.size()); }
  double dot(const UnitVector& o) const { return v_.dot(o.v_); }
  UnitVector operator-() const {
    UnitVector r = *this;
    r.v_ = -r.v_;
    return r;
  }

 private:
  Vec v_;
};

/// Normalize every row of a point matrix to unit norm.
inline Mat normalize_rows(Mat pts) {
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double norm = pts.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericError("cannot normalize zero or non-finite row");
    pts.row(i) /= norm;
  }
  return pts;
}

inline double max_row_norm_deviation(const Mat& pts) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    dev = std::max(dev, std::abs(pts.row(i).norm() - 1.0));
  return dev;
}

// ---------------------------------------------------------------------------
// Great-circle frames and projections
// ---------------------------------------------------------------------------

/// A d x 2 matrix with orthonormal columns; spans the plane of a great circle.
struct StiefelFrame {
  Eigen::Matrix<double, Eigen::Dynamic, 2> basis;

  int dim() const { return static_cast<int>(basis.rows()); }

  double orthonormality_defect() const {
    Eigen::Matrix2d g = basis.transpose() * basis;
    return (g - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
  }

  void validate(double tol = 1e-9) const {
    if (basis.rows() < 2) throw ConfigError("StiefelFrame needs d >= 2");
    if (orthonormality_defect() > tol)
      throw ConfigError("StiefelFrame columns not orthonormal");
  }
};

/// Geodesic projection of x onto the circle spanned by the frame:
/// U^T x / ||U^T x||. Throws DegenerateProjection when x is orthogonal to
/// the frame's plane.
inline Eigen::Vector2d geodesic_project(const Vec& x, const StiefelFrame& frame,
                                        double eps = 1e-12) {
  Eigen::Vector2d z = frame.basis.transpose() * x;
  double r = z.norm();
  if (!(r > eps))
    throw DegenerateProjection("point orthogonal to projection plane");
  return z / r;
}

inline Eigen::Vector2d geodesic_project(const UnitVector& x,
                                        const StiefelFrame& frame,
                                        double eps = 1e-12) {
  return geodesic_project(x.coords(), frame, eps);
}

/// Normalized angular coordinate in [0, 1); full turn = 1.
struct CircleSample {
  double t;
};

namespace detail {

// Coordinate of a unit 2-vector on the circle. The cut point sits at (1, 0):
// the value 1 produced there wraps to 0 so [0, 1) is strict.
inline double circle_coord(double px, double py) {
  double t = (M_PI + std::atan2(-py, -px)) / (2.0 * M_PI);
  if (t >= 1.0) t -= 1.0;
  if (t < 0.0) t += 1.0;
  return t;
}

}  // namespace detail

inline CircleSample circle_coordinate(const Eigen::Vector2d& p) {
  if (std::abs(p.norm() - 1.0) > 1e-6)
    throw ConfigError("circle_coordinate expects a unit 2-vector");
  return CircleSample{detail::circle_coord(p.x(), p.y())};
}

/// Inverse of circle_coordinate: t in [0, 1) to a point on S^1.
inline Eigen::Vector2d circle_point(double t) {
  return {std::cos(2.0 * M_PI * t), std::sin(2.0 * M_PI * t)};
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// n i.i.d. points uniform on S^{d-1}, one per row.
inline Mat sample_uniform_sphere(int d, int n, Rng& rng) {
  if (d < 2) throw ConfigError("sphere dimension must be >= 2");
  if (n < 1) throw ConfigError("sample count must be >= 1");
  Mat pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
  return normalize_rows(std::move(pts));
}

/// One von Mises-Fisher component. kappa = 0 is the uniform distribution.
struct VmfComponent {
  UnitVector mean;
  double kappa;

  VmfComponent(UnitVector mu, double k) : mean(std::move(mu)), kappa(k) {
    if (!(kappa >= 0.0)) throw ConfigError("vMF kappa must be >= 0");
  }
};

namespace detail {

// Wood-style rejection sampler for the cosine w = <mu, x> of a vMF draw.
inline double vmf_cosine(double kappa, int d, Rng& rng) {
  double dm1 = static_cast<double>(d - 1);
  // b written to avoid cancellation for large kappa.
  double b = dm1 / (std::sqrt(4.0 * kappa * kappa + dm1 * dm1) + 2.0 * kappa);
  double x0 = (1.0 - b) / (1.0 + b);
  double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  for (;;) {
    double z = rng.beta(0.5 * dm1, 0.5 * dm1);
    double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    double u = rng.uniform_pos();
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

}  // namespace detail

/// n i.i.d. vMF draws, one per row. Rejection sampling on the cosine
/// marginal, uniform tangent direction, then a Householder reflection
/// carrying e_1 to the mean.
inline Mat sample_vmf(const VmfComponent& comp, int n, Rng& rng) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  int d = comp.mean.dim();
  if (comp.kappa == 0.0) return sample_uniform_sphere(d, n, rng);

  // Householder vector u with H = I - 2 u u^T mapping e_1 to mu.
  Vec u = -comp.mean.coords();
  u[0] += 1.0;
  double un2 = u.squaredNorm();
  bool reflect = un2 > 1e-24;

  Mat pts(n, d);
  Vec tangent(d - 1);
  for (int i = 0; i < n; ++i) {
    double w = detail::vmf_cosine(comp.kappa, d, rng);
    for (int j = 0; j < d - 1; ++j) tangent[j] = rng.normal();
    tangent /= tangent.norm();
    Vec y(d);
    y[0] = w;
    double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    for (int j = 1; j < d; ++j) y[j] = s * tangent[j - 1];
    if (reflect) y -= (2.0 * u.dot(y) / un2) * u;
    pts.row(i) = y.transpose();
  }
  return normalize_rows(std::move(pts));
}

// ---------------------------------------------------------------------------
// Densities on S^2
// ---------------------------------------------------------------------------

/// Log density of a vMF on S^2 (d = 3 only):
/// log kappa - log(4 pi) - log sinh kappa + kappa <mu, x>.
inline double vmf_log_density(const VmfComponent& comp, const Vec& x) {
  if (comp.mean.dim() != 3 || x.size() != 3)
    throw UnsupportedDimension("vMF density only implemented on S^2");
  static const double log_4pi = std::log(4.0 * M_PI);
  double kappa = comp.kappa;
  if (kappa == 0.0) return -log_4pi;
  double dot = comp.mean.coords().dot(x);
  double log_k_over_sinh;
  if (kappa < 1e-4) {
    log_k_over_sinh = -kappa * kappa / 6.0;  // log(k / sinh k) ~ -k^2/6
  } else {
    // log sinh k = k + log1p(-exp(-2k)) - log 2, stable for large k.
    log_k_over_sinh =
        std::log(kappa) - (kappa + std::log1p(-std::exp(-2.0 * kappa)) - std::log(2.0));
  }
  return -log_4pi + log_k_over_sinh + kappa * dot;
}

inline double vmf_log_density(const VmfComponent& comp, const UnitVector& x) {
  return vmf_log_density(comp, x.coords());
}

/// Weighted vMF mixture on S^2.
struct VmfMixture {
  std::vector<VmfComponent> components;
  Vec weights;

  VmfMixture(std::vector<VmfComponent> comps, Vec w)
      : components(std::move(comps)), weights(std::move(w)) {
    if (components.empty()) throw ConfigError("mixture needs >= 1 component");
    if (weights.size() != static_cast<Eigen::Index>(components.size()))
      throw ConfigError("mixture weight count mismatch");
    if ((weights.array() < 0.0).any())
      throw ConfigError("mixture weights must be nonnegative");
    if (std::abs(weights.sum() - 1.0) > 1e-9)
      throw ConfigError("mixture weights must sum to 1");
  }
};

/// log sum_i w_i p_i(x) with the max-shift trick; exact for one component.
inline double mixture_log_density(const VmfMixture& mix, const Vec& x) {
  size_t k = mix.components.size();
  if (k == 1) return vmf_log_density(mix.components[0], x);
  std::vector<double> terms(k);
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < k; ++i) {
    terms[i] = std::log(mix.weights[static_cast<Eigen::Index>(i)]) +
               vmf_log_density(mix.components[i], x);
    m = std::max(m, terms[i]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

inline double mixture_log_density(const VmfMixture& mix, const UnitVector& x) {
  return mixture_log_density(mix, x.coords());
}

/// Ambient gradient of -log p for a vMF mixture; used by Langevin steps.
inline Vec mixture_potential_gradient(const VmfMixture& mix, const Vec& x) {
  size_t k = mix.components.size();
  std::vector<double> terms(k);
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < k; ++i) {
    terms[i] = std::log(mix.weights[static_cast<Eigen::Index>(i)]) +
               vmf_log_density(mix.components[i], x);
    m = std::max(m, terms[i]);
  }
  double z = 0.0;
  for (double t : terms) z += std::exp(t - m);
  Vec grad = Vec::Zero(x.size());
  for (size_t i = 0; i < k; ++i) {
    double resp = std::exp(terms[i] - m) / z;
    grad -= resp * mix.components[i].kappa * mix.components[i].mean.coords();
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Icosahedron target
// ---------------------------------------------------------------------------

/// The 12 unit vertices of the icosahedron: normalized cyclic permutations
/// of (0, +-1, +-phi), phi the golden ratio. Closed under negation.
inline std::vector<UnitVector> icosahedron_means() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<UnitVector> out;
  out.reserve(12);
  for (int cyc = 0; cyc < 3; ++cyc)
    for (int s1 : {1, -1})
      for (int s2 : {1, -1}) {
        Vec v = Vec::Zero(3);
        v[cyc] = 0.0;
        v[(cyc + 1) % 3] = s1 * 1.0;
        v[(cyc + 2) % 3] = s2 * phi;
        out.emplace_back(std::move(v));
      }
  return out;
}

/// Equal-weight 12-component vMF mixture on the icosahedron vertices.
inline VmfMixture icosahedron_mixture(double kappa) {
  std::vector<VmfComponent> comps;
  for (auto& mu : icosahedron_means()) comps.emplace_back(mu, kappa);
  Vec w = Vec::Constant(12, 1.0 / 12.0);
  return VmfMixture(std::move(comps), std::move(w));
}

/// Sample from a vMF mixture: component by weight, then the component.
inline Mat sample_mixture(const VmfMixture& mix, int n, Rng& rng) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  int d = mix.components[0].mean.dim();
  Mat pts(n, d);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    size_t c = 0;
    double acc = 0.0;
    for (; c + 1 < mix.components.size(); ++c) {
      acc += mix.weights[static_cast<Eigen::Index>(c)];
      if (u < acc) break;
    }
    pts.row(i) = sample_vmf(mix.components[c], 1, rng).row(0);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Rotations
// ---------------------------------------------------------------------------

/// Rotate x by theta radians in the plane spanned by the orthonormal pair
/// (a, b); identity on the orthogonal complement.
inline Vec rotate_along_great_circle(const Vec& x, const UnitVector& a,
                                     const UnitVector& b, double theta) {
  if (a.dim() != b.dim() || a.dim() != x.size())
    throw ConfigError("rotation dimension mismatch");
  const Vec& av = a.coords();
  const Vec& bv = b.coords();
  if (std::abs(av.dot(bv)) > 1e-9)
    throw NonOrthonormalAxis("rotation axis pair not orthogonal");
  double xa = av.dot(x);
  double xb = bv.dot(x);
  double c = std::cos(theta);
  double s = std::sin(theta);
  return x + s * (bv * xa - av * xb) + (c - 1.0) * (av * xa + bv * xb);
}

inline UnitVector rotate_along_great_circle(const UnitVector& x,
                                            const UnitVector& a,
                                            const UnitVector& b, double theta) {
  return UnitVector(rotate_along_great_circle(x.coords(), a, b, theta));
}

inline Mat rotate_along_great_circle(const Mat& pts, const UnitVector& a,
                                     const UnitVector& b, double theta) {
  Mat out(pts.rows(), pts.cols());
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    out.row(i) = rotate_along_great_circle(Vec(pts.row(i)), a, b, theta).transpose();
  return out;
}

/// Any unit vector orthogonal to mu; deterministic choice.
inline UnitVector orthogonal_direction(const UnitVector& mu) {
  int d = mu.dim();
  int idx = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(mu.coords()[i]) < std::abs(mu.coords()[idx])) idx = i;
  Vec e = Vec::Zero(d);
  e[idx] = 1.0;
  Vec v = e - mu.coords()[idx] * mu.coords();
  return UnitVector(std::move(v));
}

}  // namespace sphereot
