#pragma once

#include <utility>
#include <vector>

#include "sphereot/common.hpp"
#include "sphereot/sphere.hpp"

namespace sphereot {

/// Modified Gram-Schmidt on a d x 2 matrix. The columns are normalized by
/// their (positive) norms, so the implicit R has a positive diagonal and the
/// result is distributed uniformly on the Stiefel manifold when Z is
/// standard Gaussian.
inline StiefelFrame orthonormalize_columns(const Mat& z) {
  if (z.rows() < 2 || z.cols() != 2)
    throw ConfigError("orthonormalize_columns expects a d x 2 matrix, d >= 2");
  constexpr double kBreakdown = 1e-12;
  Eigen::Matrix<double, Eigen::Dynamic, 2> q(z.rows(), 2);
  Vec c0 = z.col(0);
  double r00 = c0.norm();
  if (!(r00 > kBreakdown)) throw GramSchmidtBreakdown("first column underflow");
  q.col(0) = c0 / r00;
  Vec c1 = z.col(1);
  c1 -= q.col(0).dot(c1) * q.col(0);
  double r11 = c1.norm();
  if (!(r11 > kBreakdown)) throw GramSchmidtBreakdown("second column underflow");
  q.col(1) = c1 / r11;
  return StiefelFrame{std::move(q)};
}

/// A batch of great-circle frames drawn from the uniform distribution on
/// the Stiefel manifold; immutable after construction.
struct FrameBatch {
  std::vector<StiefelFrame> frames;
  uint64_t seed = 0;
  int d = 0;
  int L = 0;
};

/// Draw L i.i.d. frames by QR of d x 2 standard-Gaussian matrices.
/// Deterministic: the same seed yields bit-identical frames.
inline FrameBatch sample_frames(int d, int L, uint64_t seed) {
  if (d < 2) throw ConfigError("frame dimension must be >= 2");
  if (L < 1) throw ConfigError("frame count must be >= 1");
  Rng rng(derive_seed(seed, 0x5f7a6e));
  FrameBatch batch;
  batch.seed = seed;
  batch.d = d;
  batch.L = L;
  batch.frames.reserve(L);
  Mat z(d, 2);
  for (int l = 0; l < L; ++l) {
    int attempts = 0;
    for (;;) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < 2; ++j) z(i, j) = rng.normal();
      try {
        batch.frames.push_back(orthonormalize_columns(z));
        break;
      } catch (const GramSchmidtBreakdown&) {
        if (++attempts > 8) throw;
      }
    }
  }
  return batch;
}

}  // namespace sphereot
