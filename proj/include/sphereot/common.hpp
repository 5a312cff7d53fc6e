#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sphereot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or input format (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

/// Numerical failure during computation (CLI exit code 3).
struct NumericError : Error {
  using Error::Error;
};

struct DegenerateProjection : NumericError {
  using NumericError::NumericError;
};
struct UnsupportedDimension : ConfigError {
  using ConfigError::ConfigError;
};
struct NonOrthonormalAxis : ConfigError {
  using ConfigError::ConfigError;
};
struct GramSchmidtBreakdown : NumericError {
  using NumericError::NumericError;
};
struct EmptyMeasure : ConfigError {
  using ConfigError::ConfigError;
};
struct NonConvergence : NumericError {
  using NumericError::NumericError;
};
struct SizeMismatch : ConfigError {
  using ConfigError::ConfigError;
};
struct TooLarge : ConfigError {
  using ConfigError::ConfigError;
};
struct ShapeMismatch : ConfigError {
  using ConfigError::ConfigError;
};
struct NonFiniteLoss : NumericError {
  using NumericError::NumericError;
};
struct NonFiniteUpdate : NumericError {
  using NumericError::NumericError;
};
struct NonFinitePotential : NumericError {
  using NumericError::NumericError;
};

// ---------------------------------------------------------------------------
// Logging (SPHEREOT_LOG in {error, warn, info, debug}, default warn)
// ---------------------------------------------------------------------------

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SPHEREOT_LOG");
    if (!env) return LogLevel::Warn;
    std::string s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[sphereot:%s] %s\n", names[static_cast<int>(level)],
               msg.c_str());
}

// ---------------------------------------------------------------------------
// Deterministic random numbers. All draws go through our own transforms so
// that a seed produces the same stream on every platform.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent child seed from a master seed and a stream tag.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream ^ 0x517cc1b727220a95ULL));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed)), inc_(splitmix64(seed ^ 0xda3e39cb94b95bdbULL) | 1ULL) {}

  uint64_t next_u64() {
    // xorshift128+ style step on a splitmix-seeded pair; fixed across platforms.
    uint64_t x = state_;
    uint64_t y = inc_;
    state_ = y;
    x ^= x << 23;
    inc_ = x ^ y ^ (x >> 17) ^ (y >> 26);
    return inc_ + y;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (shape <= 0.0) throw ConfigError("gamma shape must be positive");
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double beta(double a, double b) {
    double ga = gamma(a);
    double gb = gamma(b);
    return ga / (ga + gb);
  }

 private:
  uint64_t state_;
  uint64_t inc_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

/// FNV-1a over raw bytes; used to fingerprint benchmark inputs.
inline uint64_t fnv1a64(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t hash_matrix(const Mat& m, uint64_t h0 = 0xcbf29ce484222325ULL) {
  uint64_t h = h0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double v = m(i, j);
      h ^= fnv1a64(&v, sizeof(v));
      h *= 0x100000001b3ULL;
    }
  return h;
}

/// Run fn(i) for i in [0, count). Work is pulled from an atomic counter;
/// callers get determinism by writing results into per-index slots.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  int workers = std::min(threads, count);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load() && err) std::rethrow_exception(err);
}

inline bool approx_equal(double a, double b, double tol) {
  return std::abs(a - b) <= tol;
}

}  // namespace sphereot
