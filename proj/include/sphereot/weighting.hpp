#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sphereot/autodiff.hpp"
#include "sphereot/common.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Energy kinds
// ---------------------------------------------------------------------------

enum class EnergyKind { Exp, Identity, Poly, Linear, Nonlinear, Attention };

inline bool is_parametric(EnergyKind k) {
  return k == EnergyKind::Linear || k == EnergyKind::Nonlinear ||
         k == EnergyKind::Attention;
}

inline std::string to_string(EnergyKind k) {
  switch (k) {
    case EnergyKind::Exp: return "exp";
    case EnergyKind::Identity: return "identity";
    case EnergyKind::Poly: return "poly";
    case EnergyKind::Linear: return "linear";
    case EnergyKind::Nonlinear: return "nonlinear";
    case EnergyKind::Attention: return "attention";
  }
  throw ConfigError("unknown energy kind");
}

inline EnergyKind energy_kind_from_string(const std::string& s) {
  if (s == "exp") return EnergyKind::Exp;
  if (s == "identity") return EnergyKind::Identity;
  if (s == "poly") return EnergyKind::Poly;
  if (s == "linear") return EnergyKind::Linear;
  if (s == "nonlinear") return EnergyKind::Nonlinear;
  if (s == "attention") return EnergyKind::Attention;
  throw ConfigError("unknown energy kind: " + s);
}

/// Choice and parameters of the projected energy function.
struct EnergySpec {
  EnergyKind kind = EnergyKind::Exp;
  int train_epochs = 50;   // T, parametric kinds only
  double train_lr = 0.05;  // step size for the network update
  bool maximize = false;   // flip the training direction
  bool literal_final_weights = false;  // final weights from g(W) even when trained
  bool zero_init = false;
  int hidden = 64;          // nonlinear hidden width
  int attention_width = 640;

  void validate() const {
    if (train_epochs < 0) throw ConfigError("train_epochs must be >= 0");
    if (is_parametric(kind)) {
      if (!(train_lr > 0.0)) throw ConfigError("train_lr must be positive");
      if (hidden < 1) throw ConfigError("hidden width must be >= 1");
      if (attention_width < 1) throw ConfigError("attention width must be >= 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Direction weights
// ---------------------------------------------------------------------------

struct WeightVector {
  Vec w;
  bool uniform_fallback = false;  // set when all distances were zero
};

inline void validate_weights(const Vec& w) {
  if (w.size() < 1) throw ShapeMismatch("empty weight vector");
  if (!w.allFinite()) throw NumericError("non-finite weights");
  if ((w.array() < 0.0).any() || (w.array() > 1.0).any())
    throw NumericError("weights outside [0, 1]");
  if (std::abs(w.sum() - 1.0) > 1e-9) throw NumericError("weights must sum to 1");
}

/// w_l = g(d_l) / sum_k g(d_k) with g in {exp, identity, poly}. The exp
/// branch is a max-shifted softmax; identity/poly fall back to uniform when
/// every distance is zero (reported via the flag, not an exception).
inline WeightVector nonparametric_weights(const Vec& distances, EnergyKind g_kind) {
  if (is_parametric(g_kind))
    throw ConfigError("nonparametric_weights needs exp/identity/poly");
  Eigen::Index L = distances.size();
  if (L < 1) throw ShapeMismatch("empty distance vector");
  if (!distances.allFinite() || (distances.array() < 0.0).any())
    throw ConfigError("distances must be finite and nonnegative");

  WeightVector out;
  if (g_kind == EnergyKind::Exp) {
    double mx = distances.maxCoeff();
    Vec e = (distances.array() - mx).exp();
    out.w = e / e.sum();
  } else {
    Vec g = g_kind == EnergyKind::Identity
                ? distances
                : Vec(distances.array().square());
    double s = g.sum();
    if (s <= 0.0) {
      out.w = Vec::Constant(L, 1.0 / static_cast<double>(L));
      out.uniform_fallback = true;
      log_msg(LogLevel::Info, "all-zero distances; uniform direction weights");
    } else {
      out.w = g / s;
    }
  }
  validate_weights(out.w);
  return out;
}

// ---------------------------------------------------------------------------
// Parametric networks over projected coordinates
// ---------------------------------------------------------------------------

/// Parameters of the score network h. The input is the L x (m+n) matrix of
/// circle coordinates, one projection direction per row.
///   linear:    row-wise affine map to one score        [w (k x 1), b (1 x 1)]
///   nonlinear: linear scores -> dense -> sigmoid -> dense
///              [w1 (k x 1), b1, w2 (1 x H), b2 (1 x H), w3 (H x 1), b3]
///   attention: Q = A^T Wq, K = A^T Wk in (m+n) x width, V = A^T Wv in
///              (m+n) x L; scores = column means of softmax(QK^T/sqrt(width))V
///              [Wq (L x width), Wk (L x width), Wv (L x L)]
struct NetworkParams {
  EnergyKind kind = EnergyKind::Linear;
  int input_width = 0;  // m + n
  int directions = 0;   // L
  int hidden = 64;
  int attention_width = 640;
  std::vector<Mat> tensors;
};

namespace detail {

inline void fill_uniform(Mat& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = bound * (2.0 * rng.uniform() - 1.0);
}

}  // namespace detail

/// Build a network with symmetric uniform fan-in initialization from a seed.
inline NetworkParams make_network(const EnergySpec& spec, int directions,
                                  int input_width, uint64_t seed) {
  if (!is_parametric(spec.kind))
    throw ConfigError("make_network needs a parametric kind");
  if (directions < 1 || input_width < 1)
    throw ShapeMismatch("network dimensions must be positive");
  NetworkParams net;
  net.kind = spec.kind;
  net.input_width = input_width;
  net.directions = directions;
  net.hidden = spec.hidden;
  net.attention_width = spec.attention_width;

  auto shapes = [&]() -> std::vector<std::pair<Eigen::Index, Eigen::Index>> {
    int k = input_width, H = spec.hidden, L = directions, A = spec.attention_width;
    switch (spec.kind) {
      case EnergyKind::Linear:
        return {{k, 1}, {1, 1}};
      case EnergyKind::Nonlinear:
        return {{k, 1}, {1, 1}, {1, H}, {1, H}, {H, 1}, {1, 1}};
      case EnergyKind::Attention:
        return {{L, A}, {L, A}, {L, L}};
      default:
        throw ConfigError("unreachable");
    }
  }();

  Rng rng(derive_seed(seed, 0x6e6574));
  for (auto [r, c] : shapes) {
    Mat t = Mat::Zero(r, c);
    if (!spec.zero_init) {
      double bound = 1.0 / std::sqrt(static_cast<double>(r));
      detail::fill_uniform(t, bound, rng);
    }
    net.tensors.push_back(std::move(t));
  }
  return net;
}

namespace detail {

struct ScoreGraph {
  ad::Tape tape;
  std::vector<int> params;
  int scores = -1;  // L x 1 node
};

inline void check_network_input(const NetworkParams& net, const Mat& projections) {
  if (projections.rows() != net.directions || projections.cols() != net.input_width)
    throw ShapeMismatch("projection matrix shape does not match network");
}

inline ScoreGraph build_scores(const NetworkParams& net, const Mat& projections) {
  check_network_input(net, projections);
  ScoreGraph g;
  for (const Mat& t : net.tensors) g.params.push_back(g.tape.var(t));
  switch (net.kind) {
    case EnergyKind::Linear: {
      int P = g.tape.var(projections);
      g.scores = g.tape.add_broadcast(g.tape.matmul(P, g.params[0]), g.params[1]);
      break;
    }
    case EnergyKind::Nonlinear: {
      int P = g.tape.var(projections);
      int s0 = g.tape.add_broadcast(g.tape.matmul(P, g.params[0]), g.params[1]);
      int pre = g.tape.add_broadcast(g.tape.matmul(s0, g.params[2]), g.params[3]);
      int h = g.tape.sigmoid(pre);
      g.scores = g.tape.add_broadcast(g.tape.matmul(h, g.params[4]), g.params[5]);
      break;
    }
    case EnergyKind::Attention: {
      int Pt = g.tape.var(projections.transpose());
      int Q = g.tape.matmul(Pt, g.params[0]);
      int K = g.tape.matmul(Pt, g.params[1]);
      int V = g.tape.matmul(Pt, g.params[2]);
      double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(net.attention_width));
      int S = g.tape.softmax_rows(g.tape.scale(g.tape.matmul_nt(Q, K), inv_sqrt));
      g.scores = g.tape.mean_rows(g.tape.matmul(S, V));
      break;
    }
    default:
      throw ConfigError("build_scores needs a parametric kind");
  }
  if (!g.tape.value(g.scores).allFinite())
    throw NonFiniteLoss("non-finite network scores");
  return g;
}

}  // namespace detail

/// Raw scores of the network on the projection matrix, one per direction.
inline Vec network_forward(const NetworkParams& net, const Mat& projections) {
  detail::ScoreGraph g = detail::build_scores(net, projections);
  return g.tape.value(g.scores).col(0);
}

/// Softmax of the network scores; satisfies the weight-vector invariants.
inline WeightVector parametric_weights(const NetworkParams& net,
                                       const Mat& projections) {
  Vec s = network_forward(net, projections);
  double mx = s.maxCoeff();
  Vec e = (s.array() - mx).exp();
  WeightVector out;
  out.w = e / e.sum();
  validate_weights(out.w);
  return out;
}

struct TrainResult {
  NetworkParams net;
  Vec loss_trace;  // loss value at each epoch, before the update
};

/// T full-batch gradient steps on loss(psi) = sum_l softmax(h_psi)_l * W_l
/// with the per-direction distances held fixed. maximize flips the sign of
/// the update.
inline TrainResult train_network(NetworkParams net, const Mat& projections,
                                 const Vec& distances, int T, double lr,
                                 bool maximize) {
  detail::check_network_input(net, projections);
  if (distances.size() != net.directions)
    throw ShapeMismatch("distance vector length does not match directions");
  if (T < 0) throw ConfigError("epoch count must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");

  TrainResult out;
  out.loss_trace = Vec::Zero(T);
  Mat dist_col = distances;
  for (int epoch = 0; epoch < T; ++epoch) {
    detail::ScoreGraph g = detail::build_scores(net, projections);
    int w = g.tape.softmax_vec(g.scores);
    int loss = g.tape.dot(w, g.tape.var(dist_col));
    double value = g.tape.value(loss)(0, 0);
    if (!std::isfinite(value))
      throw NonFiniteLoss("non-finite training loss at epoch " + std::to_string(epoch));
    out.loss_trace[epoch] = value;
    g.tape.backward(loss);
    double step = maximize ? lr : -lr;
    for (size_t i = 0; i < net.tensors.size(); ++i)
      net.tensors[i] += step * g.tape.grad(g.params[i]);
  }
  out.net = std::move(net);
  return out;
}

/// Max relative error between reverse-mode and central finite-difference
/// gradients over every parameter of the training loss.
inline double grad_check(const NetworkParams& net, const Mat& projections,
                         const Vec& distances, double step = 1e-5) {
  Mat dist_col = distances;
  auto loss_value = [&](const NetworkParams& candidate) {
    detail::ScoreGraph g = detail::build_scores(candidate, projections);
    int w = g.tape.softmax_vec(g.scores);
    int loss = g.tape.dot(w, g.tape.var(dist_col));
    return g.tape.value(loss)(0, 0);
  };

  detail::ScoreGraph g = detail::build_scores(net, projections);
  int w = g.tape.softmax_vec(g.scores);
  int loss = g.tape.dot(w, g.tape.var(dist_col));
  g.tape.backward(loss);

  double max_rel = 0.0;
  NetworkParams probe = net;
  for (size_t t = 0; t < net.tensors.size(); ++t) {
    const Mat& analytic = g.tape.grad(g.params[t]);
    for (Eigen::Index i = 0; i < net.tensors[t].rows(); ++i)
      for (Eigen::Index j = 0; j < net.tensors[t].cols(); ++j) {
        double saved = probe.tensors[t](i, j);
        probe.tensors[t](i, j) = saved + step;
        double up = loss_value(probe);
        probe.tensors[t](i, j) = saved - step;
        double down = loss_value(probe);
        probe.tensors[t](i, j) = saved;
        double fd = (up - down) / (2.0 * step);
        double a = analytic(i, j);
        double rel = std::abs(a - fd) / (std::abs(a) + std::abs(fd) + 1e-8);
        max_rel = std::max(max_rel, rel);
      }
  }
  return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline nlohmann::json network_to_json(const NetworkParams& net) {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = to_string(net.kind);
  j["input_width"] = net.input_width;
  j["directions"] = net.directions;
  j["hidden"] = net.hidden;
  j["attention_width"] = net.attention_width;
  nlohmann::json tensors = nlohmann::json::array();
  for (const Mat& t : net.tensors) {
    nlohmann::json jt;
    jt["rows"] = t.rows();
    jt["cols"] = t.cols();
    std::vector<double> data;
    data.reserve(static_cast<size_t>(t.size()));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j2 = 0; j2 < t.cols(); ++j2) data.push_back(t(i, j2));
    jt["data"] = data;
    tensors.push_back(std::move(jt));
  }
  j["tensors"] = std::move(tensors);
  return j;
}

inline NetworkParams network_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1)
    throw ConfigError("unsupported network checkpoint version");
  NetworkParams net;
  net.kind = energy_kind_from_string(j.at("kind").get<std::string>());
  if (!is_parametric(net.kind)) throw ConfigError("checkpoint kind not parametric");
  net.input_width = j.at("input_width").get<int>();
  net.directions = j.at("directions").get<int>();
  net.hidden = j.at("hidden").get<int>();
  net.attention_width = j.at("attention_width").get<int>();
  for (const auto& jt : j.at("tensors")) {
    Eigen::Index r = jt.at("rows").get<Eigen::Index>();
    Eigen::Index c = jt.at("cols").get<Eigen::Index>();
    auto data = jt.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != r * c)
      throw ConfigError("checkpoint tensor payload size mismatch");
    Mat t(r, c);
    size_t idx = 0;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j2 = 0; j2 < c; ++j2) t(i, j2) = data[idx++];
    net.tensors.push_back(std::move(t));
  }
  return net;
}

}  // namespace sphereot
