#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sphereot/weighting.hpp"

using namespace sphereot;

namespace {

Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

EnergySpec spec_of(EnergyKind kind, int hidden = 8, int attn = 16) {
  EnergySpec s;
  s.kind = kind;
  s.hidden = hidden;
  s.attention_width = attn;
  return s;
}

}  // namespace

TEST_CASE("nonparametric weights on fixed inputs") {
  auto w1 = nonparametric_weights(make_vec({1.0, 3.0}), EnergyKind::Identity);
  REQUIRE(w1.w[0] == Catch::Approx(0.25).epsilon(1e-12));
  REQUIRE(w1.w[1] == Catch::Approx(0.75).epsilon(1e-12));

  auto w2 = nonparametric_weights(make_vec({1.0, 2.0}), EnergyKind::Poly);
  REQUIRE(w2.w[0] == Catch::Approx(0.2).epsilon(1e-12));
  REQUIRE(w2.w[1] == Catch::Approx(0.8).epsilon(1e-12));

  auto w3 = nonparametric_weights(make_vec({std::log(2.0), 0.0}), EnergyKind::Exp);
  REQUIRE(w3.w[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  REQUIRE(w3.w[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

  for (auto kind : {EnergyKind::Exp, EnergyKind::Identity, EnergyKind::Poly}) {
    auto w = nonparametric_weights(Vec::Constant(7, 0.42), kind);
    for (int l = 0; l < 7; ++l)
      REQUIRE(w.w[l] == Catch::Approx(1.0 / 7.0).epsilon(1e-12));
  }
}

TEST_CASE("all-zero distances fall back to uniform with a flag") {
  for (auto kind : {EnergyKind::Identity, EnergyKind::Poly}) {
    auto w = nonparametric_weights(Vec::Zero(5), kind);
    REQUIRE(w.uniform_fallback);
    for (int l = 0; l < 5; ++l)
      REQUIRE(w.w[l] == Catch::Approx(0.2).epsilon(1e-12));
  }
  // exp of all zeros is already uniform without the fallback path
  auto w = nonparametric_weights(Vec::Zero(5), EnergyKind::Exp);
  REQUIRE_FALSE(w.uniform_fallback);
  REQUIRE(w.w[0] == Catch::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("weight invariants hold on random inputs") {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    int L = 2 + static_cast<int>(rng.next_u64() % 31);
    Vec d(L);
    for (int l = 0; l < L; ++l) d[l] = std::abs(rng.normal()) * 0.3 + 1e-12;
    auto kind = k % 3 == 0   ? EnergyKind::Exp
                : k % 3 == 1 ? EnergyKind::Identity
                             : EnergyKind::Poly;
    auto w = nonparametric_weights(d, kind);
    REQUIRE((w.w.array() > 0.0).all());
    REQUIRE((w.w.array() < 1.0).all());
    REQUIRE(std::abs(w.w.sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("scaling distances preserves the weight ordering") {
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    Vec d(6);
    for (int l = 0; l < 6; ++l) d[l] = std::abs(rng.normal()) + 1e-6;
    double c = 0.01 + 10.0 * rng.uniform();
    for (auto kind : {EnergyKind::Identity, EnergyKind::Poly}) {
      auto w = nonparametric_weights(d, kind);
      auto ws = nonparametric_weights(Vec(c * d), kind);
      Eigen::Index arg1, arg2;
      w.w.maxCoeff(&arg1);
      ws.w.maxCoeff(&arg2);
      REQUIRE(arg1 == arg2);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          if (d[i] < d[j]) REQUIRE(ws.w[i] <= ws.w[j] + 1e-12);
    }
  }
}

TEST_CASE("weights are monotone in their own distance") {
  Rng rng(3);
  for (auto kind : {EnergyKind::Exp, EnergyKind::Identity, EnergyKind::Poly}) {
    for (int k = 0; k < 100; ++k) {
      Vec d(5);
      for (int l = 0; l < 5; ++l) d[l] = std::abs(rng.normal()) + 1e-6;
      auto base = nonparametric_weights(d, kind);
      Vec d2 = d;
      d2[2] += 0.5;
      auto bumped = nonparametric_weights(d2, kind);
      REQUIRE(bumped.w[2] >= base.w[2] - 1e-12);
    }
  }
}

TEST_CASE("linear network forward") {
  SECTION("zero weights give uniform softmax weights") {
    EnergySpec s = spec_of(EnergyKind::Linear);
    s.zero_init = true;
    NetworkParams net = make_network(s, 4, 6, 0);
    Mat P = Mat::Random(4, 6).cwiseAbs();
    Vec scores = network_forward(net, P);
    REQUIRE(scores.norm() == 0.0);
    auto w = parametric_weights(net, P);
    for (int l = 0; l < 4; ++l)
      REQUIRE(w.w[l] == Catch::Approx(0.25).epsilon(1e-14));
  }
  SECTION("permuting input rows permutes scores") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 5, 3, 7);
    Mat P = Mat::Random(5, 3);
    Vec scores = network_forward(net, P);
    Mat Pp(5, 3);
    std::vector<int> perm = {3, 0, 4, 1, 2};
    for (int l = 0; l < 5; ++l) Pp.row(l) = P.row(perm[l]);
    Vec sp = network_forward(net, Pp);
    for (int l = 0; l < 5; ++l)
      REQUIRE(sp[l] == Catch::Approx(scores[perm[l]]).epsilon(1e-14));
  }
  SECTION("shape mismatch is rejected") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 5, 3, 7);
    REQUIRE_THROWS_AS(network_forward(net, Mat::Random(5, 4)), ShapeMismatch);
    REQUIRE_THROWS_AS(network_forward(net, Mat::Random(4, 3)), ShapeMismatch);
  }
}

TEST_CASE("nonlinear network matches a hand-rolled forward pass") {
  EnergySpec s = spec_of(EnergyKind::Nonlinear, /*hidden=*/3);
  NetworkParams net = make_network(s, 2, 4, 11);
  Mat P(2, 4);
  P << 0.1, 0.7, 0.3, 0.9,
       0.5, 0.2, 0.8, 0.4;
  Vec scores = network_forward(net, P);

  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (int l = 0; l < 2; ++l) {
    double s0 = net.tensors[1](0, 0);
    for (int j = 0; j < 4; ++j) s0 += P(l, j) * net.tensors[0](j, 0);
    double expect = net.tensors[5](0, 0);
    for (int h = 0; h < 3; ++h) {
      double pre = s0 * net.tensors[2](0, h) + net.tensors[3](0, h);
      expect += sigmoid(pre) * net.tensors[4](h, 0);
    }
    REQUIRE(scores[l] == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("parametric weights are softmax weights") {
  SECTION("adding a constant to all scores leaves weights unchanged") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 6, 4, 3);
    Mat P = Mat::Random(6, 4);
    auto w = parametric_weights(net, P);
    NetworkParams shifted = net;
    shifted.tensors[1](0, 0) += 3.7;  // bias shifts every score
    auto w2 = parametric_weights(shifted, P);
    for (int l = 0; l < 6; ++l)
      REQUIRE(w.w[l] == Catch::Approx(w2.w[l]).margin(1e-12));
  }
  SECTION("scores ln2 and 0 give weights 2/3 and 1/3") {
    EnergySpec s = spec_of(EnergyKind::Linear);
    s.zero_init = true;
    NetworkParams net = make_network(s, 2, 1, 0);
    net.tensors[0](0, 0) = std::log(2.0);
    Mat P(2, 1);
    P << 1.0, 0.0;
    auto w = parametric_weights(net, P);
    REQUIRE(w.w[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    REQUIRE(w.w[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("training behavior") {
  SECTION("zero epochs leave the network unchanged") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 4, 3, 5);
    Mat P = Mat::Random(4, 3);
    auto result = train_network(net, P, Vec::Ones(4), 0, 0.1, false);
    REQUIRE(result.loss_trace.size() == 0);
    for (size_t t = 0; t < net.tensors.size(); ++t)
      REQUIRE((result.net.tensors[t] - net.tensors[t]).norm() == 0.0);
  }
  SECTION("a single direction has constant loss and zero gradient") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 1, 3, 5);
    Mat P = Mat::Random(1, 3);
    Vec dist = make_vec({0.42});
    auto result = train_network(net, P, dist, 5, 0.5, false);
    for (int e = 0; e < 5; ++e)
      REQUIRE(result.loss_trace[e] == Catch::Approx(0.42).epsilon(1e-14));
    for (size_t t = 0; t < net.tensors.size(); ++t)
      REQUIRE((result.net.tensors[t] - net.tensors[t]).norm() == 0.0);
    REQUIRE(grad_check(net, P, dist) < 1e-12);
  }
  SECTION("descent shifts weight away from the larger distance") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 2, 4, 9);
    Mat P = Mat::Random(2, 4);
    Vec dist = make_vec({0.0, 1.0});
    double prev = parametric_weights(net, P).w[1];
    for (int e = 0; e < 20; ++e) {
      net = train_network(net, P, dist, 1, 0.05, false).net;
      double cur = parametric_weights(net, P).w[1];
      REQUIRE(cur < prev);
      prev = cur;
    }
  }
  SECTION("maximize flips the direction") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 2, 4, 9);
    Mat P = Mat::Random(2, 4);
    Vec dist = make_vec({0.0, 1.0});
    double before = parametric_weights(net, P).w[1];
    net = train_network(net, P, dist, 10, 0.05, true).net;
    REQUIRE(parametric_weights(net, P).w[1] > before);
  }
  SECTION("loss trace is non-increasing for a small step size") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 8, 5, 13);
    Mat P = Mat::Random(8, 5);
    Rng rng(21);
    Vec dist(8);
    for (int l = 0; l < 8; ++l) dist[l] = std::abs(rng.normal()) * 0.2;
    auto result = train_network(net, P, dist, 40, 1e-3, false);
    for (int e = 1; e < 40; ++e)
      REQUIRE(result.loss_trace[e] <= result.loss_trace[e - 1] + 1e-12);
  }
  SECTION("non-finite parameters abort with NonFiniteLoss") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 2, 3, 5);
    net.tensors[0](0, 0) = std::numeric_limits<double>::infinity();
    Mat P = Mat::Random(2, 3).cwiseAbs();
    REQUIRE_THROWS_AS(train_network(net, P, Vec::Ones(2), 3, 0.1, false),
                      NonFiniteLoss);
  }
}

TEST_CASE("reverse-mode gradients match finite differences") {
  Rng rng(17);
  auto random_projections = [&](int L, int k) {
    Mat P(L, k);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < k; ++j) P(i, j) = rng.uniform();
    return P;
  };
  Vec dist(6);
  for (int l = 0; l < 6; ++l) dist[l] = std::abs(rng.normal()) * 0.2;

  SECTION("linear") {
    NetworkParams net = make_network(spec_of(EnergyKind::Linear), 6, 10, 23);
    REQUIRE(grad_check(net, random_projections(6, 10), dist) < 1e-4);
  }
  SECTION("nonlinear") {
    NetworkParams net = make_network(spec_of(EnergyKind::Nonlinear, 8), 6, 10, 29);
    REQUIRE(grad_check(net, random_projections(6, 10), dist) < 1e-4);
  }
  SECTION("attention") {
    NetworkParams net =
        make_network(spec_of(EnergyKind::Attention, 8, 16), 6, 10, 31);
    REQUIRE(grad_check(net, random_projections(6, 10), dist) < 1e-3);
  }
}

TEST_CASE("network checkpoints round-trip") {
  for (auto kind : {EnergyKind::Linear, EnergyKind::Nonlinear, EnergyKind::Attention}) {
    NetworkParams net = make_network(spec_of(kind, 5, 12), 4, 7, 41);
    NetworkParams back = network_from_json(network_to_json(net));
    REQUIRE(back.kind == net.kind);
    REQUIRE(back.input_width == net.input_width);
    REQUIRE(back.directions == net.directions);
    REQUIRE(back.tensors.size() == net.tensors.size());
    for (size_t t = 0; t < net.tensors.size(); ++t)
      REQUIRE((back.tensors[t] - net.tensors[t]).norm() == 0.0);
    Mat P = Mat::Random(4, 7);
    REQUIRE((network_forward(back, P) - network_forward(net, P)).norm() == 0.0);
  }
}
