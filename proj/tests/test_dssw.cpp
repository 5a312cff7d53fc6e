#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sphereot/dssw.hpp"
#include "sphereot/io.hpp"
#include "support/stats.hpp"

using namespace sphereot;

namespace {

Mat random_sphere(int d, int n, uint64_t seed) {
  Rng rng(seed);
  return sample_uniform_sphere(d, n, rng);
}

SlicedConfig base_config(int L = 16, uint64_t seed = 0) {
  SlicedConfig cfg;
  cfg.L = L;
  cfg.seed = seed;
  cfg.energy.kind = EnergyKind::Exp;
  return cfg;
}

double report_recomputed_value(const DistanceReport& rep) {
  double acc = 0.0;
  for (const auto& e : rep.per_direction) acc += e.weight * e.distance;
  return rep.prefactor * acc;
}

}  // namespace

TEST_CASE("sw estimator basics") {
  Mat X = random_sphere(3, 12, 1);
  Mat Y = random_sphere(3, 9, 2);
  SlicedConfig cfg = base_config(32, 5);

  REQUIRE(sw_hat(X, X, cfg) == 0.0);
  REQUIRE(sw_hat(X, Y, cfg) == Catch::Approx(sw_hat(Y, X, cfg)).epsilon(1e-12));
  REQUIRE(sw_hat(X, Y, cfg) > 0.0);
}

TEST_CASE("sw matches a direct per-direction computation for two atoms") {
  Mat X = random_sphere(2, 2, 3);
  Mat Y = random_sphere(2, 2, 4);
  SlicedConfig cfg = base_config(16, 9);
  cfg.p = 2;

  Rng rng(derive_seed(cfg.seed, 0x7377));
  Mat dirs = sample_uniform_sphere(2, cfg.L, rng);
  double acc = 0.0;
  for (int l = 0; l < cfg.L; ++l) {
    double a0 = X.row(0).dot(dirs.row(l)), a1 = X.row(1).dot(dirs.row(l));
    double b0 = Y.row(0).dot(dirs.row(l)), b1 = Y.row(1).dot(dirs.row(l));
    if (a0 > a1) std::swap(a0, a1);
    if (b0 > b1) std::swap(b0, b1);
    acc += 0.5 * ((a0 - b0) * (a0 - b0) + (a1 - b1) * (a1 - b1));
  }
  REQUIRE(sw_hat(X, Y, cfg) == Catch::Approx(acc / cfg.L).epsilon(1e-12));
}

TEST_CASE("ssw estimator basics") {
  Mat X = random_sphere(3, 20, 5);
  Mat Y = random_sphere(3, 14, 6);
  SlicedConfig cfg = base_config(24, 11);

  SECTION("identical inputs give zero") {
    REQUIRE(ssw_hat(X, X, cfg).value == 0.0);
  }
  SECTION("swap symmetry is exact") {
    REQUIRE(ssw_hat(X, Y, cfg).value == ssw_hat(Y, X, cfg).value);
  }
  SECTION("report weights are all one and the value is their mean") {
    DistanceReport rep = ssw_hat(X, Y, cfg);
    for (const auto& e : rep.per_direction) REQUIRE(e.weight == 1.0);
    REQUIRE(rep.value ==
            Catch::Approx(report_recomputed_value(rep)).margin(1e-15));
  }
}

TEST_CASE("on the circle every direction reproduces the circular distance") {
  // d = 2: every frame is an isometry of the circle, so the sliced value
  // equals the direct circular cost for any number of projections.
  Mat X = random_sphere(2, 10, 7);
  Mat Y = random_sphere(2, 8, 8);

  std::vector<double> tx, ty;
  for (int i = 0; i < X.rows(); ++i)
    tx.push_back(detail::circle_coord(X(i, 0), X(i, 1)));
  for (int i = 0; i < Y.rows(); ++i)
    ty.push_back(detail::circle_coord(Y(i, 0), Y(i, 1)));
  double direct = circ_w_binary_search(CircularEmpirical::from_samples(tx),
                                       CircularEmpirical::from_samples(ty), 2);

  for (int L : {1, 3, 8}) {
    SlicedConfig cfg = base_config(L, 13);
    REQUIRE(ssw_hat(X, Y, cfg).value == Catch::Approx(direct).margin(1e-9));
  }
}

TEST_CASE("dssw estimator basics") {
  Mat X = random_sphere(3, 16, 9);
  Mat Y = random_sphere(3, 16, 10);

  SECTION("identical inputs give zero for every kind") {
    for (auto kind : {EnergyKind::Exp, EnergyKind::Identity, EnergyKind::Poly,
                      EnergyKind::Linear, EnergyKind::Nonlinear,
                      EnergyKind::Attention}) {
      SlicedConfig cfg = base_config(8, 21);
      cfg.energy.kind = kind;
      cfg.energy.train_epochs = 2;
      cfg.energy.train_lr = 0.1;
      cfg.energy.attention_width = 16;
      cfg.energy.hidden = 8;
      REQUIRE(dssw_hat(X, X, cfg).value < 1e-12);
    }
  }
  SECTION("a single direction carries weight one") {
    SlicedConfig cfg = base_config(1, 22);
    DistanceReport rep = dssw_hat(X, Y, cfg);
    REQUIRE(rep.per_direction.size() == 1);
    REQUIRE(rep.per_direction[0].weight == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(rep.value ==
            Catch::Approx(rep.per_direction[0].distance).epsilon(1e-12));
  }
  SECTION("value recomputes from the per-direction data") {
    SlicedConfig cfg = base_config(16, 23);
    DistanceReport rep = dssw_hat(X, Y, cfg);
    REQUIRE(std::abs(rep.value - report_recomputed_value(rep)) < 1e-12);
  }
  SECTION("deterministic in the seed") {
    SlicedConfig cfg = base_config(16, 24);
    REQUIRE(dssw_hat(X, Y, cfg).value == dssw_hat(X, Y, cfg).value);
  }
  SECTION("unit prefactor mode scales by L") {
    SlicedConfig cfg = base_config(16, 25);
    double with = dssw_hat(X, Y, cfg).value;
    cfg.unit_prefactor = true;
    double without = dssw_hat(X, Y, cfg).value;
    REQUIRE(without == Catch::Approx(with * 16.0).epsilon(1e-12));
  }
}

TEST_CASE("uniform weights reduce dssw to ssw over L") {
  SECTION("zero-initialized parametric network with T = 0") {
    Mat X = random_sphere(3, 24, 31);
    Mat Y = random_sphere(3, 18, 32);
    SlicedConfig cfg = base_config(16, 33);
    cfg.energy.kind = EnergyKind::Linear;
    cfg.energy.zero_init = true;
    cfg.energy.train_epochs = 0;
    double dssw = dssw_hat(X, Y, cfg).value;
    double ssw = ssw_hat(X, Y, cfg).value;
    REQUIRE(std::abs(dssw - ssw / 16.0) < 1e-12);
  }
  SECTION("equal distances on the circle") {
    Mat X = random_sphere(2, 12, 34);
    Mat Y = random_sphere(2, 12, 35);
    for (auto kind : {EnergyKind::Exp, EnergyKind::Identity, EnergyKind::Poly}) {
      SlicedConfig cfg = base_config(8, 36);
      cfg.energy.kind = kind;
      double dssw = dssw_hat(X, Y, cfg).value;
      double ssw = ssw_hat(X, Y, cfg).value;
      REQUIRE(std::abs(dssw - ssw / 8.0) < 1e-12);
    }
  }
}

TEST_CASE("literal final-weight mode matches the exp energy") {
  Mat X = random_sphere(3, 14, 41);
  Mat Y = random_sphere(3, 11, 42);
  SlicedConfig lin = base_config(12, 43);
  lin.energy.kind = EnergyKind::Linear;
  lin.energy.train_epochs = 3;
  lin.energy.literal_final_weights = true;
  SlicedConfig exp_cfg = base_config(12, 43);
  exp_cfg.energy.kind = EnergyKind::Exp;
  REQUIRE(dssw_hat(X, Y, lin).value == dssw_hat(X, Y, exp_cfg).value);
}

TEST_CASE("dssw is positive and exactly symmetric across kinds") {
  Rng seeds(55);
  for (int k = 0; k < 60; ++k) {
    int d = k % 3 == 0 ? 3 : (k % 3 == 1 ? 5 : 10);
    Mat X = random_sphere(d, 4 + static_cast<int>(seeds.next_u64() % 12),
                          1000 + k);
    Mat Y = random_sphere(d, 4 + static_cast<int>(seeds.next_u64() % 12),
                          2000 + k);
    SlicedConfig cfg = base_config(8, 3000 + k);
    static const EnergyKind kinds[] = {EnergyKind::Exp,    EnergyKind::Identity,
                                       EnergyKind::Poly,   EnergyKind::Linear,
                                       EnergyKind::Nonlinear,
                                       EnergyKind::Attention};
    cfg.energy.kind = kinds[k % 6];
    cfg.energy.train_epochs = 2;
    cfg.energy.attention_width = 8;
    cfg.energy.hidden = 6;
    double xy = dssw_hat(X, Y, cfg).value;
    double yx = dssw_hat(Y, X, cfg).value;
    REQUIRE(xy >= 0.0);
    REQUIRE(xy == yx);
  }
}

TEST_CASE("level median solver plugs into the estimators") {
  Mat X = random_sphere(3, 10, 61);
  Mat Y = random_sphere(3, 12, 62);
  SlicedConfig cfg = base_config(16, 63);
  cfg.p = 1;
  cfg.solver = CircularSolver::LevelMedian;
  SlicedConfig bs = cfg;
  bs.solver = CircularSolver::BinarySearch;
  REQUIRE(ssw_hat(X, Y, cfg).value ==
          Catch::Approx(ssw_hat(X, Y, bs).value).margin(1e-6));

  cfg.p = 2;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("vs-uniform estimator agrees with a large uniform sample") {
  Mat X = random_sphere(3, 80, 71);
  SlicedConfig cfg = base_config(24, 72);
  cfg.solver = CircularSolver::VsUniform;
  double closed = ssw_hat_uniform(X, cfg).value;

  Mat U = random_sphere(3, 4000, 73);
  SlicedConfig cfg2 = base_config(24, 72);
  double sampled = ssw_hat(X, U, cfg2).value;
  REQUIRE(closed == Catch::Approx(sampled).margin(2e-3));

  REQUIRE_THROWS_AS(ssw_hat(X, X, cfg), ConfigError);
  REQUIRE_THROWS_AS(ssw_hat_uniform(X, cfg2), ConfigError);
}

TEST_CASE("distance report serializes to JSON and back") {
  Mat X = random_sphere(3, 8, 81);
  Mat Y = random_sphere(3, 8, 82);
  SlicedConfig cfg = base_config(6, 83);
  DistanceReport rep = dssw_hat(X, Y, cfg);
  rep.wallclock_seconds = 1.25;
  DistanceReport back = report_from_json(report_to_json(rep, true));
  REQUIRE(back.value == rep.value);
  REQUIRE(back.frames_seed == rep.frames_seed);
  REQUIRE(back.prefactor == rep.prefactor);
  REQUIRE(back.wallclock_seconds == 1.25);
  REQUIRE(back.per_direction.size() == rep.per_direction.size());
  for (size_t i = 0; i < rep.per_direction.size(); ++i) {
    REQUIRE(back.per_direction[i].distance == rep.per_direction[i].distance);
    REQUIRE(back.per_direction[i].weight == rep.per_direction[i].weight);
  }
  // timing is zeroed unless requested
  REQUIRE(report_from_json(report_to_json(rep)).wallclock_seconds == 0.0);
}

TEST_CASE("threaded evaluation is bit-identical to sequential") {
  Mat X = random_sphere(4, 40, 91);
  Mat Y = random_sphere(4, 30, 92);
  SlicedConfig cfg = base_config(32, 93);
  double seq = dssw_hat(X, Y, cfg).value;
  cfg.threads = 4;
  double par = dssw_hat(X, Y, cfg).value;
  REQUIRE(seq == par);

  SlicedConfig gcfg = base_config(32, 93);
  GradientResult g1 = dssw_gradient(X, Y, gcfg);
  gcfg.threads = 4;
  GradientResult g2 = dssw_gradient(X, Y, gcfg);
  REQUIRE((g1.grad - g2.grad).norm() == 0.0);
}

TEST_CASE("dssw gradients") {
  Rng rng(101);
  Mat X = sample_vmf(VmfComponent(UnitVector::axis(3, 0), 4.0), 8, rng);
  Mat Y = sample_vmf(VmfComponent(UnitVector::axis(3, 2), 6.0), 10, rng);

  SECTION("zero at a global minimum") {
    SlicedConfig cfg = base_config(8, 111);
    GradientResult g = dssw_gradient(X, X, cfg);
    REQUIRE(g.grad.cwiseAbs().maxCoeff() < 1e-9);
  }

  SECTION("rows are tangent to the sphere") {
    SlicedConfig cfg = base_config(16, 112);
    GradientResult g = dssw_gradient(X, Y, cfg);
    for (int i = 0; i < X.rows(); ++i)
      REQUIRE(std::abs(g.grad.row(i).dot(X.row(i))) < 1e-9);
  }

  SECTION("matches central finite differences in the tangent space") {
    SlicedConfig cfg = base_config(8, 113);
    cfg.solver_tol = 1e-10;
    FrameBatch frames = sample_frames(3, cfg.L, cfg.seed);
    DistanceReport rep = dssw_hat(X, Y, cfg);
    Vec weights(cfg.L);
    for (int l = 0; l < cfg.L; ++l) weights[l] = rep.per_direction[l].weight;
    GradientResult g = dssw_gradient(X, Y, cfg);

    const double h = 1e-6;
    Rng drng(114);
    double max_rel = 0.0;
    for (int i = 0; i < X.rows(); ++i) {
      Vec x = X.row(i);
      Vec v(3);
      for (int j = 0; j < 3; ++j) v[j] = drng.normal();
      v -= v.dot(x) * x;
      v /= v.norm();
      auto shifted = [&](double eps) {
        Mat Xp = X;
        Vec moved = x + eps * v;
        Xp.row(i) = moved.transpose() / moved.norm();
        return frozen_weight_value(Xp, Y, frames, weights, cfg);
      };
      double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
      double an = g.grad.row(i).dot(v);
      double rel = std::abs(fd - an) / (std::abs(fd) + std::abs(an) + 1e-10);
      max_rel = std::max(max_rel, rel);
    }
    REQUIRE(max_rel < 1e-4);
  }

  SECTION("sw gradients also match finite differences") {
    SlicedConfig cfg = base_config(8, 115);
    GradientResult g = sliced_gradient(X, Y, cfg, SlicedMethod::Sw);
    Rng rng2(derive_seed(cfg.seed, 0x7377));
    Mat dirs = sample_uniform_sphere(3, cfg.L, rng2);
    auto value = [&](const Mat& Xp) {
      double acc = 0.0;
      for (int l = 0; l < cfg.L; ++l) {
        Vec a = Xp * dirs.row(l).transpose();
        Vec b = Y * dirs.row(l).transpose();
        std::sort(a.data(), a.data() + a.size());
        std::sort(b.data(), b.data() + b.size());
        acc += detail::line_cost_impl(a, b, cfg.p, 0.0, nullptr, nullptr);
      }
      return acc / cfg.L;
    };
    const double h = 1e-6;
    Rng drng(116);
    for (int i = 0; i < 4; ++i) {
      Vec x = X.row(i);
      Vec v(3);
      for (int j = 0; j < 3; ++j) v[j] = drng.normal();
      v -= v.dot(x) * x;
      v /= v.norm();
      Mat Xp = X, Xm = X;
      Vec up = x + h * v, dn = x - h * v;
      Xp.row(i) = up.transpose() / up.norm();
      Xm.row(i) = dn.transpose() / dn.norm();
      double fd = (value(Xp) - value(Xm)) / (2.0 * h);
      double an = g.grad.row(i).dot(v);
      REQUIRE(std::abs(fd - an) / (std::abs(fd) + std::abs(an) + 1e-10) < 1e-4);
    }
  }

  SECTION("vs-uniform gradients match finite differences") {
    SlicedConfig cfg = base_config(8, 117);
    cfg.solver = CircularSolver::VsUniform;
    GradientResult g = sliced_gradient_uniform(X, cfg, SlicedMethod::Ssw);
    FrameBatch frames = sample_frames(3, cfg.L, cfg.seed);
    auto value = [&](const Mat& Xp) {
      Vec dist = detail::direction_distances(Xp, nullptr, frames, cfg, nullptr,
                                             nullptr);
      return dist.mean();
    };
    const double h = 1e-6;
    Rng drng(118);
    for (int i = 0; i < 4; ++i) {
      Vec x = X.row(i);
      Vec v(3);
      for (int j = 0; j < 3; ++j) v[j] = drng.normal();
      v -= v.dot(x) * x;
      v /= v.norm();
      Mat Xp = X, Xm = X;
      Vec up = x + h * v, dn = x - h * v;
      Xp.row(i) = up.transpose() / up.norm();
      Xm.row(i) = dn.transpose() / dn.norm();
      double fd = (value(Xp) - value(Xm)) / (2.0 * h);
      double an = g.grad.row(i).dot(v);
      REQUIRE(std::abs(fd - an) / (std::abs(fd) + std::abs(an) + 1e-10) < 1e-4);
    }
  }
}

TEST_CASE("same-law estimates shrink with the sample size") {
  // two independent draws from one vMF; the estimator median decreases in n
  std::vector<int> sizes = {100, 1000, 4000};
  std::vector<double> medians;
  for (int n : sizes) {
    std::vector<double> vals;
    for (uint64_t s = 0; s < 6; ++s) {
      Rng r1(derive_seed(s, 1)), r2(derive_seed(s, 2));
      VmfComponent comp(UnitVector::axis(3, 0), 10.0);
      Mat X = sample_vmf(comp, n, r1);
      Mat Y = sample_vmf(comp, n, r2);
      SlicedConfig cfg = base_config(24, 500 + s);
      vals.push_back(dssw_hat(X, Y, cfg).value);
    }
    medians.push_back(testsupport::median_of(vals));
  }
  REQUIRE(medians[1] < medians[0]);
  REQUIRE(medians[2] < medians[1]);
}
