#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sphereot/circular.hpp"
#include "sphereot/common.hpp"

using namespace sphereot;

namespace {

CircularEmpirical meas(std::vector<double> ts) {
  return CircularEmpirical::from_samples(std::move(ts));
}

CircularEmpirical random_measure(int n, Rng& rng) {
  std::vector<double> ts(n);
  for (int i = 0; i < n; ++i) ts[i] = rng.uniform();
  return CircularEmpirical::from_samples(std::move(ts));
}

}  // namespace

TEST_CASE("level median W1 on fixed cases") {
  REQUIRE(circ_w1_level_median(meas({0.1, 0.4, 0.9}), meas({0.1, 0.4, 0.9})) == 0.0);
  REQUIRE(circ_w1_level_median(meas({0.0}), meas({0.5})) == Catch::Approx(0.5));
  REQUIRE(circ_w1_level_median(meas({0.1, 0.6}), meas({0.2, 0.7})) ==
          Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("binary search solver on fixed cases") {
  SECTION("identical atom sets give exactly zero") {
    auto m = meas({0.05, 0.3, 0.31, 0.9});
    REQUIRE(circ_w_binary_search(m, m, 2) == 0.0);
    REQUIRE(circ_w_binary_search(m, m, 1) == 0.0);
  }
  SECTION("antipodal singletons, p = 2") {
    REQUIRE(circ_w_binary_search(meas({0.0}), meas({0.25}), 2) ==
            Catch::Approx(0.0625).margin(1e-8));
  }
  SECTION("symmetric two-atom pair, p = 2") {
    REQUIRE(circ_w_binary_search(meas({0.0, 0.5}), meas({0.25, 0.75}), 2) ==
            Catch::Approx(0.0625).margin(1e-8));
  }
  SECTION("invalid arguments") {
    auto m = meas({0.2});
    REQUIRE_THROWS_AS(circ_w_binary_search(m, m, 3), ConfigError);
    REQUIRE_THROWS_AS(circ_w_binary_search(m, m, 2, -1.0), ConfigError);
    REQUIRE_THROWS_AS(CircularEmpirical::from_samples({}), EmptyMeasure);
  }
  SECTION("tolerance below float resolution does not converge") {
    auto a = meas({0.1, 0.37});
    auto b = meas({0.6, 0.8});
    REQUIRE_THROWS_AS(circ_w_binary_search(a, b, 2, 1e-300), NonConvergence);
  }
}

TEST_CASE("level median agrees with the shift solver at p = 1") {
  Rng rng(42);
  for (int k = 0; k < 50; ++k) {
    auto a = random_measure(3 + static_cast<int>(rng.next_u64() % 9), rng);
    auto b = random_measure(3 + static_cast<int>(rng.next_u64() % 9), rng);
    double lm = circ_w1_level_median(a, b);
    double bs = circ_w_binary_search(a, b, 1);
    REQUIRE(lm == Catch::Approx(bs).margin(1e-7));
  }
}

TEST_CASE("closed-form W2 against the uniform measure") {
  SECTION("equally spaced atoms give 1/(12 n^2)") {
    for (int n : {1, 2, 5, 16, 81}) {
      std::vector<double> ts(n);
      for (int i = 0; i < n; ++i) ts[i] = static_cast<double>(i) / n;
      REQUIRE(circ_w2_vs_uniform(meas(ts)) ==
              Catch::Approx(1.0 / (12.0 * n * n)).margin(1e-9));
    }
  }
  SECTION("single atom integrates the squared circular distance") {
    // quadrature oracle: int_0^1 d_circ(x, u)^2 du = 1/12 for any atom
    double x = 0.37;
    const int grid = 1000000;
    double quad = 0.0;
    for (int g = 0; g < grid; ++g) {
      double u = (g + 0.5) / grid;
      double diff = std::abs(x - u);
      double circ = std::min(diff, 1.0 - diff);
      quad += circ * circ / grid;
    }
    REQUIRE(quad == Catch::Approx(1.0 / 12.0).margin(1e-6));
    REQUIRE(circ_w2_vs_uniform(meas({x})) == Catch::Approx(1.0 / 12.0).margin(1e-9));
  }
  SECTION("fine uniform grid converges to zero") {
    std::vector<double> ts(1000);
    for (int i = 0; i < 1000; ++i) ts[i] = i / 1000.0;
    REQUIRE(circ_w2_vs_uniform(meas(ts)) <= 1e-6);
  }
  SECTION("agrees with the shift solver on a discretized uniform") {
    Rng rng(5);
    auto mu = random_measure(40, rng);
    std::vector<double> grid(10000);
    for (int i = 0; i < 10000; ++i) grid[i] = (i + 0.5) / 10000.0;
    double via_solver = circ_w_binary_search(mu, meas(grid), 2);
    REQUIRE(circ_w2_vs_uniform(mu) == Catch::Approx(via_solver).margin(1e-3));
  }
}

TEST_CASE("brute-force oracle behavior") {
  SECTION("identical sets give zero") {
    auto m = meas({0.1, 0.5, 0.9});
    REQUIRE(brute_force_circ_w(m, m, 2, 1000) == 0.0);
  }
  SECTION("antipodal singletons, p = 1") {
    REQUIRE(brute_force_circ_w(meas({0.0}), meas({0.5}), 1, 2000) ==
            Catch::Approx(0.5).margin(1.0 / 2000));
  }
  SECTION("nested grid refinement is non-increasing") {
    Rng rng(11);
    auto a = random_measure(6, rng);
    auto b = random_measure(6, rng);
    double coarse = brute_force_circ_w(a, b, 2, 2000);
    double fine = brute_force_circ_w(a, b, 2, 4000);
    double finer = brute_force_circ_w(a, b, 2, 8000);
    REQUIRE(fine <= coarse + 1e-15);
    REQUIRE(finer <= fine + 1e-15);
  }
  SECTION("guards") {
    auto a = meas({0.1, 0.2});
    auto b = meas({0.3});
    REQUIRE_THROWS_AS(brute_force_circ_w(a, b, 2, 1000), SizeMismatch);
    std::vector<double> big(13);
    for (int i = 0; i < 13; ++i) big[i] = i / 13.0;
    auto m13 = meas(big);
    REQUIRE_THROWS_AS(brute_force_circ_w(m13, m13, 2, 1000), TooLarge);
    REQUIRE_THROWS_AS(brute_force_circ_w(a, a, 2, 10), ConfigError);
  }
}

TEST_CASE("solver matches the brute-force oracle on random pairs") {
  Rng rng(2024);
  const int grid = 100000;
  for (int k = 0; k < 60; ++k) {
    int n = 2 + static_cast<int>(rng.next_u64() % 7);
    auto a = random_measure(n, rng);
    auto b = random_measure(n, rng);
    for (int p : {1, 2}) {
      double solver = circ_w_binary_search(a, b, p);
      double oracle = brute_force_circ_w(a, b, p, grid);
      REQUIRE(std::abs(solver - oracle) <= 2.0 / grid + 1e-8);
    }
  }
}

TEST_CASE("rotation invariance of the circular distance") {
  Rng rng(31);
  for (int k = 0; k < 20; ++k) {
    auto a = random_measure(7, rng);
    auto b = random_measure(5, rng);
    double delta = rng.uniform();
    auto shift = [&](const CircularEmpirical& m) {
      std::vector<double> ts;
      for (int i = 0; i < m.size(); ++i) {
        double t = m.atoms()[i] + delta;
        if (t >= 1.0) t -= 1.0;
        ts.push_back(t);
      }
      return CircularEmpirical::from_samples(std::move(ts));
    };
    for (int p : {1, 2}) {
      double base = circ_w_binary_search(a, b, p);
      double moved = circ_w_binary_search(shift(a), shift(b), p);
      REQUIRE(std::abs(base - moved) < 1e-9);
    }
    double lm = circ_w1_level_median(a, b);
    double lm_moved = circ_w1_level_median(shift(a), shift(b));
    REQUIRE(std::abs(lm - lm_moved) < 1e-9);
  }
}

TEST_CASE("symmetry is exact") {
  Rng rng(77);
  for (int k = 0; k < 40; ++k) {
    auto a = random_measure(6, rng);
    auto b = random_measure(9, rng);
    REQUIRE(circ_w_binary_search(a, b, 2) == circ_w_binary_search(b, a, 2));
    REQUIRE(circ_w_binary_search(a, b, 1) == circ_w_binary_search(b, a, 1));
    REQUIRE(circ_w1_level_median(a, b) == circ_w1_level_median(b, a));
  }
}

TEST_CASE("W1 satisfies the triangle inequality") {
  Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    auto a = random_measure(8, rng);
    auto b = random_measure(8, rng);
    auto c = random_measure(8, rng);
    double ab = circ_w1_level_median(a, b);
    double bc = circ_w1_level_median(b, c);
    double ac = circ_w1_level_median(a, c);
    REQUIRE(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("distances respect the circle diameter bound") {
  Rng rng(99);
  for (int k = 0; k < 50; ++k) {
    auto a = random_measure(1 + static_cast<int>(rng.next_u64() % 10), rng);
    auto b = random_measure(1 + static_cast<int>(rng.next_u64() % 10), rng);
    REQUIRE(circ_w1_level_median(a, b) <= 0.5 + 1e-12);
    REQUIRE(circ_w_binary_search(a, b, 2) <= 0.25 + 1e-12);
    REQUIRE(circ_w_binary_search(a, b, 2) >= 0.0);
  }
}
