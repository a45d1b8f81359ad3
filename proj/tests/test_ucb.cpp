#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mmucb/reference.hpp"
#include "mmucb/rng.hpp"
#include "mmucb/ucb.hpp"

using namespace mmucb;

namespace {

GramState random_gram(int d, int t, double alpha, double bound_b, Rng& rng) {
  GramState gram(d, alpha, 1.0, bound_b, 0.05);
  for (int i = 0; i < t; ++i) {
    Vector phi(d);
    for (int j = 0; j < d; ++j) phi(j) = rng.gaussian();
    gram.update(phi, rng.gaussian());
  }
  return gram;
}

}  // namespace

TEST_CASE("analytic bound basics") {
  GramState gram(2, 1.0, 1.0, 1.0, 0.01);
  const double r_mm_sq = 2.0 * std::log(100.0);

  SECTION("zero feature vector gives exactly zero") {
    REQUIRE(analytic_ucb(gram, r_mm_sq, Vector::Zero(2)) == 0.0);
    REQUIRE(analytic_lcb(gram, r_mm_sq, Vector::Zero(2)) == 0.0);
  }

  SECTION("empty history evaluates to the radius at a unit direction") {
    Vector e1(2);
    e1 << 1.0, 0.0;
    REQUIRE(analytic_ucb(gram, r_mm_sq, e1) == Catch::Approx(3.19536).margin(1e-5));
  }

  SECTION("upper minus lower bound is twice the radius term") {
    Rng rng(7);
    GramState g = random_gram(3, 9, 0.8, 1.5, rng);
    const double r_sq = 3.0 + g.rr();
    Vector phi(3);
    for (int j = 0; j < 3; ++j) phi(j) = rng.gaussian();
    const double width = analytic_ucb(g, r_sq, phi) - analytic_lcb(g, r_sq, phi);
    const double expect =
        2.0 * radius_amm(g, r_sq) * std::sqrt(phi.dot(g.a_inv() * phi));
    REQUIRE(width == Catch::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("dual bound with no data recovers the norm-ball maximum") {
  GramState gram(3, 1.0, 1.0, 2.0, 0.01);
  Vector phi(3);
  phi << 1.0, -2.0, 0.5;
  const DualResult res = exact_ucb(gram, 2.0 * std::log(100.0), phi);
  REQUIRE(res.boundary);  // infimum approached as alpha grows
  REQUIRE(res.value == Catch::Approx(2.0 * phi.norm()).epsilon(1e-6));
}

TEST_CASE("dual bound never exceeds the analytic bound at the gram regularizer") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 4;
    GramState gram = random_gram(d, trial % 12, 0.5 + rng.uniform(), 1.0 + rng.uniform(), rng);
    const double r_mm_sq = 1.0 + rng.uniform() + gram.rr();
    Vector phi(d);
    for (int j = 0; j < d; ++j) phi(j) = rng.gaussian();
    const double dual = exact_ucb(gram, r_mm_sq, phi).value;
    const double analytic = analytic_ucb(gram, r_mm_sq, phi);
    REQUIRE(dual <= analytic + 1e-9 * (1.0 + std::abs(analytic)));
  }
}

TEST_CASE("golden-section result matches a dense grid over alpha") {
  Rng rng(27);
  const int d = 3;
  GramState gram = random_gram(d, 8, 0.7, 1.3, rng);
  const double r_mm_sq = 2.0 + gram.rr();
  const DualBound dual(gram, r_mm_sq);
  DualSearchConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    Vector phi(d);
    for (int j = 0; j < d; ++j) phi(j) = rng.gaussian();
    const double found = dual.ucb(phi, cfg).value;
    const Vector z = dual.project(phi);
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
      const double ln_alpha =
          std::log(cfg.alpha_min) +
          (std::log(cfg.alpha_max) - std::log(cfg.alpha_min)) * i / 199.0;
      grid_best = std::min(grid_best, dual.bound_at(z, std::exp(ln_alpha), +1.0));
    }
    REQUIRE(found <= grid_best + 1e-9 * (1.0 + std::abs(grid_best)));
  }
}

TEST_CASE("weak duality against rejection-sampled feasible parameters") {
  Rng rng(37);
  const int d = 2;
  GramState gram = random_gram(d, 6, 0.9, 1.5, rng);
  const double r_mm_sq = gram.residual_sq(gram.theta_hat()) + 2.0;
  Vector phi(d);
  phi << 0.7, -0.4;
  const double dual = exact_ucb(gram, r_mm_sq, phi).value;
  const double lcb = exact_lcb(gram, r_mm_sq, phi).value;
  const auto feasible = sample_feasible(gram, r_mm_sq, 200, 1234);
  REQUIRE(feasible.size() >= 10);
  for (const auto& theta : feasible) {
    REQUIRE(phi.dot(theta) <= dual + 1e-8);
    REQUIRE(phi.dot(theta) >= lcb - 1e-8);
  }
}

TEST_CASE("dual bound matches the interior-point oracle on small instances") {
  Rng rng(47);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 1 + trial % 3;
    const int t = 1 + trial % 10;
    GramState gram = random_gram(d, t, 0.4 + rng.uniform(), 1.0 + rng.uniform(), rng);
    // Anchor the radius at a point inside the norm ball so the set is
    // guaranteed to have an interior.
    Vector anchor = gram.theta_hat();
    if (anchor.norm() > 0.9 * gram.bound_b()) anchor *= 0.9 * gram.bound_b() / anchor.norm();
    const double r_mm_sq = gram.residual_sq(anchor) + 0.5 + rng.uniform();
    Vector phi(d);
    for (int j = 0; j < d; ++j) phi(j) = rng.gaussian();
    const double dual = exact_ucb(gram, r_mm_sq, phi).value;
    const double brute = bruteforce_ucb(gram, r_mm_sq, phi);
    REQUIRE(std::abs(dual - brute) <= 1e-4 * (1.0 + std::abs(brute)));
    const double dual_low = exact_lcb(gram, r_mm_sq, phi).value;
    const double brute_low = bruteforce_lcb(gram, r_mm_sq, phi);
    REQUIRE(std::abs(dual_low - brute_low) <= 1e-4 * (1.0 + std::abs(brute_low)));
  }
}

TEST_CASE("dual bound is monotone in the radius and the norm bound") {
  Rng rng(57);
  const int d = 2;
  Vector phi(d);
  phi << 1.0, 0.3;
  GramState small_b(d, 0.8, 1.0, 1.0, 0.05);
  GramState large_b(d, 0.8, 1.0, 2.0, 0.05);
  for (int i = 0; i < 5; ++i) {
    Vector f(d);
    for (int j = 0; j < d; ++j) f(j) = rng.gaussian();
    const double r = rng.gaussian();
    small_b.update(f, r);
    large_b.update(f, r);
  }
  const double base = small_b.residual_sq(small_b.theta_hat());
  double prev = -std::numeric_limits<double>::infinity();
  for (double bump : {0.5, 1.0, 2.0, 4.0}) {
    const double value = exact_ucb(small_b, base + bump, phi).value;
    REQUIRE(value >= prev - 1e-10);
    prev = value;
  }
  REQUIRE(exact_ucb(small_b, base + 1.0, phi).value <=
          exact_ucb(large_b, base + 1.0, phi).value + 1e-10);
}

TEST_CASE("finite-set maximization enumerates with lowest-index ties") {
  Vector a1(1), a2(1), a3(1);
  a1 << 1.0;
  a2 << 2.0;
  a3 << 3.0;
  const ActionSet set(FiniteActionSet{{a1, a2, a3}});

  SECTION("picks the maximizer") {
    const auto res = argmax_action(set, [](const Vector& a) { return a(0) == 2.0 ? 2.0 : 1.0; });
    REQUIRE(res.action == a2);
    REQUIRE(res.value == 2.0);
  }

  SECTION("ties break to the first index") {
    const auto res = argmax_action(set, [](const Vector&) { return 1.0; });
    REQUIRE(res.action == a1);
  }

  SECTION("non-finite values are skipped") {
    const auto res = argmax_action(set, [](const Vector& a) {
      return a(0) == 1.0 ? std::numeric_limits<double>::quiet_NaN() : a(0);
    });
    REQUIRE(res.action == a3);
  }
}

TEST_CASE("box maximization finds a known interior optimum") {
  Vector lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  const ActionSet set(BoxActionSet{lo, hi});
  const auto res =
      argmax_action(set, [](const Vector& a) { return -(a(0) - 0.3) * (a(0) - 0.3); });
  REQUIRE(res.action(0) == Catch::Approx(0.3).margin(1e-3));
}

TEST_CASE("dual search configuration is validated") {
  DualSearchConfig cfg;
  cfg.alpha_min = 2.0;
  cfg.alpha_max = 1.0;
  GramState gram(2, 1.0, 1.0, 1.0, 0.05);
  Vector phi(2);
  phi << 1.0, 0.0;
  REQUIRE_THROWS_AS(exact_ucb(gram, 1.0, phi, cfg), std::invalid_argument);
}
