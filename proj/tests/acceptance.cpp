// Acceptance suite: one pass/fail line per criterion, with wall times.
// Run directly or through ctest; exits nonzero if any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>
#include <vector>

#include "mmucb/bandit.hpp"
#include "mmucb/experiments.hpp"
#include "mmucb/reference.hpp"
#include "mmucb/ucb.hpp"

using namespace mmucb;

namespace {

int g_jobs = 4;
bool g_all_ok = true;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int index, const char* name, bool ok, double elapsed) {
  std::printf("[%s] %d. %s (%.1f s)\n", ok ? "PASS" : "FAIL", index, name, elapsed);
  std::fflush(stdout);
  g_all_ok = g_all_ok && ok;
}

// 1: strict analytic-vs-baseline radius ordering on random histories.
void criterion_radius_ordering() {
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> ok{true};

  // hand-computed empty-history values
  {
    GramState gram(2, 1.0, 1.0, 1.0, 0.01);
    const double r_amm = radius_amm(gram, 2.0 * std::log(100.0));
    const double r_oful = radius_oful(gram);
    if (std::abs(r_amm - 3.19536) > 1e-5) ok = false;
    if (std::abs(r_oful - 4.03486) > 1e-5) ok = false;
  }

  parallel_for(1000, g_jobs, [&](int i) {
    Rng rng(2024, static_cast<std::uint64_t>(i));
    const int d = 1 + static_cast<int>(rng.uniform() * 20);
    const int t = static_cast<int>(rng.uniform() * 201);
    const double c = 0.3 + 2.0 * rng.uniform();
    const double sigma = 0.3 + rng.uniform();
    const double bound_b = 0.5 + 2.0 * rng.uniform();
    GramState gram(d, sigma * sigma / c, sigma, bound_b, 0.05);
    LinearMixtureRadius radius(MixtureSpec::standard(c, sigma), d);
    for (int step = 0; step < t; ++step) {
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      const double reward = rng.gaussian();
      gram.update(phi, reward);
      radius.update(phi, reward);
      if (!(radius_amm(gram, radius.radius_mm_sq(0.05)) < radius_oful(gram))) ok = false;
    }
  });
  report(1, "strict radius ordering over 1000 random histories", ok, seconds_since(start));
}

// 2: dual-search UCB matches an independent interior-point solver.
void criterion_duality() {
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> ok{true};
  parallel_for(200, g_jobs, [&](int i) {
    Rng rng(3111, static_cast<std::uint64_t>(i));
    const int d = 1 + static_cast<int>(rng.uniform() * 3);
    const int t = static_cast<int>(rng.uniform() * 11);
    GramState gram(d, 0.2 + rng.uniform(), 1.0, 0.8 + rng.uniform(), 0.05);
    for (int step = 0; step < t; ++step) {
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      gram.update(phi, rng.gaussian());
    }
    Vector anchor = gram.theta_hat();
    if (anchor.norm() > 0.9 * gram.bound_b()) anchor *= 0.9 * gram.bound_b() / anchor.norm();
    const double r_mm_sq = gram.residual_sq(anchor) + 0.3 + rng.uniform();
    Vector phi(d);
    for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
    const double dual = exact_ucb(gram, r_mm_sq, phi).value;
    const double brute = bruteforce_ucb(gram, r_mm_sq, phi);
    if (std::abs(dual - brute) > 1e-4 * (1.0 + std::abs(brute))) ok = false;
  });
  report(2, "dual UCB matches the brute-force oracle on 200 instances", ok,
         seconds_since(start));
}

// 3: compact radius equals the dense radius for linear mixture families.
void criterion_radius_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> ok{true};
  parallel_for(500, g_jobs, [&](int i) {
    Rng rng(4222, static_cast<std::uint64_t>(i));
    const int d = 1 + static_cast<int>(rng.uniform() * 8);
    const int t = 1 + static_cast<int>(rng.uniform() * 25);
    const double sigma = 0.4 + rng.uniform();
    MixtureSpec spec = MixtureSpec::standard(0.5 + rng.uniform(), sigma);
    if (i % 2 == 1) {
      Vector theta0(d);
      for (int k = 0; k < d; ++k) theta0(k) = rng.gaussian();
      Matrix root(d, d);
      for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k) root(r, k) = rng.gaussian();
      spec = MixtureSpec::linear(theta0, root * root.transpose() + 0.2 * Matrix::Identity(d, d),
                                 sigma);
    }
    LinearMixtureRadius eff(spec, d);
    MixtureState dense;
    Vector rewards(t);
    for (int step = 0; step < t; ++step) {
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      rewards(step) = rng.gaussian();
      eff.update(phi, rewards(step));
      dense.append(spec, phi);
    }
    const double naive =
        radius_mm_naive_sq(dense.mu(), dense.covariance(), rewards, sigma, 0.05);
    if (std::abs(eff.radius_mm_sq(0.05) - naive) > 1e-8 * naive) ok = false;
  });
  report(3, "compact radius equals dense radius on 500 histories", ok, seconds_since(start));
}

// 4: closed-form radius within Monte-Carlo error of the Gaussian integral.
void criterion_monte_carlo() {
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> ok{true};
  parallel_for(20, g_jobs, [&](int i) {
    Rng rng(5333, static_cast<std::uint64_t>(i));
    const int t = 1 + i % 4;
    Matrix root(t, t);
    for (int r = 0; r < t; ++r)
      for (int k = 0; k < t; ++k) root(r, k) = rng.gaussian();
    const Matrix cov = root * root.transpose();
    Vector mu(t), rewards(t);
    for (int k = 0; k < t; ++k) {
      mu(k) = rng.gaussian();
      rewards(k) = rng.gaussian();
    }
    const double sigma = 0.8 + 0.4 * rng.uniform();
    const double exact = radius_mm_naive_sq(mu, cov, rewards, sigma, 0.05);
    const auto mc = radius_mm_monte_carlo(mu, cov, rewards, sigma, 0.05, 1000000,
                                          7000 + static_cast<std::uint64_t>(i));
    if (std::abs(exact - mc.r_mm_sq) > 3.0 * mc.std_error) ok = false;
  });
  report(4, "closed-form radius within 3 MC standard errors on 20 instances", ok,
         seconds_since(start));
}

// 5: time-uniform coverage of the confidence sequence.
void criterion_coverage() {
  const auto start = std::chrono::steady_clock::now();
  const int d = 4;
  Rng theta_rng(6001);
  Vector theta(d);
  for (int k = 0; k < d; ++k) theta(k) = theta_rng.gaussian();
  theta *= 1.0 / theta.norm();  // ||theta*|| = 1 <= B = 2
  const Environment env = Environment::synthetic_linear(
      theta, NoiseKind::gaussian, 0.2, [d](int, Rng& rng) {
        FiniteActionSet set;
        for (int a = 0; a < 5; ++a) {
          Vector v(d);
          for (int k = 0; k < d; ++k) v(k) = rng.uniform(-1.0, 1.0);
          set.actions.push_back(std::move(v));
        }
        return ActionSet(std::move(set));
      });
  RunSettings s;
  s.map = FeatureMap::identity(d);
  s.alpha = 0.2 * 0.2;
  s.bound_b = 2.0;
  s.delta = 0.05;
  s.horizon = 200;
  const double coverage =
      coverage_study(env, MixtureSpec::standard(1.0, 0.2), s, 500, 6100, g_jobs);
  const double threshold = 0.95 - 2.0 * std::sqrt(0.05 * 0.95 / 500.0);
  const bool ok = coverage >= threshold;
  std::printf("       coverage = %.4f (threshold %.4f)\n", coverage, threshold);
  report(5, "time-uniform coverage over 500 runs of T = 200", ok, seconds_since(start));
}

// 6: realized regret below the data-dependent bound in enough runs.
void criterion_bound_validity() {
  const auto start = std::chrono::steady_clock::now();
  const int d = 4, runs = 200;
  Rng theta_rng(7001);
  Vector theta(d);
  for (int k = 0; k < d; ++k) theta(k) = theta_rng.gaussian();
  theta *= 0.8 / theta.norm();
  const Environment env = Environment::synthetic_linear(
      theta, NoiseKind::gaussian, 0.25, [d](int, Rng& rng) {
        FiniteActionSet set;
        for (int a = 0; a < 6; ++a) {
          Vector v(d);
          for (int k = 0; k < d; ++k) v(k) = rng.uniform(-1.0, 1.0);
          set.actions.push_back(std::move(v));
        }
        return ActionSet(std::move(set));
      });
  RunSettings s;
  s.map = FeatureMap::identity(d);
  s.alpha = 0.25 * 0.25;
  s.bound_b = 1.0;
  s.delta = 0.05;
  s.horizon = 150;
  const MixtureSpec spec = MixtureSpec::standard(1.0, 0.25);
  std::atomic<int> valid{0};
  parallel_for(runs, g_jobs, [&](int i) {
    const auto run = run_linucb(Policy::amm(), env, spec, s, 7100 + i);
    for (const auto& rec : run.rounds)
      if (rec.cum_regret > rec.bound_dd + 1e-9) return;
    valid.fetch_add(1);
  });
  const double fraction = static_cast<double>(valid.load()) / runs;
  const double threshold = 0.95 - 2.0 * std::sqrt(0.05 * 0.95 / runs);
  const bool ok = fraction >= threshold;
  std::printf("       bound held in %.4f of runs (threshold %.4f)\n", fraction, threshold);
  report(6, "data-dependent regret bound valid over 200 runs", ok, seconds_since(start));
}

// 7: width ordering across the grid and mean-regret ordering on the
// desk-scale benchmark.
void criterion_ordering() {
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> widths_ok{true};

  std::vector<WidthCell> cells;
  for (int horizon : {0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000})
    cells.push_back({10, horizon, 0, 0, 0});
  for (int d : {1, 2, 5, 20, 50, 100}) cells.push_back({d, 100, 0, 0, 0});
  parallel_for(static_cast<int>(cells.size()), g_jobs, [&](int i) {
    cells[i] = compute_width_cell(cells[i].d, cells[i].horizon, 0.2, 1.0, 2.0, 0.05, 8200,
                                  static_cast<std::uint64_t>(i));
    if (!(cells[i].cmm <= cells[i].amm + 1e-9 && cells[i].amm < cells[i].oful))
      widths_ok = false;
  });

  // benchmark: d = 20 random Fourier features, 10-arm sets, 100 seeds
  const FeatureMap map = FeatureMap::random_fourier(8300, 2, 20, 1.0);
  Rng theta_rng(8400);
  Vector theta(20);
  for (int k = 0; k < 20; ++k) theta(k) = theta_rng.gaussian();
  theta *= 5.0 / theta.norm();  // ||theta*|| = 5 <= B = 10
  const Environment env = Environment::synthetic_linear(
      theta, NoiseKind::gaussian, 0.1, [](int, Rng& rng) {
        FiniteActionSet set;
        for (int a = 0; a < 10; ++a) {
          Vector v(2);
          v << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
          set.actions.push_back(std::move(v));
        }
        return ActionSet(std::move(set));
      });
  RunSettings s;
  s.map = map;
  s.alpha = 0.1 * 0.1;
  s.bound_b = 10.0;
  s.delta = 0.01;
  s.horizon = 500;
  const MixtureSpec spec = MixtureSpec::standard(1.0, 0.1);
  const Policy policies[3] = {Policy::cmm(), Policy::amm(), Policy::oful()};
  double mean_regret[3] = {0.0, 0.0, 0.0};
  std::mutex mu;
  parallel_for(300, g_jobs, [&](int idx) {
    const int p = idx / 100, seed = idx % 100;
    const auto run = run_linucb(policies[p], env, spec, s, 8500 + seed);
    std::lock_guard<std::mutex> lock(mu);
    mean_regret[p] += run.cum_regret() / 100.0;
  });
  const bool regret_ok = mean_regret[0] <= mean_regret[1] && mean_regret[1] <= mean_regret[2];
  std::printf("       mean regret: cmm %.3f, amm %.3f, oful %.3f\n", mean_regret[0],
              mean_regret[1], mean_regret[2]);
  report(7, "width and mean-regret orderings", widths_ok && regret_ok, seconds_since(start));
}

// 8: incremental inverse and determinant after 1000 updates at d = 50.
void criterion_incremental_algebra() {
  const auto start = std::chrono::steady_clock::now();
  const int d = 50;
  const double alpha = 0.7;
  GramState gram(d, alpha, 1.0, 1.0, 0.05);
  Matrix a = alpha * Matrix::Identity(d, d);
  Rng rng(9100);
  for (int i = 0; i < 1000; ++i) {
    Vector phi(d);
    for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
    gram.update(phi, rng.gaussian());
    a += phi * phi.transpose();
  }
  const Matrix direct = a.llt().solve(Matrix::Identity(d, d));
  const bool inv_ok = (direct - gram.a_inv()).norm() / direct.norm() < 1e-8;
  Eigen::LLT<Matrix> llt(a / alpha);
  double ld = 0.0;
  for (int k = 0; k < d; ++k) ld += std::log(llt.matrixL()(k, k));
  ld *= 2.0;
  const bool det_ok = std::abs(ld - gram.log_det_ratio()) < 1e-8 * std::abs(ld);
  report(8, "incremental inverse and determinant after 1000 updates (d = 50)",
         inv_ok && det_ok, seconds_since(start));
}

// 9: property suites (determinant-trace cap, scalar inequality, adaptive
// PSD, prefix consistency).
void criterion_properties() {
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> ok{true};

  parallel_for(1000, g_jobs, [&](int i) {  // determinant-trace inequality
    Rng rng(10100, static_cast<std::uint64_t>(i));
    const int d = 1 + static_cast<int>(rng.uniform() * 10);
    const int t = 1 + static_cast<int>(rng.uniform() * 40);
    const double alpha = 0.2 + rng.uniform();
    GramState gram(d, alpha, 1.0, 1.0, 0.05);
    double l_max = 0.0;
    for (int step = 0; step < t; ++step) {
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      l_max = std::max(l_max, phi.norm());
      gram.update(phi, rng.gaussian());
    }
    if (gram.log_det_ratio() > d * std::log1p(t * l_max * l_max / (alpha * d)) + 1e-9)
      ok = false;
  });

  for (int i = 0; i <= 20000; ++i) {  // min(1, x) <= ln(1 + x)/ln 2
    const double x = 10.0 * i / 20000.0;
    if (std::min(1.0, x) > std::log1p(x) / std::log(2.0) + 1e-12) ok = false;
  }

  parallel_for(1000, g_jobs, [&](int i) {  // adaptive covariance PSD
    Rng rng(10200, static_cast<std::uint64_t>(i));
    const int d = 1 + static_cast<int>(rng.uniform() * 10);
    const int t = 2 + static_cast<int>(rng.uniform() * 28);
    const MixtureSpec spec = MixtureSpec::adaptive(
        [](const Vector& x) { return x(0); },
        [](const Vector& x, const Vector& y) { return std::exp(-0.5 * (x - y).squaredNorm()); },
        0.3 + rng.uniform(), 1.0);
    MixtureState state;
    for (int step = 0; step < t; ++step) {
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      std::optional<double> prev;
      if (step >= 1) prev = rng.gaussian();
      state.append(spec, phi, prev);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(state.covariance());
    if (es.eigenvalues().minCoeff() < -1e-8 * (state.covariance().trace() / t)) ok = false;
  });

  parallel_for(100, g_jobs, [&](int i) {  // bit-exact prefix consistency
    Rng rng(10300, static_cast<std::uint64_t>(i));
    const int d = 2 + static_cast<int>(rng.uniform() * 4);
    const MixtureSpec spec =
        i % 2 == 0 ? MixtureSpec::standard(0.5 + rng.uniform(), 1.0)
                   : MixtureSpec::adaptive(
                         [](const Vector& x) { return x(0); },
                         [](const Vector& x, const Vector& y) { return x.dot(y) + 1.0; },
                         1.0 + rng.uniform(), 1.0);
    const bool adaptive = spec.family == MixtureFamily::adaptive;
    MixtureState state;
    Vector prev_mu;
    Matrix prev_cov;
    for (int step = 0; step < 12; ++step) {
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      std::optional<double> prev;
      if (adaptive && step >= 1) prev = rng.gaussian();
      state.append(spec, phi, prev);
      if (step >= 1) {
        if (state.mu().head(step) != prev_mu) ok = false;
        if (state.covariance().topLeftCorner(step, step) != prev_cov) ok = false;
      }
      prev_mu = state.mu();
      prev_cov = state.covariance();
    }
  });

  report(9, "property suites (determinant cap, scalar bound, PSD, prefixes)", ok,
         seconds_since(start));
}

}  // namespace

int main() {
  const unsigned hw = std::thread::hardware_concurrency();
  g_jobs = hw > 0 ? static_cast<int>(hw) : 4;
  std::printf("acceptance suite (%d workers)\n", g_jobs);

  criterion_radius_ordering();
  criterion_duality();
  criterion_radius_equivalence();
  criterion_monte_carlo();
  criterion_coverage();
  criterion_bound_validity();
  criterion_ordering();
  criterion_incremental_algebra();
  criterion_properties();

  std::printf(g_all_ok ? "all acceptance criteria passed\n"
                       : "ACCEPTANCE FAILURES PRESENT\n");
  return g_all_ok ? 0 : 1;
}
