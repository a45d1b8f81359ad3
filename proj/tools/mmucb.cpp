// Command-line harness: configures and runs the bandit/confidence-bound
// experiments and a quick self-test of the numerical oracles.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mmucb/config.hpp"
#include "mmucb/experiments.hpp"
#include "mmucb/reference.hpp"
#include "mmucb/ucb.hpp"

namespace {

struct FlagOverrides {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = -1;
  double delta = -1.0, sigma = -1.0, bound_b = -1.0, alpha = 0.0, smooth_bandwidth = -1.0;
  bool seed_set = false, alpha_set = false;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--config", f.config_path, "Config file (TOML subset or JSON)");
  cmd->add_option("--seed", f.seed, "Master seed")->each([&](const std::string&) {
    f.seed_set = true;
  });
  cmd->add_option("--jobs", f.jobs, "Worker threads (0 = logical cores)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--delta", f.delta, "Failure probability delta");
  cmd->add_option("--sigma", f.sigma, "Sub-Gaussian noise scale");
  cmd->add_option("--bound-b", f.bound_b, "Parameter norm bound B");
  cmd->add_option("--alpha", f.alpha, "Regularizer alpha")->each([&](const std::string&) {
    f.alpha_set = true;
  });
  cmd->add_option("--smooth-bandwidth", f.smooth_bandwidth,
                  "Gaussian smoothing bandwidth for reported series");
}

mmucb::ExperimentConfig build_config(const FlagOverrides& f, const std::string& experiment) {
  mmucb::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = mmucb::ExperimentConfig::load(f.config_path);
  cfg.experiment = experiment;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.jobs >= 0) cfg.jobs = f.jobs;
  if (!f.out.empty()) cfg.out = f.out;
  if (f.delta > 0.0) cfg.delta = f.delta;
  if (f.sigma > 0.0) cfg.sigma = f.sigma;
  if (f.bound_b > 0.0) cfg.bound_b = f.bound_b;
  if (f.alpha_set) cfg.alpha = f.alpha;
  if (f.smooth_bandwidth >= 0.0) cfg.smooth_bandwidth = f.smooth_bandwidth;
  cfg.validate();
  return cfg;
}

bool report(const char* name, bool ok) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

// Quick end-to-end checks of the independent oracles against the fast paths.
int selftest(std::uint64_t seed) {
  using namespace mmucb;
  bool all_ok = true;

  {  // incremental inverse and determinant vs direct recomputation
    const int d = 20;
    GramState gram(d, 0.7, 1.0, 1.0, 0.05);
    Rng rng(seed, 1);
    Matrix direct = 0.7 * Matrix::Identity(d, d);
    for (int t = 0; t < 300; ++t) {
      Vector phi(d);
      for (int i = 0; i < d; ++i) phi(i) = rng.gaussian();
      gram.update(phi, rng.gaussian());
      direct += phi * phi.transpose();
    }
    const Matrix inv = direct.llt().solve(Matrix::Identity(d, d));
    const double inv_err = (inv - gram.a_inv()).norm() / inv.norm();
    const double ld_direct =
        std::log((direct / 0.7).determinant());
    const double ld_err = std::abs(ld_direct - gram.log_det_ratio()) / std::abs(ld_direct);
    all_ok &= report("incremental inverse matches direct (1e-8)", inv_err < 1e-8);
    all_ok &= report("incremental log-determinant matches direct (1e-8)", ld_err < 1e-8);
  }

  {  // dual search vs interior-point brute force
    Rng rng(seed, 2);
    bool ok = true;
    for (int inst = 0; inst < 10; ++inst) {
      const int d = 2 + inst % 2;
      const int t = 1 + inst % 8;
      GramState gram(d, 0.5, 1.0, 2.0, 0.05);
      for (int i = 0; i < t; ++i) {
        Vector phi(d);
        for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
        gram.update(phi, rng.gaussian());
      }
      const double r_mm_sq = 2.0 + rng.uniform() + gram.rr();
      Vector phi(d);
      for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
      const double dual = exact_ucb(gram, r_mm_sq, phi).value;
      const double brute = bruteforce_ucb(gram, r_mm_sq, phi);
      if (std::abs(dual - brute) > 1e-4 * (1.0 + std::abs(brute))) ok = false;
    }
    all_ok &= report("dual UCB matches brute-force oracle (1e-4)", ok);
  }

  {  // efficient vs dense mixture radius
    Rng rng(seed, 3);
    bool ok = true;
    for (int inst = 0; inst < 20; ++inst) {
      const int d = 2 + inst % 4;
      const int t = 1 + inst % 10;
      const MixtureSpec spec = MixtureSpec::standard(1.0 + rng.uniform(), 0.5 + rng.uniform());
      LinearMixtureRadius eff(spec, d);
      MixtureState dense;
      Vector rewards(t);
      for (int i = 0; i < t; ++i) {
        Vector phi(d);
        for (int k = 0; k < d; ++k) phi(k) = rng.gaussian();
        rewards(i) = rng.gaussian();
        eff.update(phi, rewards(i));
        dense.append(spec, phi);
      }
      const double a = eff.radius_mm_sq(0.05);
      const double b =
          radius_mm_naive_sq(dense.mu(), dense.covariance(), rewards, spec.sigma, 0.05);
      if (std::abs(a - b) > 1e-8 * std::abs(b)) ok = false;
    }
    all_ok &= report("efficient radius matches dense radius (1e-8)", ok);
  }

  {  // Monte-Carlo Gaussian-integral oracle
    Rng rng(seed, 4);
    bool ok = true;
    for (int inst = 0; inst < 3; ++inst) {
      const int t = 2 + inst;
      Matrix root(t, t);
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j) root(i, j) = rng.gaussian();
      const Matrix cov = root * root.transpose();
      Vector mu(t), rewards(t);
      for (int i = 0; i < t; ++i) {
        mu(i) = rng.gaussian();
        rewards(i) = rng.gaussian();
      }
      const double exact = radius_mm_naive_sq(mu, cov, rewards, 1.0, 0.05);
      const auto mc = radius_mm_monte_carlo(mu, cov, rewards, 1.0, 0.05, 200000, seed + inst);
      if (std::abs(exact - mc.r_mm_sq) > 4.0 * mc.std_error + 1e-9) ok = false;
    }
    all_ok &= report("closed-form radius within Monte-Carlo error", ok);
  }

  std::cout << (all_ok ? "selftest passed" : "selftest FAILED") << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Martingale-mixture confidence bounds for linear bandits"};
  app.require_subcommand(1);

  FlagOverrides flags;
  std::string pending;
  for (const char* verb : {"regret", "coverage", "widths", "radii-compare"}) {
    CLI::App* cmd = app.add_subcommand(verb, std::string("Run the ") + verb + " experiment");
    add_common_flags(cmd, flags);
    cmd->callback([&pending, verb] { pending = verb; });
  }
  CLI::App* st = app.add_subcommand("selftest", "Run the oracle and algebra self-checks");
  st->add_option("--seed", flags.seed, "Master seed");
  st->callback([&pending] { pending = "selftest"; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (pending == "selftest") return selftest(flags.seed == 0 ? 12345 : flags.seed);
    const mmucb::ExperimentConfig cfg = build_config(flags, pending);
    return mmucb::run_experiment(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
