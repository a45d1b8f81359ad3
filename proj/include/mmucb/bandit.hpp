#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mmucb/confidence.hpp"
#include "mmucb/features.hpp"
#include "mmucb/mixtures.hpp"
#include "mmucb/rng.hpp"
#include "mmucb/ucb.hpp"

namespace mmucb {

enum class PolicyKind { cmm, amm, oful };

struct Policy {
  PolicyKind kind = PolicyKind::cmm;

  static Policy cmm() { return {PolicyKind::cmm}; }
  static Policy amm() { return {PolicyKind::amm}; }
  static Policy oful() { return {PolicyKind::oful}; }

  const char* name() const {
    switch (kind) {
      case PolicyKind::cmm: return "cmm";
      case PolicyKind::amm: return "amm";
      case PolicyKind::oful: return "oful";
    }
    return "?";
  }
};

enum class NoiseKind { gaussian, uniform };

// Reward-generating environment. Synthetic environments expose theta_star so
// regret and coverage can be measured exactly; the blackbox variant only
// yields rewards.
struct Environment {
  Vector theta_star;  // empty for blackbox
  NoiseKind noise = NoiseKind::gaussian;
  double noise_param = 0.0;  // stddev (gaussian) or half-width (uniform)
  std::function<double(const Vector& features, Rng& rng)> blackbox;
  // Action set offered in round t (1-based); must be deterministic given (t, rng draws).
  std::function<ActionSet(int t, Rng& rng)> action_sets;

  static Environment synthetic_linear(Vector theta_star, NoiseKind noise, double noise_param,
                                      std::function<ActionSet(int, Rng&)> sets) {
    if (!(noise_param >= 0.0)) throw std::invalid_argument("noise parameter must be >= 0");
    Environment e;
    e.theta_star = std::move(theta_star);
    e.noise = noise;
    e.noise_param = noise_param;
    e.action_sets = std::move(sets);
    return e;
  }

  bool synthetic() const { return theta_star.size() > 0; }

  double draw_reward(const Vector& phi, Rng& rng) const {
    if (blackbox) return blackbox(phi, rng);
    const double mean = phi.dot(theta_star);
    if (noise == NoiseKind::gaussian) return mean + rng.gaussian(0.0, noise_param);
    return mean + rng.uniform(-noise_param, noise_param);
  }
};

struct RoundRecord {
  int t = 0;  // 1-based round index
  Vector action;
  double reward = 0.0;
  double expected_reward = 0.0;
  double regret = 0.0;
  double cum_regret = 0.0;
  double r_mm = 0.0;
  double r_amm = 0.0;
  double alpha = 0.0;  // alpha used for the played bound (dual minimizer for cmm)
  double bound_dd = 0.0;  // data-dependent regret bound evaluated at this T
  long long elapsed_us = 0;
  bool theta_in_set = true;  // theta* membership in Theta_t (post-update), synthetic only
};

struct BanditRun {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;

  double cum_regret() const { return rounds.empty() ? 0.0 : rounds.back().cum_regret; }
  bool covered_all() const {
    for (const auto& r : rounds)
      if (!r.theta_in_set) return false;
    return true;
  }

  static std::string csv_header(int action_dim) {
    std::string h = "t";
    for (int i = 0; i < action_dim; ++i) h += ",action" + std::to_string(i);
    h += ",reward,expected_reward,regret,cum_regret,r_mm,r_amm,alpha,bound_dd,elapsed_us";
    return h;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    const int adim = rounds.empty() ? 0 : static_cast<int>(rounds.front().action.size());
    os << csv_header(adim) << "\n";
    for (const auto& r : rounds) {
      os << r.t;
      for (int i = 0; i < adim; ++i) os << "," << r.action(i);
      os << "," << r.reward << "," << r.expected_reward << "," << r.regret << ","
         << r.cum_regret << "," << r.r_mm << "," << r.r_amm << "," << r.alpha << ","
         << r.bound_dd << "," << r.elapsed_us << "\n";
    }
    return os.str();
  }
};

struct RunSettings {
  FeatureMap map = FeatureMap::identity(1);
  double alpha = 1.0;  // gram regularizer (sigma^2/c for standard mixtures)
  double bound_b = 1.0;
  double delta = 0.05;
  int horizon = 100;
  DualSearchConfig dual;
  ArgmaxOptions argmax;
};

namespace detail {

// Mixture radius tracker: the d x d path for linear/standard families, the
// dense t x t parameters otherwise.
class RadiusTracker {
 public:
  RadiusTracker(const MixtureSpec& spec, int d) : spec_(spec) {
    if (spec.family == MixtureFamily::standard || spec.family == MixtureFamily::linear)
      efficient_.emplace(spec, d);
  }

  double r_mm_sq(double delta) const {
    if (efficient_) return efficient_->radius_mm_sq(delta);
    Vector rewards(rewards_.size());
    for (std::size_t i = 0; i < rewards_.size(); ++i) rewards(i) = rewards_[i];
    return radius_mm_naive_sq(dense_.mu(), dense_.covariance(), rewards, spec_.sigma, delta);
  }

  // Called once the round's action (phi) and reward are both known.
  void push(const Vector& phi, double reward) {
    if (efficient_) {
      efficient_->update(phi, reward);
      return;
    }
    std::optional<double> prev;
    if (spec_.family == MixtureFamily::adaptive && dense_.size() >= 1) prev = last_reward_;
    dense_.append(spec_, phi, prev);
    rewards_.push_back(reward);
    last_reward_ = reward;
  }

 private:
  MixtureSpec spec_;
  std::optional<LinearMixtureRadius> efficient_;
  MixtureState dense_;
  std::vector<double> rewards_;
  double last_reward_ = 0.0;
};

inline double oful_ucb(const GramState& gram, const Vector& phi) {
  const double r = radius_oful(gram);
  return phi.dot(gram.theta_hat()) + r * std::sqrt(std::max(0.0, phi.dot(gram.a_inv() * phi)));
}

}  // namespace detail

// One pass of the optimistic linear bandit loop: per round, build the
// confidence state from history, pick the action maximizing the policy's UCB
// over the offered set, observe the reward, and log regret and radii.
inline BanditRun run_linucb(Policy policy, const Environment& env, const MixtureSpec& spec,
                            const RunSettings& s, std::uint64_t seed) {
  if (s.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!env.action_sets) throw std::invalid_argument("environment lacks an action-set generator");
  const int d = s.map.feature_dim();
  if (env.synthetic()) {
    if (env.theta_star.size() != d) throw std::invalid_argument("theta_star dimension mismatch");
    if (env.theta_star.norm() > s.bound_b + 1e-12)
      throw std::invalid_argument("theta_star violates the declared norm bound B");
  }
  if (spec.family == MixtureFamily::mean_kernel && s.horizon > 2000)
    throw std::invalid_argument("dense mean_kernel mixtures are capped at T = 2000");

  GramState gram(d, s.alpha, spec.sigma, s.bound_b, s.delta);
  detail::RadiusTracker tracker(spec, d);
  Rng rng(seed);

  BanditRun run;
  run.policy = policy.name();
  run.seed = seed;
  run.rounds.reserve(s.horizon);
  double cum_regret = 0.0, cum_bound = 0.0;

  for (int t = 1; t <= s.horizon; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const ActionSet actions = env.action_sets(t, rng);

    const double r_mm_sq = tracker.r_mm_sq(s.delta);
    const double r_amm = radius_amm(gram, r_mm_sq);

    RoundRecord rec;
    rec.t = t;
    rec.r_mm = std::sqrt(r_mm_sq);
    rec.r_amm = r_amm;
    rec.alpha = gram.alpha();

    // Select the action by the policy's UCB.
    if (policy.kind == PolicyKind::cmm) {
      const DualBound dual(gram, r_mm_sq);
      const auto res = argmax_action(
          actions,
          [&](const Vector& a) { return dual.ucb(s.map.featurize(a), s.dual, gram.alpha()).value; },
          s.argmax);
      rec.action = res.action;
      rec.alpha = dual.ucb(s.map.featurize(res.action), s.dual, gram.alpha()).alpha;
    } else if (policy.kind == PolicyKind::amm) {
      const auto res = argmax_action(
          actions, [&](const Vector& a) { return analytic_ucb(gram, r_mm_sq, s.map.featurize(a)); },
          s.argmax);
      rec.action = res.action;
    } else {
      const auto res = argmax_action(
          actions, [&](const Vector& a) { return detail::oful_ucb(gram, s.map.featurize(a)); },
          s.argmax);
      rec.action = res.action;
    }

    const Vector phi = s.map.featurize(rec.action);

    // Data-dependent bound term uses the pre-update radius and inverse.
    cum_bound += 2.0 * r_amm * std::sqrt(std::max(0.0, phi.dot(gram.a_inv() * phi)));
    rec.bound_dd = cum_bound;

    // Regret against the best action of this round (exact for finite sets;
    // approximate for boxes, with a 10x optimizer budget).
    if (env.synthetic()) {
      rec.expected_reward = phi.dot(env.theta_star);
      ArgmaxOptions oracle_opt = s.argmax;
      oracle_opt.restarts *= 10;
      const auto best = argmax_action(
          actions, [&](const Vector& a) { return s.map.featurize(a).dot(env.theta_star); },
          oracle_opt);
      rec.regret = best.value - rec.expected_reward;
      cum_regret += rec.regret;
    }
    rec.cum_regret = cum_regret;

    rec.reward = env.draw_reward(phi, rng);

    // Update history statistics (mixture first: its new column may depend on
    // all rewards up to the previous round, which are already observed).
    tracker.push(phi, rec.reward);
    gram.update(phi, rec.reward);

    // Time-uniform coverage bookkeeping: theta* membership in Theta_t.
    if (env.synthetic()) {
      const double post_r_mm_sq = tracker.r_mm_sq(s.delta);
      const ConfidenceSet set{std::sqrt(post_r_mm_sq), s.bound_b, &gram};
      rec.theta_in_set = set.contains(env.theta_star);
    }

    rec.elapsed_us = std::chrono::duration_cast<std::chrono::microseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    run.rounds.push_back(std::move(rec));
  }
  return run;
}

// Prefix sums of the per-round terms 2 R_AMM,t-1 ||phi(a_t)||_{A_{t-1}^{-1}}.
inline std::vector<double> eval_bound_data_dependent(const BanditRun& run) {
  std::vector<double> out;
  out.reserve(run.rounds.size());
  for (const auto& r : run.rounds) out.push_back(r.bound_dd);
  return out;
}

struct BoundParams {
  double c = 1.0;
  double sigma = 1.0;
  double bound_b = 1.0;
  double feature_bound = 1.0;  // L
  double reward_gap = 1.0;     // C, the per-round regret cap
  int d = 1;
  double delta = 0.05;
};

// Closed-form data-independent regret bound for standard(c) mixtures:
//   (2/sqrt(ln 2)) max{C, sigma sqrt(d ln(1 + c L^2 T/(sigma^2 d)) + B^2/c
//     + 2 ln(1/delta))} sqrt(d T ln(1 + c L^2 T/(sigma^2 d))).
inline double eval_bound_data_independent(const BoundParams& p, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const double s2 = p.sigma * p.sigma;
  const double ln_term =
      std::log1p(p.c * p.feature_bound * p.feature_bound * horizon / (s2 * p.d));
  const double inner = p.sigma * std::sqrt(p.d * ln_term + p.bound_b * p.bound_b / p.c +
                                           2.0 * std::log(1.0 / p.delta));
  return 2.0 / std::sqrt(std::log(2.0)) * std::max(p.reward_gap, inner) *
         std::sqrt(p.d * horizon * ln_term);
}

struct GeneralBoundParams {
  double sigma = 1.0;
  double sigma0 = 1.0;     // prior scale of the N(Phi theta0, sigma0^2 Phi Phi^T) mixtures
  double prior_gap = 0.0;  // ||theta* - theta0||
  double theta_norm = 0.0;  // ||theta*||
  double alpha = 1.0;
  double bound_b = 1.0;
  double feature_bound = 1.0;
  double reward_gap = 1.0;
  int d = 1;
  double delta = 0.05;
};

// Data-independent bound for the general linear mixture family, via the
// closed-form cap U on the analytic radius.
inline double eval_bound_general(const GeneralBoundParams& p, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const double s2 = p.sigma * p.sigma;
  const double l2 = p.feature_bound * p.feature_bound;
  const double tm1 = horizon - 1;
  const double ln_prior = std::log1p(tm1 * p.sigma0 * p.sigma0 * l2 / (s2 * p.d));
  const double ln_alpha = std::log1p(tm1 * l2 / (p.alpha * p.d));
  const double u_sq = s2 * p.d + s2 / (p.sigma0 * p.sigma0) * p.prior_gap * p.prior_gap +
                      s2 * p.d * ln_prior + p.alpha * p.bound_b * p.bound_b +
                      4.0 * s2 * std::log(1.0 / p.delta) + s2 * p.d * ln_alpha +
                      2.0 * std::sqrt(p.alpha) * p.theta_norm *
                          std::sqrt(s2 * p.d * ln_alpha + 2.0 * s2 * std::log(1.0 / p.delta));
  return 2.0 / std::sqrt(std::log(2.0)) * std::max(p.reward_gap, std::sqrt(u_sq)) *
         std::sqrt(p.d * horizon * std::log1p(l2 * horizon / (p.alpha * p.d)));
}

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  const int count = std::min(jobs, n);
  workers.reserve(count);
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

// Fraction of independent runs in which theta* stayed inside Theta_t at
// every round.
inline double coverage_study(const Environment& env, const MixtureSpec& spec,
                             const RunSettings& s, int runs, std::uint64_t seed, int jobs = 1) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!env.synthetic()) throw std::invalid_argument("coverage needs a synthetic environment");
  std::vector<char> covered(runs, 0);
  parallel_for(runs, jobs, [&](int i) {
    const BanditRun run = run_linucb(Policy::amm(), env, spec, s,
                                     seed + static_cast<std::uint64_t>(i));
    covered[i] = run.covered_all() ? 1 : 0;
  });
  int hits = 0;
  for (char c : covered) hits += c;
  return static_cast<double>(hits) / runs;
}

}  // namespace mmucb
