#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mmucb/confidence.hpp"
#include "mmucb/rng.hpp"

namespace mmucb {

// Slow, independent re-derivations of library quantities, used as test
// oracles and by the CLI selftest. Nothing here shares code with the
// incremental paths it checks.

struct McRadiusEstimate {
  double r_mm_sq = 0.0;
  double std_error = 0.0;  // propagated standard error of r_mm_sq
};

// Monte-Carlo estimate of the squared mixture radius through the Gaussian
// integral E[exp(-||z - r||^2 / (2 sigma^2))] with z ~ N(mu, T):
//   R^2 = -2 sigma^2 ln E + 2 sigma^2 ln(1/delta).
inline McRadiusEstimate radius_mm_monte_carlo(const Vector& mu, const Matrix& cov,
                                              const Vector& rewards, double sigma, double delta,
                                              int samples, std::uint64_t seed) {
  const int t = static_cast<int>(mu.size());
  if (cov.rows() != t || cov.cols() != t || rewards.size() != t)
    throw std::invalid_argument("dimension mismatch");
  if (samples < 2) throw std::invalid_argument("need at least 2 samples");
  const double tail = 2.0 * sigma * sigma * std::log(1.0 / delta);
  if (t == 0) return {tail, 0.0};

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Matrix sqrt_cov =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  Vector xi(t);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < t; ++i) xi(i) = rng.gaussian();
    const Vector z = mu + sqrt_cov * xi;
    const double g = std::exp(-(z - rewards).squaredNorm() / (2.0 * sigma * sigma));
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - mean * mean) / (samples - 1);
  const double se = std::sqrt(var);
  if (!(mean > 0.0)) throw std::runtime_error("Monte-Carlo integral estimate vanished");
  McRadiusEstimate out;
  out.r_mm_sq = -2.0 * sigma * sigma * std::log(mean) + tail;
  out.std_error = 2.0 * sigma * sigma * se / mean;
  return out;
}

// Brute-force maximizer of phi^T theta over the intersection
//   { ||Phi theta - r||^2 <= r_sq } ∩ { ||theta|| <= B }
// by a log-barrier interior-point method with Newton steps. Intended for
// small d as an oracle fully independent of the dual-search path.
inline double bruteforce_ucb(const GramState& gram, double r_mm_sq, const Vector& phi) {
  const int d = gram.d();
  const Matrix& g = gram.gram();
  const Vector& b = gram.b();
  const double rr = gram.rr();
  const double r_sq = r_mm_sq;
  const double b_sq = gram.bound_b() * gram.bound_b();

  const auto resid_sq = [&](const Vector& th) { return th.dot(g * th) - 2.0 * b.dot(th) + rr; };

  // Strictly feasible start: best-slack candidate among ridge solutions.
  Vector theta = Vector::Zero(d);
  double best_slack = -std::numeric_limits<double>::infinity();
  bool feasible = false;
  std::vector<double> ridge = {1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6};
  std::vector<Vector> candidates = {Vector::Zero(d)};
  for (double a : ridge) {
    const Matrix m = g + a * Matrix::Identity(d, d);
    Vector cand = Eigen::LLT<Matrix>(m).solve(b);
    const double n = cand.norm();
    if (n > 0.95 * gram.bound_b()) cand *= 0.95 * gram.bound_b() / n;
    candidates.push_back(cand);
  }
  for (const auto& cand : candidates) {
    const double s1 = r_sq - resid_sq(cand);
    const double s2 = b_sq - cand.squaredNorm();
    const double slack = std::min(s1, s2);
    if (s1 > 0.0 && s2 > 0.0 && slack > best_slack) {
      best_slack = slack;
      theta = cand;
      feasible = true;
    }
  }
  if (!feasible) throw std::runtime_error("no strictly feasible point found");

  for (double tau = 1.0; tau <= 1e9; tau *= 10.0) {
    for (int it = 0; it < 60; ++it) {
      const double s1 = r_sq - resid_sq(theta);
      const double s2 = b_sq - theta.squaredNorm();
      const Vector c1 = 2.0 * (g * theta - b);  // gradient of resid_sq
      const Vector c2 = 2.0 * theta;
      const Vector grad = -tau * phi + c1 / s1 + c2 / s2;
      Matrix hess = 2.0 * g / s1 + (c1 * c1.transpose()) / (s1 * s1) +
                    2.0 * Matrix::Identity(d, d) / s2 + (c2 * c2.transpose()) / (s2 * s2);
      const Vector step = hess.ldlt().solve(-grad);
      const double decrement = -grad.dot(step);
      if (!(decrement > 1e-14)) break;
      double scale = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector cand = theta + scale * step;
        if (r_sq - resid_sq(cand) > 0.0 && b_sq - cand.squaredNorm() > 0.0) {
          const double obj_now = -tau * phi.dot(theta) - std::log(s1) - std::log(s2);
          const double obj_cand = -tau * phi.dot(cand) - std::log(r_sq - resid_sq(cand)) -
                                  std::log(b_sq - cand.squaredNorm());
          if (obj_cand < obj_now - 1e-15) {
            theta = cand;
            moved = true;
            break;
          }
        }
        scale *= 0.5;
      }
      if (!moved) break;
    }
  }
  return phi.dot(theta);
}

inline double bruteforce_lcb(const GramState& gram, double r_mm_sq, const Vector& phi) {
  return -bruteforce_ucb(gram, r_mm_sq, -phi);
}

// Rejection-sampled points of the confidence set, for weak-duality checks.
inline std::vector<Vector> sample_feasible(const GramState& gram, double r_mm_sq, int want,
                                           std::uint64_t seed, int max_tries = 200000) {
  std::vector<Vector> out;
  Rng rng(seed);
  const int d = gram.d();
  for (int i = 0; i < max_tries && static_cast<int>(out.size()) < want; ++i) {
    Vector theta(d);
    for (int j = 0; j < d; ++j) theta(j) = rng.uniform(-gram.bound_b(), gram.bound_b());
    if (theta.norm() > gram.bound_b()) continue;
    if (gram.residual_sq(theta) <= r_mm_sq) out.push_back(theta);
  }
  return out;
}

}  // namespace mmucb
