#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmucb/features.hpp"

namespace mmucb {

enum class MixtureFamily { standard, linear, mean_kernel, adaptive };

using MeanFn = std::function<double(const Vector&)>;
using KernelFn = std::function<double(const Vector&, const Vector&)>;

// Gaussian mixture-distribution family over reward-vector predictions.
// Mean/kernel functions take feature vectors phi(a).
struct MixtureSpec {
  MixtureFamily family = MixtureFamily::standard;
  double sigma = 1.0;  // sub-Gaussian noise scale
  MeanFn mean_fn;
  KernelFn kernel_fn;
  double beta = 0.0;  // adaptive-family GP likelihood variance

  // For the linear family only: induced parameters mu_t = Phi theta0,
  // T_t = Phi Sigma0 Phi^T; kept so the d x d radius path can use them.
  Vector theta0;
  Matrix sigma0;
  bool has_linear_params = false;
  double standard_c = 0.0;

  static MixtureSpec standard(double c, double sigma) {
    if (!(c > 0.0)) throw std::invalid_argument("standard mixture needs c > 0");
    // standard(c) == linear(0, c I); route through the same kernel so that
    // the two families produce bit-identical states.
    MixtureSpec s;
    s.family = MixtureFamily::standard;
    s.sigma = check_sigma(sigma);
    s.standard_c = c;
    s.mean_fn = [](const Vector&) { return 0.0; };
    s.kernel_fn = [c](const Vector& x, const Vector& y) { return x.dot(c * y); };
    return s;
  }

  static MixtureSpec linear(Vector theta0, Matrix sigma0, double sigma) {
    if (sigma0.rows() != sigma0.cols() || sigma0.rows() != theta0.size())
      throw std::invalid_argument("Sigma0 must be square and match theta0");
    Eigen::LLT<Matrix> llt(sigma0);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("Sigma0 must be symmetric positive-definite");
    MixtureSpec s;
    s.family = MixtureFamily::linear;
    s.sigma = check_sigma(sigma);
    s.theta0 = std::move(theta0);
    s.sigma0 = std::move(sigma0);
    s.has_linear_params = true;
    const Vector t0 = s.theta0;
    const Matrix s0 = s.sigma0;
    s.mean_fn = [t0](const Vector& x) { return x.dot(t0); };
    s.kernel_fn = [s0](const Vector& x, const Vector& y) { return x.dot(s0 * y); };
    return s;
  }

  static MixtureSpec mean_kernel(MeanFn m, KernelFn k, double sigma) {
    MixtureSpec s;
    s.family = MixtureFamily::mean_kernel;
    s.sigma = check_sigma(sigma);
    s.mean_fn = std::move(m);
    s.kernel_fn = std::move(k);
    return s;
  }

  static MixtureSpec adaptive(MeanFn m, KernelFn k, double beta, double sigma) {
    if (!(beta > 0.0)) throw std::invalid_argument("adaptive mixture needs beta > 0");
    MixtureSpec s;
    s.family = MixtureFamily::adaptive;
    s.sigma = check_sigma(sigma);
    s.mean_fn = std::move(m);
    s.kernel_fn = std::move(k);
    s.beta = beta;
    return s;
  }

 private:
  static double check_sigma(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    return sigma;
  }
};

// Dense (mu_t, T_t) built by appends. Appends never rewrite existing entries,
// so every prefix of a state is bit-identical to the earlier state.
class MixtureState {
 public:
  MixtureState() = default;

  int size() const { return t_; }
  const Vector& mu() const { return mu_; }
  const Matrix& covariance() const { return cov_; }

  // Appends mu_t's new element and T_t's new row/column for the action with
  // feature vector phi. previous_reward is required from the second append on
  // for the adaptive family (it feeds the GP mean recursion) and must be
  // absent otherwise.
  void append(const MixtureSpec& spec, const Vector& phi,
              std::optional<double> previous_reward = std::nullopt) {
    if (!phi.allFinite()) throw std::invalid_argument("non-finite feature vector");
    const bool adaptive = spec.family == MixtureFamily::adaptive;
    const bool needs_reward = adaptive && t_ >= 1;
    if (needs_reward && !previous_reward.has_value())
      throw std::invalid_argument("adaptive append needs the previous reward");
    if (!needs_reward && previous_reward.has_value())
      throw std::invalid_argument("unexpected previous_reward");
    if (previous_reward && !std::isfinite(*previous_reward))
      throw std::invalid_argument("non-finite reward");

    const int t = t_;  // history length before this append
    mu_.conservativeResize(t + 1);
    cov_.conservativeResize(t + 1, t + 1);

    Vector cross(t);  // k(a_i, a_new) against the base kernel
    for (int i = 0; i < t; ++i) cross(i) = spec.kernel_fn(features_[i], phi);
    const Vector cross_raw = cross;
    double diag = spec.kernel_fn(phi, phi);
    double mean = spec.mean_fn(phi);

    if (adaptive) {
      if (previous_reward) rewards_.push_back(*previous_reward);
      if (t >= 1) {
        // GP posterior recursion on (K_t + beta I) via its Cholesky factor:
        //   k_t(a, a') = k(a, a') - k_t(a)^T (K_t + beta I)^{-1} k_t(a')
        //   m_t(a)     = m(a) - k_t(a)^T (K_t + beta I)^{-1} (m_t - r_t)
        const Vector v = solve_chol(cross_raw);
        for (int i = 0; i < t; ++i) cross(i) -= base_rows_.row(i).head(t).dot(v);
        diag -= cross_raw.dot(v);
        Vector resid(t);
        for (int i = 0; i < t; ++i) resid(i) = base_means_[i] - rewards_[i];
        mean -= cross_raw.dot(solve_chol(resid));
      }
    }

    mu_(t) = mean;
    for (int i = 0; i < t; ++i) {
      cov_(i, t) = cross(i);
      cov_(t, i) = cross(i);
    }
    cov_(t, t) = diag;

    if (adaptive) extend_base(spec, phi, cross_raw);
    features_.push_back(phi);
    ++t_;
  }

 private:
  // Solve (K_t + beta I) x = y through the maintained Cholesky factor.
  Vector solve_chol(const Vector& y) const {
    const int t = t_;
    Vector x = chol_.topLeftCorner(t, t).triangularView<Eigen::Lower>().solve(y);
    return chol_.topLeftCorner(t, t).triangularView<Eigen::Lower>().transpose().solve(x);
  }

  // Grow the base kernel matrix and its Cholesky by one row/column.
  void extend_base(const MixtureSpec& spec, const Vector& phi, const Vector& k_vec) {
    const int t = t_;
    base_rows_.conservativeResize(t + 1, t + 1);
    chol_.conservativeResize(t + 1, t + 1);
    const double k_diag = spec.kernel_fn(phi, phi);
    for (int i = 0; i < t; ++i) {
      base_rows_(i, t) = k_vec(i);
      base_rows_(t, i) = k_vec(i);
      chol_(i, t) = 0.0;
    }
    base_rows_(t, t) = k_diag;
    Vector l12(t);
    if (t > 0)
      l12 = chol_.topLeftCorner(t, t).triangularView<Eigen::Lower>().solve(k_vec);
    const double rest = k_diag + spec.beta - (t > 0 ? l12.squaredNorm() : 0.0);
    if (!(rest > 0.0)) throw std::runtime_error("kernel matrix lost positive definiteness");
    for (int i = 0; i < t; ++i) chol_(t, i) = l12(i);
    chol_(t, t) = std::sqrt(rest);
    base_means_.push_back(spec.mean_fn(phi));
  }

  int t_ = 0;
  Vector mu_;
  Matrix cov_;
  std::vector<Vector> features_;

  // adaptive-family caches
  Matrix base_rows_;                // base kernel matrix K_t
  Matrix chol_;                     // lower Cholesky of K_t + beta I
  std::vector<double> base_means_;  // m(a_i)
  std::vector<double> rewards_;     // r_1 .. r_{t-1}
};

// Batch reference construction: t sequential appends.
inline MixtureState mixture_dense(const MixtureSpec& spec, const std::vector<Vector>& features,
                                  const std::vector<double>& rewards) {
  const bool adaptive = spec.family == MixtureFamily::adaptive;
  const std::size_t needed = adaptive && !features.empty() ? features.size() - 1 : 0;
  if (adaptive && rewards.size() < needed)
    throw std::invalid_argument("adaptive mixture_dense needs rewards for all but the last action");
  MixtureState state;
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::optional<double> prev;
    if (adaptive && i >= 1) prev = rewards[i - 1];
    state.append(spec, features[i], prev);
  }
  return state;
}

}  // namespace mmucb
