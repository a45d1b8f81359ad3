#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "mmucb/mixtures.hpp"

namespace mmucb {

// Incrementally maintained sufficient statistics of the history:
//   gram = Phi^T Phi,  A = gram + alpha I,  A^{-1} (Sherman-Morrison),
//   log det((1/alpha) Phi^T Phi + I),  b = Phi^T r,  rr = r^T r.
// Also carries the run parameters (sigma, B, delta) every radius needs.
class GramState {
 public:
  GramState(int d, double alpha, double sigma, double bound_b, double delta) {
    if (d <= 0) throw std::invalid_argument("d must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(bound_b > 0.0)) throw std::invalid_argument("B must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in (0, 1]");
    d_ = d;
    alpha_ = alpha;
    sigma_ = sigma;
    bound_b_ = bound_b;
    delta_ = delta;
    gram_ = Matrix::Zero(d, d);
    a_inv_ = Matrix::Identity(d, d) / alpha;
    b_ = Vector::Zero(d);
  }

  int d() const { return d_; }
  double alpha() const { return alpha_; }
  double sigma() const { return sigma_; }
  double bound_b() const { return bound_b_; }
  double delta() const { return delta_; }
  int t() const { return t_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& a_inv() const { return a_inv_; }
  const Vector& b() const { return b_; }
  double rr() const { return rr_; }
  double log_det_ratio() const { return log_det_ratio_; }
  double det_ratio() const { return std::exp(log_det_ratio_); }

  Vector theta_hat() const { return a_inv_ * b_; }

  // ||Phi theta - r||^2 from the d x d statistics only.
  double residual_sq(const Vector& theta) const {
    return theta.dot(gram_ * theta) - 2.0 * b_.dot(theta) + rr_;
  }

  void update(const Vector& phi, double reward) {
    if (phi.size() != d_) throw std::invalid_argument("feature dimension mismatch");
    if (!phi.allFinite() || !std::isfinite(reward))
      throw std::invalid_argument("non-finite gram update");
    ++t_;
    if (phi.squaredNorm() == 0.0) return;  // rank-1 update with the zero vector

    Vector u = a_inv_ * phi;
    double quad = phi.dot(u);
    if (1.0 + quad <= 0.0) {  // numerically corrupted inverse; rebuild and retry
      rebuild();
      u = a_inv_ * phi;
      quad = phi.dot(u);
      if (1.0 + quad <= 0.0) throw std::runtime_error("gram update denominator not positive");
    }
    log_det_ratio_ += std::log1p(quad);
    a_inv_.noalias() -= (u * u.transpose()) / (1.0 + quad);
    gram_.noalias() += phi * phi.transpose();
    b_ += reward * phi;
    rr_ += reward * reward;

    // Periodically compare against a direct inverse and swap it in if the
    // incremental one has drifted.
    if (++updates_since_check_ >= 512) {
      updates_since_check_ = 0;
      const Matrix direct = direct_inverse();
      if ((direct - a_inv_).norm() > 1e-10) {
        a_inv_ = direct;
        log_det_ratio_ = direct_log_det_ratio();
      }
    }
  }

  void rebuild() {
    a_inv_ = direct_inverse();
    log_det_ratio_ = direct_log_det_ratio();
  }

 private:
  Matrix direct_inverse() const {
    const Matrix a = gram_ + alpha_ * Matrix::Identity(d_, d_);
    return Eigen::LLT<Matrix>(a).solve(Matrix::Identity(d_, d_));
  }

  double direct_log_det_ratio() const {
    const Matrix m = gram_ / alpha_ + Matrix::Identity(d_, d_);
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw std::runtime_error("gram matrix lost definiteness");
    double ld = 0.0;
    for (int i = 0; i < d_; ++i) ld += std::log(llt.matrixL()(i, i));
    return 2.0 * ld;
  }

  int d_ = 0;
  double alpha_ = 1.0, sigma_ = 1.0, bound_b_ = 1.0, delta_ = 0.05;
  Matrix gram_, a_inv_;
  Vector b_;
  double rr_ = 0.0;
  double log_det_ratio_ = 0.0;
  int t_ = 0;
  int updates_since_check_ = 0;
};

// The confidence set {theta : ||Phi theta - r|| <= r_mm and ||theta|| <= B}.
struct ConfidenceSet {
  double r_mm = 0.0;
  double bound_b = 0.0;
  const GramState* gram = nullptr;

  bool contains(const Vector& theta, double tol = 1e-9) const {
    if (theta.norm() > bound_b + tol) return false;
    return gram->residual_sq(theta) <= r_mm * r_mm + tol;
  }
};

// Squared mixture radius from the dense t x t parameters:
//   (mu - r)^T (I + T/sigma^2)^{-1} (mu - r)
//     + sigma^2 ln det(I + T/sigma^2) + 2 sigma^2 ln(1/delta).
inline double radius_mm_naive_sq(const Vector& mu, const Matrix& cov, const Vector& rewards,
                                 double sigma, double delta) {
  const int t = static_cast<int>(mu.size());
  if (cov.rows() != t || cov.cols() != t || rewards.size() != t)
    throw std::invalid_argument("dimension mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in (0, 1]");
  const double tail = 2.0 * sigma * sigma * std::log(1.0 / delta);
  if (t == 0) return tail;

  Matrix m = Matrix::Identity(t, t) + cov / (sigma * sigma);
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    // Clamp small negative eigenvalues of T caused by floating-point drift.
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const double floor = -1e-8 * (cov.trace() / t);
    if (es.eigenvalues().minCoeff() < floor)
      throw std::invalid_argument("mixture covariance is not positive semi-definite");
    const Vector clamped = es.eigenvalues().cwiseMax(0.0);
    m = Matrix::Identity(t, t) +
        es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose() / (sigma * sigma);
    llt.compute(m);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("Cholesky failed after eigenvalue clamp");
  }
  double log_det = 0.0;
  for (int i = 0; i < t; ++i) log_det += std::log(llt.matrixL()(i, i));
  log_det *= 2.0;
  const Vector v = mu - rewards;
  const double quad = v.dot(llt.solve(v));
  return quad + sigma * sigma * log_det + tail;
}

// d x d form of the mixture radius for the linear family, where
// T_t = Phi Sigma0 Phi^T and mu_t = Phi theta0. Maintains
//   M = Phi^T Phi + sigma^2 Sigma0^{-1}  (inverse by Sherman-Morrison),
//   ln det(I + T/sigma^2) = sum of log(1 + phi^T M^{-1} phi),
//   w = Phi^T (mu - r)  and  vv = (mu - r)^T (mu - r),
// giving the quadratic term as vv - w^T M^{-1} w.
class LinearMixtureRadius {
 public:
  LinearMixtureRadius(const MixtureSpec& spec, int d) {
    if (d <= 0) throw std::invalid_argument("d must be positive");
    if (spec.family == MixtureFamily::standard) {
      theta0_ = Vector::Zero(d);
      prior_ = Matrix::Identity(d, d) * (spec.sigma * spec.sigma / spec.standard_c);
    } else if (spec.family == MixtureFamily::linear) {
      if (spec.theta0.size() != d) throw std::invalid_argument("theta0 dimension mismatch");
      theta0_ = spec.theta0;
      prior_ = spec.sigma * spec.sigma *
               Eigen::LLT<Matrix>(spec.sigma0).solve(Matrix::Identity(d, d));
    } else {
      throw std::invalid_argument("efficient radius needs the standard or linear family");
    }
    d_ = d;
    sigma_ = spec.sigma;
    m_ = prior_;
    m_inv_ = Eigen::LLT<Matrix>(prior_).solve(Matrix::Identity(d, d));
    w_ = Vector::Zero(d);
  }

  int t() const { return t_; }

  void update(const Vector& phi, double reward) {
    if (phi.size() != d_) throw std::invalid_argument("feature dimension mismatch");
    if (!phi.allFinite() || !std::isfinite(reward))
      throw std::invalid_argument("non-finite radius update");
    ++t_;
    Vector u = m_inv_ * phi;
    double quad = phi.dot(u);
    if (1.0 + quad <= 0.0) {
      rebuild();
      u = m_inv_ * phi;
      quad = phi.dot(u);
      if (1.0 + quad <= 0.0) throw std::runtime_error("radius update denominator not positive");
    }
    log_det_ += std::log1p(quad);
    m_inv_.noalias() -= (u * u.transpose()) / (1.0 + quad);
    m_.noalias() += phi * phi.transpose();
    const double resid = phi.dot(theta0_) - reward;
    w_ += resid * phi;
    vv_ += resid * resid;
    if (++updates_since_check_ >= 512) {
      updates_since_check_ = 0;
      const Matrix direct = Eigen::LLT<Matrix>(m_).solve(Matrix::Identity(d_, d_));
      if ((direct - m_inv_).norm() > 1e-10) rebuild();
    }
  }

  // Squared R_MM for the current history.
  double radius_mm_sq(double delta) const {
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in (0, 1]");
    const double quad = std::max(0.0, vv_ - w_.dot(m_inv_ * w_));
    return quad + sigma_ * sigma_ * (log_det_ + 2.0 * std::log(1.0 / delta));
  }

 private:
  void rebuild() {
    m_inv_ = Eigen::LLT<Matrix>(m_).solve(Matrix::Identity(d_, d_));
    // ln det(M_t) - ln det(M_0) through Cholesky factors.
    Eigen::LLT<Matrix> now(m_), base(prior_);
    double ld = 0.0;
    for (int i = 0; i < d_; ++i)
      ld += std::log(now.matrixL()(i, i)) - std::log(base.matrixL()(i, i));
    log_det_ = 2.0 * ld;
  }

  int d_ = 0;
  double sigma_ = 1.0;
  Vector theta0_;
  Matrix prior_;  // sigma^2 Sigma0^{-1}
  Matrix m_, m_inv_;
  double log_det_ = 0.0;
  Vector w_;
  double vv_ = 0.0;
  int t_ = 0;
  int updates_since_check_ = 0;
};

// Analytic radius: R_AMM^2 = R_MM^2 + alpha B^2 - r^T r + b^T A^{-1} b.
inline double radius_amm_sq(const GramState& gram, double r_mm_sq) {
  const double expr = r_mm_sq + gram.alpha() * gram.bound_b() * gram.bound_b() - gram.rr() +
                      gram.b().dot(gram.a_inv() * gram.b());
  if (expr < -1e-6 * (r_mm_sq + 1.0))
    throw std::invalid_argument("negative squared analytic radius: inconsistent inputs");
  return std::max(0.0, expr);
}

inline double radius_amm(const GramState& gram, double r_mm_sq) {
  return std::sqrt(radius_amm_sq(gram, r_mm_sq));
}

// Baseline ellipsoid radius:
//   R_OFUL = sigma sqrt(ln det((1/alpha) Phi^T Phi + I) + 2 ln(1/delta)) + sqrt(alpha) B.
inline double radius_oful(const GramState& gram) {
  const double inner = gram.log_det_ratio() + 2.0 * std::log(1.0 / gram.delta());
  return gram.sigma() * std::sqrt(inner) + std::sqrt(gram.alpha()) * gram.bound_b();
}

// Closed form of the analytic radius under standard(c) mixtures at alpha = sigma^2/c:
//   R^2 = sigma^2 (ln det((c/sigma^2) Phi^T Phi + I) + 2 ln(1/delta) + B^2/c).
inline double radius_special_sq(const GramState& gram, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  const double want_alpha = gram.sigma() * gram.sigma() / c;
  if (std::abs(gram.alpha() - want_alpha) > 1e-12 * (1.0 + want_alpha))
    throw std::invalid_argument("radius_special requires alpha = sigma^2 / c");
  const double s2 = gram.sigma() * gram.sigma();
  return s2 * (gram.log_det_ratio() + 2.0 * std::log(1.0 / gram.delta()) +
               gram.bound_b() * gram.bound_b() / c);
}

inline double radius_special(const GramState& gram, double c) {
  return std::sqrt(radius_special_sq(gram, c));
}

}  // namespace mmucb
