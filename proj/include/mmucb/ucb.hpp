#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmucb/confidence.hpp"
#include "mmucb/features.hpp"

namespace mmucb {

// Bracket for the 1-D dual minimization over ln(alpha).
struct DualSearchConfig {
  double alpha_min = 1e-8;
  double alpha_max = 1e12;
  double tol = 1e-9;  // relative tolerance on alpha
  int max_iters = 200;

  void validate() const {
    if (!(alpha_min > 0.0) || !(alpha_min < alpha_max))
      throw std::invalid_argument("need 0 < alpha_min < alpha_max");
  }
};

struct DualResult {
  double value = 0.0;
  double alpha = 0.0;
  // True when the dual profile was monotone over the bracket, so the infimum
  // may lie at the boundary (e.g. alpha -> infinity with no data).
  bool boundary = false;
};

// Closed-form bound at the gram state's own regularizer:
//   phi^T theta_hat +/- R_AMM sqrt(phi^T A^{-1} phi).
inline double analytic_ucb(const GramState& gram, double r_mm_sq, const Vector& phi) {
  const double r = radius_amm(gram, r_mm_sq);
  return phi.dot(gram.theta_hat()) + r * std::sqrt(std::max(0.0, phi.dot(gram.a_inv() * phi)));
}

inline double analytic_lcb(const GramState& gram, double r_mm_sq, const Vector& phi) {
  const double r = radius_amm(gram, r_mm_sq);
  return phi.dot(gram.theta_hat()) - r * std::sqrt(std::max(0.0, phi.dot(gram.a_inv() * phi)));
}

// Evaluates the analytic bound as a function of alpha in O(d) per evaluation,
// from one symmetric eigendecomposition of Phi^T Phi. Algebraically identical
// to re-solving (Phi^T Phi + alpha I) per alpha.
class DualBound {
 public:
  DualBound(const GramState& gram, double r_mm_sq)
      : r_mm_sq_(r_mm_sq),
        rr_(gram.rr()),
        bound_b_(gram.bound_b()),
        scale_(r_mm_sq + 1.0) {
    if (!(r_mm_sq >= 0.0)) throw std::invalid_argument("squared radius must be nonnegative");
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram.gram());
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    q_ = es.eigenvectors();
    lam_ = es.eigenvalues().cwiseMax(0.0);
    qb_ = q_.transpose() * gram.b();
  }

  // Analytic UCB (sign = +1) or LCB (sign = -1) at this alpha.
  double bound_at(const Vector& z, double alpha, double sign) const {
    const Eigen::ArrayXd denom = lam_.array() + alpha;
    const double mean = (z.array() * qb_.array() / denom).sum();
    const double phi_quad = (z.array().square() / denom).sum();
    const double b_quad = (qb_.array().square() / denom).sum();
    double r_sq = r_mm_sq_ + alpha * bound_b_ * bound_b_ - rr_ + b_quad;
    if (r_sq < -1e-6 * scale_)
      throw std::runtime_error("confidence set is empty (negative squared dual radius)");
    r_sq = std::max(0.0, r_sq);
    return mean + sign * std::sqrt(r_sq) * std::sqrt(std::max(0.0, phi_quad));
  }

  Vector project(const Vector& phi) const { return q_.transpose() * phi; }

  // min over alpha of the analytic UCB (strong duality makes this the exact
  // bound); lcb() is the mirrored max of the analytic LCB.
  DualResult ucb(const Vector& phi, const DualSearchConfig& cfg,
                 double extra_alpha = -1.0) const {
    return optimize(phi, cfg, +1.0, extra_alpha);
  }

  DualResult lcb(const Vector& phi, const DualSearchConfig& cfg,
                 double extra_alpha = -1.0) const {
    DualResult r = optimize(phi, cfg, -1.0, extra_alpha);
    r.value = -r.value;
    return r;
  }

 private:
  // Minimizes sign * bound over ln(alpha): grid bracket, then golden section.
  DualResult optimize(const Vector& phi, const DualSearchConfig& cfg, double sign,
                      double extra_alpha) const {
    cfg.validate();
    const Vector z = project(phi);
    const auto eval = [&](double ln_alpha) {
      return sign * bound_at(z, std::exp(ln_alpha), sign);
    };

    const double lo = std::log(cfg.alpha_min), hi = std::log(cfg.alpha_max);
    constexpr int kGrid = 33;
    double best_x = lo, best_f = std::numeric_limits<double>::infinity();
    int best_i = 0;
    std::vector<double> fs(kGrid);
    for (int i = 0; i < kGrid; ++i) {
      const double x = lo + (hi - lo) * i / (kGrid - 1);
      fs[i] = eval(x);
      if (fs[i] < best_f) {
        best_f = fs[i];
        best_x = x;
        best_i = i;
      }
    }

    DualResult result;
    result.boundary = (best_i == 0 || best_i == kGrid - 1);
    if (!result.boundary) {
      // Golden-section refinement inside the bracketing grid cells.
      double a = lo + (hi - lo) * (best_i - 1) / (kGrid - 1);
      double b = lo + (hi - lo) * (best_i + 1) / (kGrid - 1);
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double c = b - gr * (b - a), d = a + gr * (b - a);
      double fc = eval(c), fd = eval(d);
      for (int it = 0; it < cfg.max_iters && (b - a) > cfg.tol * (1.0 + std::abs(a)); ++it) {
        if (fc < fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - gr * (b - a);
          fc = eval(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + gr * (b - a);
          fd = eval(d);
        }
      }
      const double mid = 0.5 * (a + b), fmid = eval(mid);
      if (fmid < best_f) {
        best_f = fmid;
        best_x = mid;
      }
      if (fc < best_f) {
        best_f = fc;
        best_x = c;
      }
      if (fd < best_f) {
        best_f = fd;
        best_x = d;
      }
    }
    // Every evaluated alpha is a valid bound by weak duality; also try the
    // caller's preferred alpha so the result never exceeds the analytic bound.
    if (extra_alpha > 0.0) {
      const double x = std::log(extra_alpha);
      const double f = eval(x);
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
    }
    result.value = best_f;
    result.alpha = std::exp(best_x);
    return result;
  }

  Matrix q_;
  Vector lam_, qb_;
  double r_mm_sq_, rr_, bound_b_, scale_;
};

inline DualResult exact_ucb(const GramState& gram, double r_mm_sq, const Vector& phi,
                            const DualSearchConfig& cfg = {}) {
  return DualBound(gram, r_mm_sq).ucb(phi, cfg, gram.alpha());
}

inline DualResult exact_lcb(const GramState& gram, double r_mm_sq, const Vector& phi,
                            const DualSearchConfig& cfg = {}) {
  return DualBound(gram, r_mm_sq).lcb(phi, cfg, gram.alpha());
}

struct ArgmaxOptions {
  int restarts = 10;
  int iters = 200;
  double fd_eps = 1e-5;
};

struct ArgmaxResult {
  Vector action;
  double value = -std::numeric_limits<double>::infinity();
};

namespace detail {

// Projected gradient ascent with central finite differences and backtracking.
template <typename BoundFn>
ArgmaxResult ascend_box(const BoundFn& bound_fn, const BoxActionSet& box, Vector x,
                        const ArgmaxOptions& opt) {
  const int dim = static_cast<int>(x.size());
  const auto clamp = [&](Vector v) {
    for (int i = 0; i < dim; ++i) v(i) = std::min(box.upper(i), std::max(box.lower(i), v(i)));
    return v;
  };
  x = clamp(std::move(x));
  double fx = bound_fn(x);
  double step = 0.1 * std::max(1e-3, (box.upper - box.lower).maxCoeff());
  for (int it = 0; it < opt.iters && step > 1e-12; ++it) {
    Vector g(dim);
    for (int i = 0; i < dim; ++i) {
      const double eps = opt.fd_eps * (1.0 + std::abs(x(i)));
      Vector hi = x, lo = x;
      hi(i) += eps;
      lo(i) -= eps;
      g(i) = (bound_fn(clamp(hi)) - bound_fn(clamp(lo))) / (2.0 * eps);
    }
    const double gnorm = g.norm();
    if (gnorm < 1e-14) break;
    const Vector cand = clamp(x + (step / gnorm) * g);
    const double fc = bound_fn(cand);
    if (std::isfinite(fc) && fc > fx) {
      x = cand;
      fx = fc;
      step *= 1.2;
    } else {
      step *= 0.5;
    }
  }
  return {x, fx};
}

}  // namespace detail

// Maximizes bound_fn over the action set. Finite sets are enumerated exactly
// with lowest-index tie-breaking; boxes use multi-restart projected gradient
// ascent from quasi-random starting points.
template <typename BoundFn>
ArgmaxResult argmax_action(const ActionSet& set, const BoundFn& bound_fn,
                           const ArgmaxOptions& opt = {}) {
  ArgmaxResult best;
  if (set.is_finite()) {
    for (const auto& a : set.finite().actions) {
      const double v = bound_fn(a);
      if (!std::isfinite(v)) continue;
      if (v > best.value) {
        best.value = v;
        best.action = a;
      }
    }
    if (best.action.size() == 0)
      throw std::runtime_error("no action produced a finite bound value");
    return best;
  }
  const auto& box = set.box();
  const int dim = static_cast<int>(box.lower.size());
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Vector start(dim);
    if (r == 0) {
      start = 0.5 * (box.lower + box.upper);
    } else {
      const Vector u = detail::halton(r, dim);
      start = box.lower + (box.upper - box.lower).cwiseProduct(u);
    }
    const ArgmaxResult cand = detail::ascend_box(bound_fn, box, start, opt);
    if (cand.value > best.value) best = cand;
  }
  if (best.action.size() == 0) throw std::runtime_error("box search found no finite value");
  return best;
}

}  // namespace mmucb
