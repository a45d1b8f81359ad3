#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mmucb/rng.hpp"

namespace mmucb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class FeatureKind { identity, random_fourier, random_layer, table };

// Deterministic map from actions in R^{d_A} to feature vectors in R^d.
// Immutable after construction; featurize is pure.
class FeatureMap {
 public:
  static FeatureMap identity(int dim) {
    FeatureMap m;
    m.kind_ = FeatureKind::identity;
    m.input_dim_ = dim;
    m.feature_dim_ = dim;
    return m;
  }

  // Random Fourier features for the Gaussian kernel exp(-|x-x'|^2 / 2 l^2):
  //   phi_i(x) = sqrt(2/d) cos(w_i^T x / l + b_i),
  // with w_i standard Gaussian rows and b_i uniform on [0, 2pi).
  static FeatureMap random_fourier(std::uint64_t seed, int input_dim, int feature_dim,
                                   double lengthscale) {
    if (input_dim <= 0 || feature_dim <= 0) throw std::invalid_argument("dimensions must be positive");
    if (feature_dim % 2 != 0) throw std::invalid_argument("random_fourier feature_dim must be even");
    if (!(lengthscale > 0.0)) throw std::invalid_argument("lengthscale must be positive");
    FeatureMap m;
    m.kind_ = FeatureKind::random_fourier;
    m.input_dim_ = input_dim;
    m.feature_dim_ = feature_dim;
    m.lengthscale_ = lengthscale;
    m.seed_ = seed;
    Rng rng(seed);
    m.weights_.resize(feature_dim, input_dim);
    for (int i = 0; i < feature_dim; ++i)
      for (int j = 0; j < input_dim; ++j) m.weights_(i, j) = rng.gaussian();
    m.offsets_.resize(feature_dim);
    for (int i = 0; i < feature_dim; ++i) m.offsets_(i) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return m;
  }

  // tanh of a random affine map; weight scale 1/sqrt(d_A), standard normal biases.
  static FeatureMap random_layer(std::uint64_t seed, int input_dim, int feature_dim) {
    if (input_dim <= 0 || feature_dim <= 0) throw std::invalid_argument("dimensions must be positive");
    FeatureMap m;
    m.kind_ = FeatureKind::random_layer;
    m.input_dim_ = input_dim;
    m.feature_dim_ = feature_dim;
    m.seed_ = seed;
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    m.weights_.resize(feature_dim, input_dim);
    for (int i = 0; i < feature_dim; ++i)
      for (int j = 0; j < input_dim; ++j) m.weights_(i, j) = scale * rng.gaussian();
    m.offsets_.resize(feature_dim);
    for (int i = 0; i < feature_dim; ++i) m.offsets_(i) = rng.gaussian();
    return m;
  }

  static FeatureMap table(std::vector<std::pair<Vector, Vector>> entries) {
    if (entries.empty()) throw std::invalid_argument("table map needs at least one entry");
    FeatureMap m;
    m.kind_ = FeatureKind::table;
    m.input_dim_ = static_cast<int>(entries.front().first.size());
    m.feature_dim_ = static_cast<int>(entries.front().second.size());
    for (const auto& [a, phi] : entries) {
      if (a.size() != m.input_dim_ || phi.size() != m.feature_dim_)
        throw std::invalid_argument("inconsistent table entry dimensions");
    }
    m.table_ = std::move(entries);
    return m;
  }

  FeatureKind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int feature_dim() const { return feature_dim_; }
  std::uint64_t seed() const { return seed_; }
  double lengthscale() const { return lengthscale_; }

  Vector featurize(const Vector& action) const {
    if (action.size() != input_dim_) throw std::invalid_argument("action dimension mismatch");
    switch (kind_) {
      case FeatureKind::identity:
        return action;
      case FeatureKind::random_fourier: {
        const double scale = std::sqrt(2.0 / static_cast<double>(feature_dim_));
        Vector z = weights_ * (action / lengthscale_) + offsets_;
        return scale * z.array().cos().matrix();
      }
      case FeatureKind::random_layer: {
        Vector z = weights_ * action + offsets_;
        return z.array().tanh().matrix();
      }
      case FeatureKind::table: {
        for (const auto& [a, phi] : table_)
          if ((a - action).lpNorm<Eigen::Infinity>() == 0.0) return phi;
        throw std::invalid_argument("action not present in table map");
      }
    }
    throw std::logic_error("unreachable");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    switch (kind_) {
      case FeatureKind::identity: j["kind"] = "identity"; break;
      case FeatureKind::random_fourier: j["kind"] = "random_fourier"; break;
      case FeatureKind::random_layer: j["kind"] = "random_layer"; break;
      case FeatureKind::table: j["kind"] = "table"; break;
    }
    j["input_dim"] = input_dim_;
    j["feature_dim"] = feature_dim_;
    j["seed"] = seed_;
    j["lengthscale"] = lengthscale_;
    if (weights_.size() > 0) {
      std::vector<double> w(weights_.data(), weights_.data() + weights_.size());
      // row-major on the wire
      std::vector<double> row_major;
      row_major.reserve(w.size());
      for (int i = 0; i < weights_.rows(); ++i)
        for (int j2 = 0; j2 < weights_.cols(); ++j2) row_major.push_back(weights_(i, j2));
      j["weights"] = row_major;
      j["offsets"] = std::vector<double>(offsets_.data(), offsets_.data() + offsets_.size());
    }
    if (!table_.empty()) {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& [a, phi] : table_) {
        entries.push_back({{"action", std::vector<double>(a.data(), a.data() + a.size())},
                           {"features", std::vector<double>(phi.data(), phi.data() + phi.size())}});
      }
      j["entries"] = entries;
    }
    return j;
  }

  static FeatureMap from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    const int d_a = j.at("input_dim");
    const int d = j.at("feature_dim");
    if (kind == "identity") return identity(d_a);
    if (kind == "table") {
      std::vector<std::pair<Vector, Vector>> entries;
      for (const auto& e : j.at("entries")) {
        std::vector<double> a = e.at("action");
        std::vector<double> phi = e.at("features");
        entries.emplace_back(Eigen::Map<Vector>(a.data(), a.size()),
                             Eigen::Map<Vector>(phi.data(), phi.size()));
      }
      return table(std::move(entries));
    }
    FeatureMap m;
    m.input_dim_ = d_a;
    m.feature_dim_ = d;
    m.seed_ = j.at("seed");
    m.lengthscale_ = j.at("lengthscale");
    std::vector<double> w = j.at("weights");
    std::vector<double> b = j.at("offsets");
    if (static_cast<int>(w.size()) != d * d_a || static_cast<int>(b.size()) != d)
      throw std::invalid_argument("parameter array size mismatch");
    m.weights_.resize(d, d_a);
    for (int i = 0; i < d; ++i)
      for (int j2 = 0; j2 < d_a; ++j2) m.weights_(i, j2) = w[static_cast<std::size_t>(i) * d_a + j2];
    m.offsets_ = Eigen::Map<Vector>(b.data(), d);
    if (kind == "random_fourier")
      m.kind_ = FeatureKind::random_fourier;
    else if (kind == "random_layer")
      m.kind_ = FeatureKind::random_layer;
    else
      throw std::invalid_argument("unknown feature map kind: " + kind);
    return m;
  }

 private:
  FeatureMap() = default;

  FeatureKind kind_ = FeatureKind::identity;
  int input_dim_ = 0;
  int feature_dim_ = 0;
  double lengthscale_ = 1.0;
  std::uint64_t seed_ = 0;
  Matrix weights_;
  Vector offsets_;
  std::vector<std::pair<Vector, Vector>> table_;
};

struct FiniteActionSet {
  std::vector<Vector> actions;
};

struct BoxActionSet {
  Vector lower;
  Vector upper;
};

class ActionSet {
 public:
  ActionSet(FiniteActionSet finite) : value_(std::move(finite)) {
    if (std::get<FiniteActionSet>(value_).actions.empty())
      throw std::invalid_argument("finite action set must be non-empty");
  }
  ActionSet(BoxActionSet box) : value_(std::move(box)) {
    const auto& b = std::get<BoxActionSet>(value_);
    if (b.lower.size() != b.upper.size() || b.lower.size() == 0 ||
        (b.lower.array() > b.upper.array()).any())
      throw std::invalid_argument("box requires lower <= upper coordinatewise");
  }

  bool is_finite() const { return std::holds_alternative<FiniteActionSet>(value_); }
  const FiniteActionSet& finite() const { return std::get<FiniteActionSet>(value_); }
  const BoxActionSet& box() const { return std::get<BoxActionSet>(value_); }

 private:
  std::variant<FiniteActionSet, BoxActionSet> value_;
};

inline FeatureMap build_rff(std::uint64_t seed, int input_dim, int feature_dim, double lengthscale) {
  return FeatureMap::random_fourier(seed, input_dim, feature_dim, lengthscale);
}

namespace detail {

// Halton sequence point in [0,1)^dim, 1-based index.
inline Vector halton(int index, int dim) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  Vector x(dim);
  for (int j = 0; j < dim; ++j) {
    const int base = primes[j % (sizeof(primes) / sizeof(primes[0]))];
    double f = 1.0, value = 0.0;
    int i = index;
    while (i > 0) {
      f /= base;
      value += f * (i % base);
      i /= base;
    }
    x(j) = value;
  }
  return x;
}

}  // namespace detail

// Max feature norm over the action set. Exact for finite sets; for boxes a
// max over quasi-random sample points, i.e. a lower estimate of L.
inline double feature_norm_bound(const FeatureMap& map, const ActionSet& set, int samples = 1024) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  double best = 0.0;
  if (set.is_finite()) {
    for (const auto& a : set.finite().actions) best = std::max(best, map.featurize(a).norm());
    return best;
  }
  const auto& box = set.box();
  const int dim = static_cast<int>(box.lower.size());
  for (int i = 1; i <= samples; ++i) {
    const Vector u = detail::halton(i, dim);
    const Vector a = box.lower + (box.upper - box.lower).cwiseProduct(u);
    best = std::max(best, map.featurize(a).norm());
  }
  return best;
}

}  // namespace mmucb
