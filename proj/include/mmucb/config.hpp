#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mmucb {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline nlohmann::json toml_scalar(const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) throw std::invalid_argument("empty value in config");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw std::invalid_argument("unterminated string: " + v);
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  // integer or float
  try {
    std::size_t pos = 0;
    if (v.find_first_of(".eE") == std::string::npos || v.find("0x") == 0) {
      const long long i = std::stoll(v, &pos);
      if (pos == v.size()) return i;
    }
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("cannot parse config value: " + v);
}

inline nlohmann::json toml_value(const std::string& raw) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw std::invalid_argument("unterminated array: " + v);
    nlohmann::json arr = nlohmann::json::array();
    std::string body = v.substr(1, v.size() - 2);
    std::string item;
    bool in_string = false;
    for (char ch : body) {
      if (ch == '"') in_string = !in_string;
      if (ch == ',' && !in_string) {
        if (!trim(item).empty()) arr.push_back(toml_scalar(item));
        item.clear();
      } else {
        item += ch;
      }
    }
    if (!trim(item).empty()) arr.push_back(toml_scalar(item));
    return arr;
  }
  return toml_scalar(v);
}

// Minimal flat-TOML reader: [section] headers, key = value lines, scalar and
// one-level array values, '#' comments. Produces the same shape as the JSON
// form of the config.
inline nlohmann::json parse_toml_subset(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* section = &root;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments outside strings
    std::string stripped;
    bool in_string = false;
    for (char ch : line) {
      if (ch == '"') in_string = !in_string;
      if (ch == '#' && !in_string) break;
      stripped += ch;
    }
    const std::string t = trim(stripped);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("bad section header at line " + std::to_string(lineno));
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty() || name.find('.') != std::string::npos)
        throw std::invalid_argument("unsupported section name at line " + std::to_string(lineno));
      section = &root[name];
      if (section->is_null()) *section = nlohmann::json::object();
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("empty key at line " + std::to_string(lineno));
    (*section)[key] = toml_value(t.substr(eq + 1));
  }
  return root;
}

inline nlohmann::json parse_config_text(const std::string& text) {
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch == '{') return nlohmann::json::parse(text);
    break;
  }
  return parse_toml_subset(text);
}

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key))
      throw std::invalid_argument("unknown config key '" + key + "' in " + where);
  }
}

}  // namespace detail

// Experiment description shared by all CLI verbs. Parsed from TOML (minimal
// subset) or JSON; every downstream positivity constraint is re-validated
// here and unknown keys are rejected.
struct ExperimentConfig {
  std::string experiment = "regret";  // regret | coverage | widths | radii-compare

  // [features]
  std::string feature_kind = "identity";  // identity | random_fourier | random_layer
  int input_dim = 2;
  int feature_dim = 2;
  double lengthscale = 1.0;

  // [mixture]
  std::string mixture_family = "standard";  // standard | linear | adaptive
  double c = 1.0;
  double sigma = 0.1;
  double beta = -1.0;    // adaptive GP variance; <0 means the 4 sigma^2 default
  double sigma0 = 1.0;   // linear family prior scale: Sigma0 = sigma0^2 I
  std::vector<double> theta0;  // linear family prior mean; empty = zero

  // [run]
  std::vector<std::string> policies = {"cmm", "amm", "oful"};
  int horizon = 100;
  int runs = 10;
  int arms = 10;
  int jobs = 0;  // 0 = logical cores
  std::uint64_t seed = 1;
  double delta = 0.01;
  double bound_b = 10.0;
  double alpha = -1.0;  // <0 means the sigma^2 default
  double smooth_bandwidth = 0.0;
  std::string out = "out";

  double effective_alpha() const { return alpha > 0.0 ? alpha : sigma * sigma; }
  double effective_beta() const { return beta > 0.0 ? beta : 4.0 * sigma * sigma; }

  void validate() const {
    const std::set<std::string> kinds = {"regret", "coverage", "widths", "radii-compare"};
    if (!kinds.count(experiment)) throw std::invalid_argument("unknown experiment: " + experiment);
    const std::set<std::string> fkinds = {"identity", "random_fourier", "random_layer"};
    if (!fkinds.count(feature_kind))
      throw std::invalid_argument("unknown feature kind: " + feature_kind);
    const std::set<std::string> families = {"standard", "linear", "adaptive"};
    if (!families.count(mixture_family))
      throw std::invalid_argument("unknown mixture family: " + mixture_family);
    if (input_dim <= 0 || feature_dim <= 0) throw std::invalid_argument("dimensions must be positive");
    if (feature_kind == "random_fourier" && feature_dim % 2 != 0)
      throw std::invalid_argument("random_fourier feature_dim must be even");
    if (!(lengthscale > 0.0)) throw std::invalid_argument("lengthscale must be positive");
    if (!(c > 0.0) || !(sigma > 0.0) || !(sigma0 > 0.0))
      throw std::invalid_argument("c, sigma, sigma0 must be positive");
    if (!theta0.empty() && static_cast<int>(theta0.size()) != feature_dim)
      throw std::invalid_argument("theta0 length must equal feature_dim");
    if (policies.empty()) throw std::invalid_argument("need at least one policy");
    for (const auto& p : policies)
      if (p != "cmm" && p != "amm" && p != "oful")
        throw std::invalid_argument("unknown policy: " + p);
    if (horizon < 1 || runs < 1 || arms < 1) throw std::invalid_argument("horizon, runs, arms must be >= 1");
    if (jobs < 0) throw std::invalid_argument("jobs must be >= 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in (0, 1]");
    if (!(bound_b > 0.0)) throw std::invalid_argument("bound_b must be positive");
    if (!(smooth_bandwidth >= 0.0)) throw std::invalid_argument("smooth_bandwidth must be >= 0");
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    detail::reject_unknown_keys(j, {"experiment", "features", "mixture", "run"}, "top level");
    if (j.contains("experiment")) c.experiment = j.at("experiment");
    if (j.contains("features")) {
      const auto& f = j.at("features");
      detail::reject_unknown_keys(f, {"kind", "input_dim", "feature_dim", "lengthscale"},
                                  "[features]");
      if (f.contains("kind")) c.feature_kind = f.at("kind");
      if (f.contains("input_dim")) c.input_dim = f.at("input_dim");
      if (f.contains("feature_dim")) c.feature_dim = f.at("feature_dim");
      if (f.contains("lengthscale")) c.lengthscale = f.at("lengthscale");
    }
    if (j.contains("mixture")) {
      const auto& m = j.at("mixture");
      detail::reject_unknown_keys(m, {"family", "c", "sigma", "beta", "sigma0", "theta0"},
                                  "[mixture]");
      if (m.contains("family")) c.mixture_family = m.at("family");
      if (m.contains("c")) c.c = m.at("c");
      if (m.contains("sigma")) c.sigma = m.at("sigma");
      if (m.contains("beta")) c.beta = m.at("beta");
      if (m.contains("sigma0")) c.sigma0 = m.at("sigma0");
      if (m.contains("theta0")) c.theta0 = m.at("theta0").get<std::vector<double>>();
    }
    if (j.contains("run")) {
      const auto& r = j.at("run");
      detail::reject_unknown_keys(
          r,
          {"policies", "horizon", "runs", "arms", "jobs", "seed", "delta", "bound_b", "alpha",
           "smooth_bandwidth", "out"},
          "[run]");
      if (r.contains("policies")) c.policies = r.at("policies").get<std::vector<std::string>>();
      if (r.contains("horizon")) c.horizon = r.at("horizon");
      if (r.contains("runs")) c.runs = r.at("runs");
      if (r.contains("arms")) c.arms = r.at("arms");
      if (r.contains("jobs")) c.jobs = r.at("jobs");
      if (r.contains("seed")) c.seed = r.at("seed");
      if (r.contains("delta")) c.delta = r.at("delta");
      if (r.contains("bound_b")) c.bound_b = r.at("bound_b");
      if (r.contains("alpha")) c.alpha = r.at("alpha");
      if (r.contains("smooth_bandwidth")) c.smooth_bandwidth = r.at("smooth_bandwidth");
      if (r.contains("out")) c.out = r.at("out");
    }
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["features"] = {{"kind", feature_kind},
                     {"input_dim", input_dim},
                     {"feature_dim", feature_dim},
                     {"lengthscale", lengthscale}};
    j["mixture"] = {{"family", mixture_family}, {"c", c},       {"sigma", sigma},
                    {"beta", beta},             {"sigma0", sigma0}};
    if (!theta0.empty()) j["mixture"]["theta0"] = theta0;
    j["run"] = {{"policies", policies},
                {"horizon", horizon},
                {"runs", runs},
                {"arms", arms},
                {"jobs", jobs},
                {"seed", seed},
                {"delta", delta},
                {"bound_b", bound_b},
                {"alpha", alpha},
                {"smooth_bandwidth", smooth_bandwidth},
                {"out", out}};
    return j;
  }

  static ExperimentConfig parse(const std::string& text) {
    return from_json(detail::parse_config_text(text));
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str());
  }
};

}  // namespace mmucb
