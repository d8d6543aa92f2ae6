#pragma once

// Plain-text run configuration (`key = value`, `#` comments) and its
// translation into model and run parameters.
//
// Rates carry their unit in the key: `_over_Gamma` for the adiabatic models,
// `_over_gamma` for the cavity model. Angles and efficiencies are bare.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qfb/sweep.hpp"

namespace qfb {

inline constexpr std::string_view kCodeVersion = "1.0.0";

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}
}  // namespace detail

/// Ordered key/value pairs; later assignments replace earlier ones.
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    entries_.emplace_back(key, value);
  }
  bool has(const std::string& key) const { return find(key) != nullptr; }
  std::optional<std::string> get(const std::string& key) const {
    const auto* v = find(key);
    return v ? std::optional<std::string>(*v) : std::nullopt;
  }
  std::string get_or(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }
  void erase(const std::string& key) {
    std::erase_if(entries_, [&](const auto& kv) { return kv.first == key; });
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  double number(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? parse_number(key, *v) : fallback;
  }
  static double parse_number(const std::string& key, const std::string& text) {
    std::string t = detail::trim(text);
    // symbolic multiples of pi, e.g. "pi", "-pi/2", "2pi"
    double sign = 1.0;
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
      if (t[0] == '-') sign = -1.0;
      t = t.substr(1);
    }
    const auto pi_pos = t.find("pi");
    if (pi_pos != std::string::npos) {
      double factor = 1.0, divisor = 1.0;
      const std::string pre = t.substr(0, pi_pos), post = t.substr(pi_pos + 2);
      try {
        if (!pre.empty()) factor = std::stod(pre.back() == '*' ? pre.substr(0, pre.size() - 1) : pre);
        if (!post.empty()) {
          if (post[0] != '/') throw ConfigError("");
          divisor = std::stod(post.substr(1));
        }
      } catch (const std::exception&) {
        throw ConfigError("cannot parse number for '" + key + "': " + text);
      }
      return sign * factor * std::numbers::pi / divisor;
    }
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number for '" + key + "': " + text);
    }
    if (used != t.size() || !std::isfinite(x)) throw ConfigError("cannot parse number for '" + key + "': " + text);
    return sign * x;
  }

 private:
  const std::string* find(const std::string& key) const {
    for (const auto& kv : entries_)
      if (kv.first == key) return &kv.second;
    return nullptr;
  }
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Reads `key = value` lines; `#` starts a comment. With `header_only`, only
/// lines of the form `# key = value` are read (CSV provenance headers).
inline RunConfig parse_config_text(const std::string& text, bool header_only = false) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (header_only) {
      if (line.rfind("#", 0) != 0) break;
      line = line.substr(1);
    } else if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (header_only) continue;
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    cfg.set(key, detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::string& path) { return parse_config_text(read_file(path)); }

// ---------------------------------------------------------------------------
// Interpretation

inline ModelKind parse_model_kind(const std::string& s) {
  static const std::map<std::string, ModelKind> names{{"dicke", ModelKind::Dicke},
                                                      {"adiabatic_se", ModelKind::AdiabaticSE},
                                                      {"homodyne_fb", ModelKind::HomodyneFB},
                                                      {"jump_fb", ModelKind::JumpFB},
                                                      {"jump_fb_ineff", ModelKind::JumpFBIneff},
                                                      {"full_nonadiabatic", ModelKind::FullNonadiabatic}};
  const auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown model: " + s);
  return it->second;
}

/// "Gamma" for the adiabatic models, "gamma" for the cavity model.
inline std::string rate_unit(ModelKind k) { return k == ModelKind::FullNonadiabatic ? "gamma" : "Gamma"; }

inline std::vector<std::string> rate_parameters(ModelKind k) {
  std::vector<std::string> p{"omega", "gamma", "gamma1", "gamma2"};
  if (k == ModelKind::HomodyneFB) p.push_back("lambda");
  if (k == ModelKind::FullNonadiabatic) {
    p.push_back("g");
    p.push_back("kappa");
  }
  return p;
}

/// Keys that are valid for the given model (besides `model` itself).
inline std::vector<std::string> allowed_keys(ModelKind k) {
  std::vector<std::string> keys{"model", "generator", "target_atom", "custom_generator", "method", "from_state",
                                "initial_state", "axis1", "axis2", "t_final", "sample_dt", "ntraj", "seed",
                                "eta", "inner1", "inner2", "maximize", "figure", "unit", "command", "code_version", "rng"};
  if (k != ModelKind::HomodyneFB) keys.push_back("lambda_tilde");
  if (k == ModelKind::FullNonadiabatic) keys.push_back("fock_cutoff");
  for (const auto& p : rate_parameters(k)) keys.push_back(p + "_over_" + rate_unit(k));
  return keys;
}

inline void check_keys(const RunConfig& cfg) {
  const ModelKind kind = parse_model_kind(cfg.get_or("model", ""));
  const auto allowed = allowed_keys(kind);
  for (const auto& [key, value] : cfg.entries())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown or inapplicable key for model " + std::string(to_string(kind)) + ": " + key);
  if (const auto u = cfg.get("unit"); u && *u != rate_unit(kind))
    throw ConfigError("unit must be " + rate_unit(kind) + " for this model");
}

/// Config key of a sweepable parameter (see set_parameter).
inline std::string parameter_key(ModelKind k, const std::string& name) {
  if (name == "lambda") return k == ModelKind::HomodyneFB ? "lambda_over_Gamma" : "lambda_tilde";
  if (name == "eta") return "eta";
  return name + "_over_" + rate_unit(k);
}

/// Inverse of parameter_key for axis specs, which may name either.
inline std::string parameter_name(ModelKind k, const std::string& key_or_name) {
  for (const std::string n : {"omega", "lambda", "gamma", "gamma1", "gamma2", "eta", "kappa", "g"})
    if (key_or_name == n || key_or_name == parameter_key(k, n)) return n;
  throw ConfigError("cannot sweep over " + key_or_name);
}

/// States named gg, ge, eg, ee (product basis) or s1..s4 (angular basis).
inline CVector named_atom_state(const std::string& name) {
  if (name == "gg") return atom_state(basis::gg);
  if (name == "ge") return atom_state(basis::ge);
  if (name == "eg") return atom_state(basis::eg);
  if (name == "ee") return atom_state(basis::ee);
  if (name.size() == 2 && name[0] == 's' && name[1] >= '1' && name[1] <= '4') return angular_state(name[1] - '0');
  throw ConfigError("unknown state name: " + name + " (use gg, ge, eg, ee, s1..s4)");
}

/// Pure initial state on the model's space; the cavity starts in vacuum.
inline CMatrix named_state(const std::string& name, const ModelSpec& spec) {
  const CVector atoms = named_atom_state(name);
  if (!spec.has_cavity()) return CMatrix::projector(atoms);
  return CMatrix::projector(composite_state(atoms, 0, *spec.fock_cutoff));
}

inline ModelSpec model_from_config(const RunConfig& cfg) {
  check_keys(cfg);
  ModelSpec s;
  s.kind = parse_model_kind(*cfg.get("model"));
  const std::string unit = rate_unit(s.kind);
  auto rate = [&](const std::string& name, double fallback) { return cfg.number(name + "_over_" + unit, fallback); };
  s.big_gamma = 1.0;
  s.omega = rate("omega", 0.0);
  const double gamma_default = s.kind == ModelKind::FullNonadiabatic ? 1.0 : 0.0;
  const double gamma_both = rate("gamma", gamma_default);
  s.gamma1 = rate("gamma1", gamma_both);
  s.gamma2 = rate("gamma2", gamma_both);
  s.eta = cfg.number("eta", 1.0);
  if (s.kind == ModelKind::FullNonadiabatic) {
    s.g = rate("g", 0.0);
    s.kappa = rate("kappa", 0.0);
    const double n = cfg.number("fock_cutoff", 8.0);
    if (n < 2 || n != std::floor(n)) throw ConfigError("fock_cutoff must be an integer >= 2");
    s.fock_cutoff = static_cast<std::size_t>(n);
  }
  switch (s.kind) {
    case ModelKind::Dicke:
    case ModelKind::AdiabaticSE: s.feedback.measurement = Measurement::None; break;
    case ModelKind::HomodyneFB: s.feedback.measurement = Measurement::Homodyne; break;
    default: s.feedback.measurement = Measurement::Photodetection; break;
  }
  s.feedback.strength = s.kind == ModelKind::HomodyneFB ? rate("lambda", 0.0) : cfg.number("lambda_tilde", 0.0);
  const std::string gen = cfg.get_or("generator", "sigma_x1");
  if (gen == "jx") {
    s.feedback.generator = GeneratorKind::CollectiveJx;
  } else if (gen == "sigma_x1" || gen == "sigma_x2") {
    s.feedback.generator = GeneratorKind::LocalSigmaX;
    s.feedback.target_atom = gen == "sigma_x1" ? 1 : 2;
  } else if (gen == "custom") {
    s.feedback.generator = GeneratorKind::Custom;
    // 16 entries row-major; each `re` or `re:im`
    std::istringstream in(cfg.get_or("custom_generator", ""));
    CMatrix m(4, 4);
    std::string tok;
    std::size_t count = 0;
    while (in >> tok) {
      if (count >= 16) throw ConfigError("custom_generator: more than 16 entries");
      const auto colon = tok.find(':');
      const double re = RunConfig::parse_number("custom_generator", tok.substr(0, colon));
      const double im = colon == std::string::npos ? 0.0 : RunConfig::parse_number("custom_generator", tok.substr(colon + 1));
      m(count / 4, count % 4) = cplx(re, im);
      ++count;
    }
    if (count != 16) throw ConfigError("custom_generator: expected 16 entries");
    s.feedback.custom = m;
  } else {
    throw ConfigError("unknown generator: " + gen + " (use jx, sigma_x1, sigma_x2, custom)");
  }
  try {
    validate(s);
  } catch (const InvalidSpec& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline SweepMethod parse_method(const std::string& s) {
  if (s == "unique") return SweepMethod::Unique;
  if (s == "from") return SweepMethod::From;
  if (s == "symmetric_subspace") return SweepMethod::SymmetricSubspace;
  throw ConfigError("unknown method: " + s + " (use unique, from, symmetric_subspace)");
}

inline SolveOptions solve_options_from_config(const RunConfig& cfg, const ModelSpec& spec) {
  SolveOptions o;
  o.method = parse_method(cfg.get_or("method", "unique"));
  if (const auto st = cfg.get("from_state")) o.rho0 = named_state(*st, spec);
  if (o.method == SweepMethod::From && !o.rho0) throw ConfigError("method = from needs from_state");
  return o;
}

/// "name:min:max:count"
inline Axis parse_axis(const std::string& text, ModelKind kind) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ':')) parts.push_back(detail::trim(part));
  if (parts.size() != 4) throw ConfigError("axis must be name:min:max:count, got " + text);
  const std::string name = parameter_name(kind, parts[0]);
  const double lo = RunConfig::parse_number("axis", parts[1]), hi = RunConfig::parse_number("axis", parts[2]);
  const double n = RunConfig::parse_number("axis", parts[3]);
  if (n < 1 || n != std::floor(n)) throw ConfigError("axis count must be a positive integer");
  return make_axis(name, parameter_key(kind, name), lo, hi, static_cast<std::size_t>(n));
}

inline std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(detail::trim(text), &used, 10);
  } catch (const std::exception&) {
    throw ConfigError("seed must be an unsigned 64-bit integer");
  }
  if (used != detail::trim(text).size() || detail::trim(text).starts_with("-"))
    throw ConfigError("seed must be an unsigned 64-bit integer");
  return v;
}

inline std::size_t parse_count(const RunConfig& cfg, const std::string& key, std::size_t fallback) {
  const double v = cfg.number(key, static_cast<double>(fallback));
  if (v < 1 || v != std::floor(v)) throw ConfigError(key + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace qfb
