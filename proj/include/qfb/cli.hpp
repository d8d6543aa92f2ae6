#pragma once

// Subcommands behind the `qfb` executable. Each command turns a RunConfig
// into one or more CSV documents; writing them to disk is left to the caller.

#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qfb/config.hpp"
#include "qfb/propagate.hpp"
#include "qfb/trajectory.hpp"

namespace qfb {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int other = 1;
inline constexpr int config = 2;
inline constexpr int degenerate = 3;
inline constexpr int cutoff = 4;
}  // namespace exit_code

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct OutputFile {
  std::string suffix;  // appended to the output stem, "" for the main file
  std::string content;
};

inline std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string render_csv(const RunConfig& header, const CsvTable& table) {
  std::string out;
  for (const auto& [k, v] : header.entries()) out += "# " + k + " = " + v + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += "\n";
  }
  return out;
}

/// Every key the command depends on, with defaults filled in, so that the
/// header of an output file is a complete config for reproducing it.
inline RunConfig canonical_config(const std::string& command, const RunConfig& cfg) {
  const ModelSpec s = model_from_config(cfg);
  const std::string unit = rate_unit(s.kind);
  RunConfig c;
  c.set("command", command);
  if (const auto f = cfg.get("figure")) c.set("figure", *f);
  c.set("model", std::string(to_string(s.kind)));
  c.set("unit", unit);
  auto rate = [&](const std::string& name, double v) { c.set(name + "_over_" + unit, detail::format_double(v)); };
  rate("omega", s.omega);
  rate("gamma1", s.gamma1);
  rate("gamma2", s.gamma2);
  if (s.kind == ModelKind::FullNonadiabatic) {
    rate("g", s.g);
    rate("kappa", s.kappa);
    c.set("fock_cutoff", std::to_string(*s.fock_cutoff));
  }
  if (s.kind == ModelKind::JumpFBIneff || s.kind == ModelKind::FullNonadiabatic) c.set("eta", detail::format_double(s.eta));
  if (s.feedback.measurement != Measurement::None) {
    c.set("generator", cfg.get_or("generator", "sigma_x1"));
    if (s.feedback.generator == GeneratorKind::Custom) c.set("custom_generator", cfg.get_or("custom_generator", ""));
    if (s.kind == ModelKind::HomodyneFB) rate("lambda", s.feedback.strength);
    else c.set("lambda_tilde", detail::format_double(s.feedback.strength));
  }
  auto copy = [&](const char* key, const std::string& fallback) {
    const auto v = cfg.get(key);
    if (v) c.set(key, *v);
    else if (!fallback.empty()) c.set(key, fallback);
  };
  if (command == "steady" || command == "sweep") {
    copy("method", "unique");
    copy("from_state", "");
  }
  if (command == "sweep") {
    copy("axis1", "");
    copy("axis2", "");
    copy("inner1", "");
    copy("inner2", "");
    copy("maximize", "false");
  }
  if (command == "traj") {
    copy("initial_state", "gg");
    copy("t_final", "4");
    copy("sample_dt", "0.005");
    copy("ntraj", "1");
    copy("seed", "0");
  }
  c.set("code_version", std::string(kCodeVersion));
  c.set("rng", std::string(kRngName));
  return c;
}

namespace detail {
inline std::string csv_safe(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  return s;
}

inline std::vector<std::string> node_columns() {
  return {"concurrence", "rho11", "rho22", "rho33", "rho44", "photon_number", "status", "error"};
}

inline void append_node(std::vector<std::string>& row, const NodeResult& n) {
  row.push_back(n.ok ? fmt9(n.concurrence) : "nan");
  for (int k = 0; k < 4; ++k) row.push_back(n.ok ? fmt9(n.populations[k]) : "nan");
  row.push_back(n.ok ? fmt9(n.photon_number) : "nan");
  row.push_back(!n.ok ? "error" : n.fallback ? "fallback" : "ok");
  row.push_back(csv_safe(n.error));
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + " must be true or false");
}
}  // namespace detail

/// One row: parameters, concurrence, angular populations, purity.
inline std::vector<OutputFile> cmd_steady(const RunConfig& cfg) {
  const RunConfig header = canonical_config("steady", cfg);
  const ModelSpec s = model_from_config(header);
  const SolveOptions opts = solve_options_from_config(header, s);
  const LindbladForm form = lindblad_form(s);
  bool fallback = false;
  CMatrix rho = solve_state(form, opts, fallback);
  double photons = 0.0;
  if (form.fock_cutoff > 0) {
    for (std::size_t i = 0; i < form.dim; ++i) photons += static_cast<double>(i % form.fock_cutoff) * rho(i, i).real();
    rho = partial_trace_cavity(rho, form.fock_cutoff);
  }
  const StateDiagnostics d = diagnostics(rho);
  CsvTable t;
  std::vector<std::string> row;
  for (const auto& [k, v] : header.entries())
    if (k.find("_over_") != std::string::npos || k == "eta" || k == "lambda_tilde") {
      t.columns.push_back(k);
      row.push_back(fmt9(RunConfig::parse_number(k, v)));
    }
  for (const char* c : {"concurrence", "rho11", "rho22", "rho33", "rho44", "purity", "fidelity_bell4", "photon_number", "status"})
    t.columns.push_back(c);
  row.push_back(fmt9(d.concurrence));
  for (double p : d.populations) row.push_back(fmt9(p));
  row.push_back(fmt9(d.purity));
  row.push_back(fmt9(d.fidelity_bell4));
  row.push_back(fmt9(photons));
  row.push_back(fallback ? "fallback" : "ok");
  t.rows.push_back(std::move(row));
  return {{"", render_csv(header, t)}};
}

/// Grid sweep over axis1 (and axis2 if given). With inner1/inner2 every
/// node is a maximization over the inner axes; with maximize = true the
/// axes themselves are maximized over and one row is written.
inline std::vector<OutputFile> cmd_sweep(const RunConfig& cfg, unsigned jobs) {
  const RunConfig header = canonical_config("sweep", cfg);
  const ModelSpec s = model_from_config(header);
  const SolveOptions opts = solve_options_from_config(header, s);
  if (!header.has("axis1")) throw ConfigError("sweep needs axis1");
  const Axis a1 = parse_axis(*header.get("axis1"), s.kind);
  const bool has2 = header.has("axis2");
  const Axis a2 = has2 ? parse_axis(*header.get("axis2"), s.kind) : Axis{"", "", {0.0}};
  const bool maximize = detail::parse_bool("maximize", header.get_or("maximize", "false"));
  const bool inner = header.has("inner1") || header.has("inner2");
  CsvTable t;

  if (maximize || inner) {
    const Axis& m1 = maximize ? a1 : parse_axis(header.get_or("inner1", ""), s.kind);
    if (maximize && !has2) throw ConfigError("maximize needs axis1 and axis2");
    const Axis m2 = maximize ? a2 : parse_axis(header.get_or("inner2", ""), s.kind);
    MaximizeOptions mo;
    mo.grid1 = m1.values.size();
    mo.grid2 = m2.values.size();
    mo.solve = opts;
    auto run = [&](const ModelSpec& spec, unsigned j) {
      MaximizeOptions o = mo;
      o.jobs = j;
      return maximize_concurrence(spec, {m1.name, m2.name},
                                  {Bounds{m1.values.front(), m1.values.back()}, Bounds{m2.values.front(), m2.values.back()}}, o);
    };
    const std::vector<std::string> tail{"concurrence", "best_" + m1.unit, "best_" + m2.unit, "coarse_concurrence",
                                        "evaluations"};
    auto append = [&](std::vector<std::string>& row, const MaximizeResult& r) {
      // -1 means no node of the inner grid could be solved
      row.push_back(r.concurrence < 0.0 ? "nan" : fmt9(r.concurrence));
      row.push_back(fmt9(r.params[0]));
      row.push_back(fmt9(r.params[1]));
      row.push_back(r.coarse_concurrence < 0.0 ? "nan" : fmt9(r.coarse_concurrence));
      row.push_back(std::to_string(r.evaluations));
    };
    if (maximize) {
      t.columns = tail;
      t.rows.emplace_back();
      append(t.rows.back(), run(s, jobs));
    } else {
      t.columns = {a1.unit};
      if (has2) t.columns.push_back(a2.unit);
      t.columns.insert(t.columns.end(), tail.begin(), tail.end());
      const std::size_t n2 = a2.values.size();
      std::vector<MaximizeResult> res(a1.values.size() * n2);
      parallel_for(res.size(), jobs, [&](std::size_t k) {
        ModelSpec spec = s;
        set_parameter(spec, a1.name, a1.values[k / n2]);
        if (has2) set_parameter(spec, a2.name, a2.values[k % n2]);
        res[k] = run(spec, 1);
      });
      for (std::size_t k = 0; k < res.size(); ++k) {
        std::vector<std::string> row{fmt9(a1.values[k / n2])};
        if (has2) row.push_back(fmt9(a2.values[k % n2]));
        append(row, res[k]);
        t.rows.push_back(std::move(row));
      }
    }
    return {{"", render_csv(header, t)}};
  }

  SweepResult r;
  if (has2) {
    r = sweep2d(s, a1, a2, opts, jobs);
  } else {
    // single axis: sweep against a one-node second axis of the same parameter
    r = sweep2d(s, a1, Axis{a1.name, a1.unit, {a1.values.front()}}, opts, jobs);
    for (std::size_t i = 0; i < a1.values.size(); ++i) {
      ModelSpec spec = s;
      set_parameter(spec, a1.name, a1.values[i]);
      r.nodes[i] = solve_node(spec, opts);
    }
  }
  t.columns = {a1.unit};
  if (has2) t.columns.push_back(a2.unit);
  for (const auto& c : detail::node_columns()) t.columns.push_back(c);
  for (std::size_t i = 0; i < a1.values.size(); ++i)
    for (std::size_t j = 0; j < a2.values.size(); ++j) {
      std::vector<std::string> row{fmt9(a1.values[i])};
      if (has2) row.push_back(fmt9(a2.values[j]));
      detail::append_node(row, r.at(i, j));
      t.rows.push_back(std::move(row));
    }
  return {{"", render_csv(header, t)}};
}

/// Single trajectory for `seed`; with ntraj > 1 also `_ensemble`: the mean
/// over seeds seed..seed+ntraj-1 next to the master-equation solution.
inline std::vector<OutputFile> cmd_traj(const RunConfig& cfg, unsigned jobs) {
  const RunConfig header = canonical_config("traj", cfg);
  const ModelSpec s = model_from_config(header);
  const double t_final = header.number("t_final", 4.0), dt = header.number("sample_dt", 0.005);
  const std::size_t ntraj = parse_count(header, "ntraj", 1);
  const std::uint64_t seed = parse_seed(header.get_or("seed", "0"));
  const CMatrix rho0 = named_state(header.get_or("initial_state", "gg"), s);
  const TrajectorySimulator sim(s, dt);
  const std::size_t nf = sim.fock_cutoff();

  CsvTable t;
  t.columns = {"time", "concurrence", "mean_photon_number", "jump_channel"};
  auto row = [&](double time, const CVector& psi, std::string label) {
    return std::vector<std::string>{fmt9(time), fmt9(concurrence(atomic_state(psi, nf))), fmt9(photon_number(psi, nf)),
                                    std::move(label)};
  };
  sim.run(
      pure_state_of(rho0), sample_grid(t_final, dt), seed,
      [&](std::size_t, double time, const CVector& psi) { t.rows.push_back(row(time, psi, "")); },
      [&](const JumpEvent& e, const CVector& psi) { t.rows.push_back(row(e.time, psi, std::string(to_string(e.channel)))); });
  std::vector<OutputFile> out{{"", render_csv(header, t)}};

  if (ntraj > 1) {
    EnsembleOptions eo;
    eo.jobs = jobs;
    const auto ens = ensemble_average(s, rho0, t_final, dt, ntraj, seed, eo);
    const auto me = propagate_me(build_liouvillian(s), rho0, sample_grid(t_final, dt));
    CsvTable e;
    e.columns = {"time", "concurrence", "mean_photon_number", "concurrence_me", "mean_photon_number_me"};
    for (std::size_t k = 0; k < ens.size(); ++k) {
      const CMatrix& r = me[k];
      double n = 0.0;
      if (nf > 0)
        for (std::size_t i = 0; i < r.rows(); ++i) n += static_cast<double>(i % nf) * r(i, i).real();
      const CMatrix atoms = nf ? partial_trace_cavity(r, nf) : r;
      e.rows.push_back({fmt9(ens[k].time), fmt9(ens[k].concurrence), fmt9(ens[k].photon_number),
                        fmt9(concurrence(0.5 * (atoms + atoms.adjoint()))), fmt9(n)});
    }
    out.push_back({"_ensemble", render_csv(header, e)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figures: each is a config for one of the generic commands.

struct FigureRecipe {
  std::string command;
  std::vector<std::pair<std::string, std::string>> defaults;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> extra;  // suffix, overrides
};

inline const std::map<std::string, FigureRecipe>& figure_recipes() {
  static const std::map<std::string, FigureRecipe> r = [] {
    std::map<std::string, FigureRecipe> m;
    const std::string pm_pi = "-pi:pi:81";
    m["fig2"] = {"sweep",
                 {{"model", "dicke"}, {"method", "from"}, {"from_state", "gg"}, {"axis1", "omega:0:1.5:151"}},
                 {{"_ge", {{"from_state", "ge"}}}}};
    m["fig3a"] = {"sweep",
                  {{"model", "homodyne_fb"}, {"generator", "jx"}, {"method", "symmetric_subspace"},
                   {"axis1", "omega:-1:1:81"}, {"axis2", "lambda:-2:2:81"}},
                  {}};
    m["fig3c"] = {"sweep",
                  {{"model", "jump_fb"}, {"generator", "jx"}, {"method", "symmetric_subspace"},
                   {"axis1", "omega:-1:1:81"}, {"axis2", "lambda:" + pm_pi}},
                  {}};
    m["fig4a"] = {"sweep",
                  {{"model", "homodyne_fb"}, {"generator", "sigma_x1"}, {"method", "unique"}, {"from_state", "gg"},
                   {"axis1", "omega:-1:1:81"}, {"axis2", "lambda:-2:2:81"}},
                  {}};
    m["fig4c"] = {"sweep",
                  {{"model", "jump_fb"}, {"generator", "sigma_x1"}, {"method", "unique"}, {"from_state", "gg"},
                   {"axis1", "omega:-1:1:81"}, {"axis2", "lambda:0:2pi:81"}},
                  {}};
    auto fig5 = [&](const std::string& model, const std::string& gen, const std::string& lam) {
      return FigureRecipe{"sweep",
                          {{"model", model}, {"generator", gen}, {"gamma_over_Gamma", "0.01"}, {"method", "unique"},
                           {"axis1", "omega:-1:1:81"}, {"axis2", lam}},
                          {}};
    };
    m["fig5a"] = fig5("homodyne_fb", "jx", "lambda:-2:2:81");
    m["fig5b"] = fig5("homodyne_fb", "sigma_x1", "lambda:-2:2:81");
    m["fig5c"] = fig5("jump_fb", "jx", "lambda:" + pm_pi);
    m["fig5d"] = fig5("jump_fb", "sigma_x1", "lambda:" + pm_pi);
    m["fig6"] = {"sweep",
                 {{"model", "jump_fb_ineff"}, {"generator", "sigma_x1"}, {"axis1", "eta:0:1:21"},
                  {"axis2", "gamma:0:0.01:21"}, {"inner1", "omega:-1:1:41"}, {"inner2", "lambda:-pi:pi:41"}},
                 {}};
    m["fig7a"] = {"traj",
                  {{"model", "full_nonadiabatic"}, {"generator", "sigma_x1"}, {"kappa_over_gamma", "400"},
                   {"g_over_gamma", "200"}, {"omega_over_gamma", "40"}, {"lambda_tilde", "-18"}, {"eta", "1"},
                   {"fock_cutoff", "6"}, {"t_final", "4"}, {"sample_dt", "0.005"}, {"ntraj", "2000"}},
                  {}};
    m["fig7b"] = {"traj",
                  {{"model", "full_nonadiabatic"}, {"generator", "sigma_x1"}, {"kappa_over_gamma", "16"},
                   {"g_over_gamma", "40"}, {"omega_over_gamma", "20.8"}, {"lambda_tilde", "-10.0528"}, {"eta", "1"},
                   {"fock_cutoff", "10"}, {"t_final", "4"}, {"sample_dt", "0.005"}, {"ntraj", "2000"}},
                  {}};
    m["fig8"] = {"sweep",
                 {{"model", "full_nonadiabatic"}, {"generator", "sigma_x1"}, {"g_over_gamma", "40"},
                  {"kappa_over_gamma", "16"}, {"eta", "0.5"}, {"fock_cutoff", "8"}, {"method", "unique"},
                  {"axis1", "omega:0:60:21"}, {"axis2", "lambda:0:pi:21"}},
                 {}};
    return m;
  }();
  return r;
}

inline std::vector<OutputFile> run_command(const std::string& command, const RunConfig& cfg, unsigned jobs) {
  if (command == "steady") return cmd_steady(cfg);
  if (command == "sweep") return cmd_sweep(cfg, jobs);
  if (command == "traj") return cmd_traj(cfg, jobs);
  throw ConfigError("unknown command: " + command);
}

/// Figure defaults, overlaid by `overrides`.
inline std::vector<OutputFile> cmd_figure(const std::string& name, const RunConfig& overrides, unsigned jobs) {
  const auto& recipes = figure_recipes();
  const auto it = recipes.find(name);
  if (it == recipes.end()) throw ConfigError("unknown figure: " + name);
  RunConfig cfg;
  for (const auto& [k, v] : it->second.defaults) cfg.set(k, v);
  for (const auto& [k, v] : overrides.entries()) cfg.set(k, v);
  cfg.set("figure", name);
  std::vector<OutputFile> out = run_command(it->second.command, cfg, jobs);
  for (const auto& [suffix, extra] : it->second.extra) {
    RunConfig c = cfg;
    for (const auto& [k, v] : extra) c.set(k, v);
    for (const auto& [k, v] : overrides.entries()) c.set(k, v);
    for (auto& f : run_command(it->second.command, c, jobs)) out.push_back({suffix + f.suffix, f.content});
  }
  return out;
}

/// `stem.csv` -> `stem<suffix>.csv`
inline std::string output_path(const std::string& out, const std::string& suffix) {
  if (suffix.empty()) return out;
  const auto dot = out.rfind('.');
  const auto slash = out.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + suffix;
  return out.substr(0, dot) + suffix + out.substr(dot);
}

inline void write_outputs(const std::string& out, const std::vector<OutputFile>& files) {
  for (const auto& f : files) {
    const std::string path = output_path(out, f.suffix);
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ConfigError("cannot write " + path);
    o << f.content;
  }
}

/// Maps an exception to the documented exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidSpec*>(&e)) return exit_code::config;
  if (dynamic_cast<const DegenerateSteadyState*>(&e)) return exit_code::degenerate;
  if (dynamic_cast<const CutoffSaturated*>(&e)) return exit_code::cutoff;
  return exit_code::other;
}

}  // namespace qfb
