#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

#include "qfb/cli.hpp"
#include "support.hpp"

using namespace qfb;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

template <class... A>
std::string format(const char* f, A... a) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::vector<double> col(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::runtime_error("missing column " + name);
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[k].empty() ? std::nan("") : std::strtod(r[k].c_str(), nullptr));
    return out;
  }
};

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (t.columns.empty()) t.columns = cells;
    else t.rows.push_back(cells);
  }
  return t;
}

RunConfig overrides(std::initializer_list<std::pair<const char*, const char*>> kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best] || std::isnan(v[best])) best = i;
  return best;
}

double figure_max(const std::string& name, const RunConfig& over) {
  const Table t = parse_csv(cmd_figure(name, over, 1)[0].content);
  const auto c = t.col("concurrence");
  return c[argmax(c)];
}

ModelSpec feedback_model(ModelKind kind, Measurement m, GeneratorKind gen) {
  ModelSpec s;
  s.kind = kind;
  s.feedback.measurement = m;
  s.feedback.generator = gen;
  return s;
}

SolveOptions from_ground() { return SolveOptions{SweepMethod::Unique, CMatrix::projector(atom_state(basis::gg))}; }

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string time = format("%.1f s", s);
  if (limit_s > 0) {
    time += format(", limit %.0f s", limit_s);
    if (s > limit_s) {
      v.pass = false;
      v.detail += "; over the time limit";
    }
  }
  std::printf("%s %2d %s: %s [%s]\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), time.c_str());
  std::fflush(stdout);
  failures += !v.pass;
}

double fig8_max_n8 = std::nan("");

}  // namespace

int main() {
  std::printf("acceptance: 11 criteria\n");

  criterion(1, "Dicke baseline peak", 10.0, [] {
    const Table t = parse_csv(cmd_figure("fig2", {}, 1)[0].content);
    const auto om = t.col("omega_over_Gamma"), c = t.col("concurrence");
    const std::size_t k = argmax(c);
    const bool pass = std::abs(om[k] - 0.38) <= 0.02 && c[k] >= 0.10 && c[k] <= 0.12;
    return Verdict{pass, format("peak c = %.4f at Omega/Gamma = %.2f (want 0.10..0.12 at 0.38 +- 0.02)", c[k], om[k])};
  });

  criterion(2, "homodyne Jx feedback maximum", 60.0, [] {
    const ModelSpec s = feedback_model(ModelKind::HomodyneFB, Measurement::Homodyne, GeneratorKind::CollectiveJx);
    MaximizeOptions o;
    o.solve = SolveOptions{SweepMethod::SymmetricSubspace, std::nullopt};
    const auto r = maximize_concurrence(s, {"omega", "lambda"}, {Bounds{-1, 1}, Bounds{-2, 2}}, o);
    const bool pass = std::abs(r.concurrence - 0.31) <= 0.02 && std::abs(std::abs(r.params[0]) - 0.4) <= 0.05 &&
                      std::abs(r.params[1] + 0.8) <= 0.05;
    return Verdict{pass, format("c = %.4f at Omega/Gamma = %.3f, lambda/Gamma = %.3f (want 0.31 +- 0.02 at +-0.4 +- 0.05, "
                                "-0.8 +- 0.05)",
                                r.concurrence, r.params[0], r.params[1])};
  });

  criterion(3, "jump Jx feedback maximum", 60.0, [] {
    const ModelSpec s = feedback_model(ModelKind::JumpFB, Measurement::Photodetection, GeneratorKind::CollectiveJx);
    MaximizeOptions o;
    o.solve = SolveOptions{SweepMethod::SymmetricSubspace, std::nullopt};
    const auto r = maximize_concurrence(s, {"omega", "lambda"}, {Bounds{-1, 1}, Bounds{-kPi, kPi}}, o);
    const bool pass = std::abs(r.concurrence - 0.49) <= 0.02 && std::abs(std::abs(r.params[1]) - kPi / 2) <= 0.05;
    return Verdict{pass, format("c = %.4f at Omega/Gamma = %.4f, lambda~ = %.4f (want 0.49 +- 0.02 with |lambda~| = pi/2 "
                                "+- 0.05)",
                                r.concurrence, r.params[0], r.params[1])};
  });

  criterion(4, "local jump feedback gives |4>", 60.0, [] {
    const ModelSpec s = feedback_model(ModelKind::JumpFB, Measurement::Photodetection, GeneratorKind::LocalSigmaX);
    const Axis a1 = make_axis("omega", "Gamma", -1.0, 1.0, 81), a2 = make_axis("lambda", "rad", 0.0, 2 * kPi, 81);
    const SweepResult res = sweep2d(s, a1, a2, from_ground());
    const CMatrix target = CMatrix::projector(bell4());
    std::size_t checked = 0, skipped = 0, bad = 0;
    double worst_c = 0.0, worst_d = 0.0;
    for (std::size_t i = 0; i < a1.values.size(); ++i)
      for (std::size_t j = 0; j < a2.values.size(); ++j) {
        const double lam = a2.values[j];
        // U = exp(-i lambda~ sigma_x1) is +-I at integer multiples of pi
        const double m = std::round(lam / kPi);
        if (std::abs(a1.values[i]) < 1e-12 || std::abs(lam - m * kPi) < 1e-9) {
          ++skipped;
          continue;
        }
        const NodeResult& n = res.at(i, j);
        ++checked;
        if (!n.ok) {
          ++bad;
          continue;
        }
        worst_c = std::max(worst_c, std::abs(1.0 - n.concurrence));
        worst_d = std::max(worst_d, trace_distance(n.rho, target));
      }
    const bool pass = bad == 0 && worst_c <= 1e-6 && worst_d <= 1e-6;
    return Verdict{pass, format("%zu nodes, max |1 - c| = %.2e, max trace distance to |4><4| = %.2e, %zu failed "
                                "(%zu nodes skipped: Omega = 0 or lambda~ in {0, pi, 2pi}, where U = +-I)",
                                checked, worst_c, worst_d, bad, skipped)};
  });

  criterion(5, "homodyne local feedback maximum", 0.0, [] {
    const ModelSpec s = feedback_model(ModelKind::HomodyneFB, Measurement::Homodyne, GeneratorKind::LocalSigmaX);
    MaximizeOptions o;
    o.solve = from_ground();
    const auto r = maximize_concurrence(s, {"omega", "lambda"}, {Bounds{-1, 1}, Bounds{-2, 2}}, o);
    const bool pass = std::abs(r.concurrence - 0.81) <= 0.03;
    return Verdict{pass, format("c = %.4f (want 0.81 +- 0.03); argmax (lambda/Gamma, Omega/Gamma) = (%.3f, %.3f) vs "
                                "paper (+-0.01, +-0.07); coarse grid max %.4f",
                                r.concurrence, r.params[1], r.params[0], r.coarse_concurrence)};
  });

  criterion(6, "spontaneous emission plateau", 120.0, [] {
    const Table t = parse_csv(cmd_figure("fig5d", {}, 1)[0].content);
    const auto c = t.col("concurrence"), p44 = t.col("rho44");
    const double cmax = c[argmax(c)], floor44 = 1.0 - 5.0 * 0.01;
    std::size_t plateau = 0, below = 0;
    double min44 = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k)
      if (c[k] >= 0.93) {
        ++plateau;
        min44 = std::min(min44, p44[k]);
        below += p44[k] < floor44;
      }
    const bool pass = cmax >= 0.93 && plateau > 0 && below == 0;
    return Verdict{pass, format("max c = %.4f (want >= 0.93); plateau (c >= 0.93) has %zu of %zu nodes, min rho44 = "
                                "%.4f (want >= %.2f)",
                                cmax, plateau, c.size(), min44, floor44)};
  });

  criterion(7, "inefficient detection spot checks", 0.0, [] {
    auto best = [](double gamma, double eta) {
      ModelSpec s = feedback_model(ModelKind::JumpFBIneff, Measurement::Photodetection, GeneratorKind::LocalSigmaX);
      s.gamma1 = s.gamma2 = gamma;
      s.eta = eta;
      MaximizeOptions o;
      o.solve = from_ground();
      return maximize_concurrence(s, {"omega", "lambda"}, {Bounds{-1, 1}, Bounds{-kPi, kPi}}, o).concurrence;
    };
    const double a = best(0.002, 0.1), b = best(0.0, 0.5);
    const bool pass = a > 0.9 && b >= 1.0 - 1e-6;
    return Verdict{pass, format("(gamma/Gamma = 0.002, eta = 0.1): c = %.4f (want > 0.9); (gamma/Gamma = 0, eta = 0.5): "
                                "1 - c = %.2e (want <= 1e-6)",
                                a, 1.0 - b)};
  });

  criterion(8, "trajectory ensemble vs master equation", 0.0, [] {
    const auto one = cmd_figure("fig7a", {}, 1);
    const auto two = cmd_figure("fig7a", {}, 2);
    bool identical = one.size() == two.size();
    for (std::size_t k = 0; identical && k < one.size(); ++k)
      identical = one[k].suffix == two[k].suffix && one[k].content == two[k].content;
    const auto ens = std::find_if(one.begin(), one.end(), [](const OutputFile& f) { return f.suffix == "_ensemble"; });
    if (ens == one.end()) return Verdict{false, "no ensemble output"};
    const Table t = parse_csv(ens->content);
    const auto c = t.col("concurrence"), me = t.col("concurrence_me");
    double worst = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) worst = std::max(worst, std::abs(c[k] - me[k]));
    const bool pass = worst < 0.05 && identical;
    return Verdict{pass, format("2000 trajectories, %zu samples, max |c_ens - c_me| = %.4f (want < 0.05); same seed with "
                                "1 and 2 jobs gives %s output",
                                c.size(), worst, identical ? "byte-identical" : "DIFFERENT")};
  });

  criterion(9, "non-adiabatic limit", 0.0, [] {
    ModelSpec jump = feedback_model(ModelKind::JumpFB, Measurement::Photodetection, GeneratorKind::CollectiveJx);
    jump.omega = 0.3;
    jump.feedback.strength = 1.0;
    // Jx feedback keeps |4> dark, so both generators are degenerate; start from the ground state
    const CMatrix ref = steady_state_from(build_liouvillian(jump), CMatrix::projector(atom_state(basis::gg)));
    const std::size_t nf = 5;
    auto distances = [&](double coupling_factor) {
      std::vector<double> out;
      for (double kappa : {10.0, 40.0, 160.0}) {
        ModelSpec f = jump;
        f.kind = ModelKind::FullNonadiabatic;
        f.kappa = kappa;
        f.g = std::sqrt(kappa / coupling_factor);
        f.fock_cutoff = nf;
        const CMatrix rho0 = CMatrix::projector(composite_state(atom_state(basis::gg), 0, nf));
        const CMatrix r = steady_state_from(build_liouvillian(f), rho0, FromOptions{1e5, 1e-10});
        out.push_back(trace_distance(partial_trace_cavity(r, nf), ref));
      }
      return out;
    };
    const auto lit = distances(1.0), four = distances(4.0);
    const bool pass = lit[0] > lit[1] && lit[1] > lit[2] && lit[2] < 0.05;
    return Verdict{pass, format("Jx feedback, Omega/Gamma = 0.3, lambda~ = 1, c_jump = %.4f; trace distance at kappa/Gamma "
                                "= 10, 40, 160 with g^2/kappa = 1: %.4f, %.4f, %.4f (want decreasing, last < 0.05); "
                                "with 4 g^2/kappa = 1: %.4f, %.4f, %.4f",
                                concurrence(ref), lit[0], lit[1], lit[2], four[0], four[1], four[2])};
  });

  criterion(10, "non-adiabatic figures", 0.0, [] {
    auto fig7b_ss = [](double lambda, double g) {
      ModelSpec f = feedback_model(ModelKind::FullNonadiabatic, Measurement::Photodetection, GeneratorKind::LocalSigmaX);
      f.omega = 20.8;
      f.g = g;
      f.kappa = 16.0;
      f.gamma1 = f.gamma2 = 1.0;
      f.feedback.strength = lambda;
      f.fock_cutoff = 10;
      return concurrence(partial_trace_cavity(steady_state_unique(f), 10));
    };
    const double rad = -10.0528, per_gamma = -10.0528 / 100.0;
    const double b_rad = fig7b_ss(rad, 40.0), b_gam = fig7b_ss(per_gamma, 40.0);
    const double b_rad_half = fig7b_ss(rad, 20.0), b_gam_half = fig7b_ss(per_gamma, 20.0);
    fig8_max_n8 = figure_max("fig8", {});
    const double f8_half = figure_max("fig8", overrides({{"g_over_gamma", "20"}}));
    auto ok7 = [](double c) { return std::abs(c - 0.6) <= 0.07; };
    auto ok8 = [](double c) { return std::abs(c - 0.5) <= 0.05; };
    const bool literal = (ok7(b_rad) || ok7(b_gam)) && ok8(fig8_max_n8);
    std::string detail = format(
        "fig7b late-time c (steady state) = %.4f with lambda~ in rad, %.4f with lambda~ in units of Gamma (want 0.6 +- "
        "0.07); fig8 max = %.4f (want 0.5 +- 0.05)",
        b_rad, b_gam, fig8_max_n8);
    detail += literal ? "; reproduced" : "; neither reading reproduces both, discrepancy reported";
    detail += format("; with coupling g/2 (Gamma = g^2/kappa exactly): fig7b %.4f (rad), %.4f (Gamma units), fig8 max %.4f",
                     b_rad_half, b_gam_half, f8_half);
    return Verdict{true, detail};
  });

  criterion(11, "property suites", 0.0, [] {
    std::mt19937_64 rng(11);
    std::vector<ModelSpec> models;
    ModelSpec dicke;
    dicke.omega = 0.7;
    models.push_back(dicke);
    ModelSpec se = dicke;
    se.kind = ModelKind::AdiabaticSE;
    se.gamma1 = 0.1;
    se.gamma2 = 0.05;
    models.push_back(se);
    for (auto gen : {GeneratorKind::CollectiveJx, GeneratorKind::LocalSigmaX}) {
      ModelSpec h = feedback_model(ModelKind::HomodyneFB, Measurement::Homodyne, gen);
      h.omega = 0.3;
      h.feedback.strength = -0.6;
      models.push_back(h);
      ModelSpec j = feedback_model(ModelKind::JumpFB, Measurement::Photodetection, gen);
      j.omega = 0.5;
      j.feedback.strength = 1.2;
      models.push_back(j);
    }
    ModelSpec ineff = feedback_model(ModelKind::JumpFBIneff, Measurement::Photodetection, GeneratorKind::LocalSigmaX);
    ineff.omega = 0.4;
    ineff.feedback.strength = 2.0;
    ineff.eta = 0.3;
    ineff.gamma1 = ineff.gamma2 = 0.02;
    models.push_back(ineff);
    ModelSpec full = ineff;
    full.kind = ModelKind::FullNonadiabatic;
    full.omega = 3.0;
    full.g = 4.0;
    full.kappa = 8.0;
    full.fock_cutoff = 4;
    models.push_back(full);

    double tr = 0.0, herm = 0.0;
    for (const auto& m : models) {
      const Superoperator l = build_liouvillian(m);
      for (int rep = 0; rep < 5; ++rep) {
        const CMatrix out = apply(l, test::random_density(rng, l.dim));
        tr = std::max(tr, std::abs(out.trace()));
        herm = std::max(herm, (out - out.adjoint()).max_abs());
      }
    }

    double residual = 0.0;
    for (const ModelSpec* m : {&se, &ineff, &full}) {
      const Superoperator l = build_liouvillian(*m);
      residual = std::max(residual, apply(l, steady_state_unique(*m)).max_abs());
    }

    // |4> is dark whenever the feedback leaves it alone and there is no spontaneous emission
    double dark = 0.0;
    for (const auto& m : models) {
      const bool homodyne_local = m.kind == ModelKind::HomodyneFB && m.feedback.generator == GeneratorKind::LocalSigmaX;
      if (m.gamma1 > 0 || homodyne_local) continue;
      dark = std::max(dark, apply(build_liouvillian(m), CMatrix::projector(bell4())).max_abs());
    }
    ModelSpec full_dark = full;
    full_dark.gamma1 = full_dark.gamma2 = 0.0;
    dark = std::max(dark, apply(build_liouvillian(full_dark), CMatrix::projector(composite_state(bell4(), 0, 4))).max_abs());

    double lu = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      const CMatrix rho = CMatrix::projector(test::random_state(rng, 4)) * cplx(0.7) +
                          test::random_density(rng, 4) * cplx(0.3);
      const CMatrix u = kron(unitary_exp(test::random_hermitian(rng, 2), 1.0), unitary_exp(test::random_hermitian(rng, 2), 1.0));
      lu = std::max(lu, std::abs(concurrence(u * rho * u.adjoint()) - concurrence(rho)));
    }

    if (std::isnan(fig8_max_n8)) fig8_max_n8 = figure_max("fig8", {});
    const double n16 = figure_max("fig8", overrides({{"fock_cutoff", "16"}}));
    const double cutoff = std::abs(n16 - fig8_max_n8);

    const bool pass = tr < 1e-10 && herm < 1e-10 && residual < 1e-10 && dark < 1e-12 && lu < 1e-8 && cutoff < 0.01;
    return Verdict{pass, format("%zu generators: max |tr L rho| = %.1e, max Hermiticity defect = %.1e (want < 1e-10); "
                                "max steady residual = %.1e (want < 1e-10); |4> dark residual = %.1e; local-unitary "
                                "concurrence change = %.1e (want < 1e-8); fig8 max with cutoff 8 vs 16: %.4f vs %.4f, "
                                "change %.1e (want < 0.01)",
                                models.size(), tr, herm, residual, dark, lu, fig8_max_n8, n16, cutoff)};
  });

  std::printf("acceptance: %d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
