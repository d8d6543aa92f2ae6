#pragma once

// Steady-state concurrence over two-parameter grids, and box-constrained
// maximization (coarse grid, then Nelder-Mead from the best nodes).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qfb/entangle.hpp"
#include "qfb/parallel.hpp"
#include "qfb/steady.hpp"

namespace qfb {

struct Axis {
  std::string name;  // parameter, see set_parameter
  std::string unit;
  std::vector<double> values;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) throw InvalidSpec("linspace: count must be >= 1");
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

inline Axis make_axis(std::string name, std::string unit, double lo, double hi, std::size_t count) {
  return {std::move(name), std::move(unit), linspace(lo, hi, count)};
}

/// Parameter names: omega, lambda (feedback strength), gamma (both atoms),
/// gamma1, gamma2, eta, kappa, g, big_gamma.
inline void set_parameter(ModelSpec& s, const std::string& name, double value) {
  if (name == "omega") s.omega = value;
  else if (name == "lambda") s.feedback.strength = value;
  else if (name == "gamma") s.gamma1 = s.gamma2 = value;
  else if (name == "gamma1") s.gamma1 = value;
  else if (name == "gamma2") s.gamma2 = value;
  else if (name == "eta") s.eta = value;
  else if (name == "kappa") s.kappa = value;
  else if (name == "g") s.g = value;
  else if (name == "big_gamma") s.big_gamma = value;
  else throw InvalidSpec("unknown sweep parameter: " + name);
}

enum class SweepMethod { Unique, From, SymmetricSubspace };

inline std::string_view to_string(SweepMethod m) {
  switch (m) {
    case SweepMethod::Unique: return "unique";
    case SweepMethod::From: return "from";
    case SweepMethod::SymmetricSubspace: return "symmetric_subspace";
  }
  return "?";
}

struct SolveOptions {
  SweepMethod method = SweepMethod::Unique;
  /// Initial state for `from`, and the fallback for degenerate `unique` nodes.
  std::optional<CMatrix> rho0;
};

struct NodeResult {
  bool ok = false;
  bool fallback = false;  // `unique` was degenerate; value from rho0
  double concurrence = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 4> populations{};
  double photon_number = 0.0;
  std::string error;
  CMatrix rho;  // atomic steady state
};

/// The generator restricted to operators on span{|1>,|2>,|3>}:
/// L_s = E^dagger L E with E = conj(P) (x) P, P the 4x3 isometry.
inline Superoperator restrict_symmetric(const Superoperator& l) {
  if (l.dim != 4) throw DimensionMismatch("symmetric subspace needs an atomic (d = 4) generator");
  const CMatrix p = symmetric_isometry();
  const CMatrix e = kron(p.conj(), p);
  const CMatrix le = l.matrix * e;
  Superoperator ls{3, e.adjoint() * le};
  const double leak = (le - e * ls.matrix).max_abs();
  if (leak > 1e-10 * std::max(1.0, l.matrix.max_abs()))
    throw SubspaceNotInvariant("generator does not preserve the symmetric subspace");
  return ls;
}

/// Stationary state on the model's full space; throws on failure.
/// `fallback` is set when a degenerate `unique` solve fell back to rho0.
inline CMatrix solve_state(const LindbladForm& form, const SolveOptions& opts, bool& fallback) {
  fallback = false;
  switch (opts.method) {
    case SweepMethod::Unique:
      try {
        return steady_state_unique(form);
      } catch (const DegenerateSteadyState&) {
        if (!opts.rho0) throw;
        fallback = true;
        return steady_state_from(to_superoperator(form), *opts.rho0);
      }
    case SweepMethod::From:
      if (!opts.rho0) throw InvalidSpec("method `from` needs an initial state");
      return steady_state_from(to_superoperator(form), *opts.rho0);
    case SweepMethod::SymmetricSubspace: {
      const CMatrix p = symmetric_isometry();
      const CMatrix sigma = steady_state_unique(restrict_symmetric(to_superoperator(form)));
      return p * sigma * p.adjoint();
    }
  }
  throw InvalidSpec("unknown solve method");
}

inline NodeResult solve_node(const ModelSpec& spec, const SolveOptions& opts) {
  NodeResult r;
  try {
    const LindbladForm form = lindblad_form(spec);
    CMatrix rho = solve_state(form, opts, r.fallback);
    if (form.fock_cutoff > 0) {
      double n = 0.0;
      for (std::size_t i = 0; i < form.dim; ++i) n += static_cast<double>(i % form.fock_cutoff) * rho(i, i).real();
      r.photon_number = n;
      rho = partial_trace_cavity(rho, form.fock_cutoff);
    }
    const auto d = diagnostics(rho);
    r.concurrence = d.concurrence;
    r.populations = d.populations;
    r.rho = std::move(rho);
    r.ok = true;
  } catch (const Error& e) {
    r = NodeResult{};
    r.error = e.what();
  }
  return r;
}

struct SweepResult {
  Axis axis1, axis2;
  std::vector<NodeResult> nodes;  // index i1 * axis2.values.size() + i2
  ModelSpec spec;
  SweepMethod method = SweepMethod::Unique;

  const NodeResult& at(std::size_t i1, std::size_t i2) const { return nodes[i1 * axis2.values.size() + i2]; }
  double concurrence(std::size_t i1, std::size_t i2) const { return at(i1, i2).concurrence; }

  struct Best {
    std::size_t i1 = 0, i2 = 0;
    double concurrence = -1.0;
  };
  /// Largest concurrence over successful nodes; ties keep the first index.
  Best best() const {
    Best b;
    for (std::size_t i = 0; i < axis1.values.size(); ++i)
      for (std::size_t j = 0; j < axis2.values.size(); ++j) {
        const auto& n = at(i, j);
        if (n.ok && n.concurrence > b.concurrence) b = {i, j, n.concurrence};
      }
    return b;
  }
};

inline SweepResult sweep2d(const ModelSpec& spec_template, const Axis& axis1, const Axis& axis2,
                           const SolveOptions& opts = {}, unsigned jobs = 1) {
  if (axis1.values.empty() || axis2.values.empty()) throw InvalidSpec("sweep2d: empty axis");
  SweepResult res{axis1, axis2, std::vector<NodeResult>(axis1.values.size() * axis2.values.size()), spec_template,
                  opts.method};
  const std::size_t n2 = axis2.values.size();
  parallel_for(res.nodes.size(), jobs, [&](std::size_t k) {
    ModelSpec s = spec_template;
    set_parameter(s, axis1.name, axis1.values[k / n2]);
    set_parameter(s, axis2.name, axis2.values[k % n2]);
    res.nodes[k] = solve_node(s, opts);
  });
  return res;
}

// ---------------------------------------------------------------------------

struct Bounds {
  double lo, hi;
};

struct MaximizeOptions {
  std::size_t grid1 = 41, grid2 = 41;
  std::size_t starts = 3;
  double tolerance = 1e-4;
  std::size_t max_evaluations = 600;
  SolveOptions solve;
  unsigned jobs = 1;
};

struct MaximizeResult {
  std::array<double, 2> params{};
  double concurrence = -1.0;
  std::array<double, 2> coarse_params{};
  double coarse_concurrence = -1.0;
  std::size_t grid1 = 0, grid2 = 0;
  std::size_t evaluations = 0;
};

namespace detail {

/// Nelder-Mead maximization of f on a box; trial points are clipped into
/// the box. Stops when the spread of values is below `tol` and the simplex
/// has shrunk below `xtol` (relative to the box), or on the budget.
template <class F>
std::pair<std::array<double, 2>, double> nelder_mead_box(F&& f, std::array<double, 2> x0, std::array<double, 2> step,
                                                         const std::array<Bounds, 2>& box, double tol, double xtol,
                                                         std::size_t budget, std::size_t& evals) {
  using P = std::array<double, 2>;
  auto clip = [&](P p) {
    for (int i = 0; i < 2; ++i) p[i] = std::clamp(p[i], box[i].lo, box[i].hi);
    return p;
  };
  auto eval = [&](const P& p) {
    ++evals;
    return f(p);
  };
  std::array<P, 3> x{x0, x0, x0};
  for (int i = 0; i < 2; ++i) {
    x[i + 1][i] += step[i];
    if (x[i + 1][i] > box[i].hi) x[i + 1][i] = x0[i] - step[i];
    x[i + 1] = clip(x[i + 1]);
  }
  std::array<double, 3> fx{};
  for (int i = 0; i < 3; ++i) fx[i] = eval(x[i]);
  const std::size_t start = evals;
  while (evals - start < budget) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] > fx[b]; });
    std::array<P, 3> xs{x[idx[0]], x[idx[1]], x[idx[2]]};
    std::array<double, 3> fs{fx[idx[0]], fx[idx[1]], fx[idx[2]]};
    x = xs;
    fx = fs;
    double size = 0.0;
    for (int k = 1; k < 3; ++k)
      for (int i = 0; i < 2; ++i) size = std::max(size, std::abs(x[k][i] - x[0][i]) / (box[i].hi - box[i].lo));
    if (fx[0] - fx[2] < tol && size < xtol) break;
    if (size < 1e-14) break;
    const P c{(x[0][0] + x[1][0]) / 2, (x[0][1] + x[1][1]) / 2};
    auto along = [&](double t) { return clip(P{c[0] + t * (x[2][0] - c[0]), c[1] + t * (x[2][1] - c[1])}); };
    const P xr = along(-1.0);
    const double fr = eval(xr);
    if (fr > fx[0]) {
      const P xe = along(-2.0);
      const double fe = eval(xe);
      if (fe > fr) x[2] = xe, fx[2] = fe;
      else x[2] = xr, fx[2] = fr;
    } else if (fr > fx[1]) {
      x[2] = xr, fx[2] = fr;
    } else {
      const bool outside = fr > fx[2];
      const P xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc > std::max(fr, fx[2])) {
        x[2] = xc, fx[2] = fc;
      } else {
        for (int k = 1; k < 3; ++k) {
          x[k] = P{(x[0][0] + x[k][0]) / 2, (x[0][1] + x[k][1]) / 2};
          fx[k] = eval(x[k]);
        }
      }
    }
  }
  const int b = static_cast<int>(std::max_element(fx.begin(), fx.end()) - fx.begin());
  return {x[b], fx[b]};
}

}  // namespace detail

/// Maximizes the steady-state concurrence over two named parameters inside
/// a box. Nodes that fail to solve score -1. The result is never below the
/// best coarse-grid node.
inline MaximizeResult maximize_concurrence(const ModelSpec& spec_template, const std::array<std::string, 2>& params,
                                           const std::array<Bounds, 2>& box, const MaximizeOptions& opts = {}) {
  for (const auto& b : box)
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.hi > b.lo)) throw InvalidSpec("maximize: bounds must be finite and ordered");
  const Axis a1 = make_axis(params[0], "", box[0].lo, box[0].hi, opts.grid1);
  const Axis a2 = make_axis(params[1], "", box[1].lo, box[1].hi, opts.grid2);
  const SweepResult grid = sweep2d(spec_template, a1, a2, opts.solve, opts.jobs);

  MaximizeResult out;
  out.grid1 = opts.grid1;
  out.grid2 = opts.grid2;
  out.evaluations = grid.nodes.size();

  std::vector<std::size_t> order(grid.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  auto score = [&](std::size_t k) { return grid.nodes[k].ok ? grid.nodes[k].concurrence : -1.0; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  const std::size_t n2 = a2.values.size();
  out.coarse_params = {a1.values[order[0] / n2], a2.values[order[0] % n2]};
  out.coarse_concurrence = score(order[0]);
  out.params = out.coarse_params;
  out.concurrence = out.coarse_concurrence;

  auto objective = [&](const std::array<double, 2>& p) {
    ModelSpec s = spec_template;
    set_parameter(s, params[0], p[0]);
    set_parameter(s, params[1], p[1]);
    const NodeResult r = solve_node(s, opts.solve);
    return r.ok ? r.concurrence : -1.0;
  };
  const std::array<double, 2> step{(box[0].hi - box[0].lo) / std::max<double>(1.0, static_cast<double>(opts.grid1 - 1)),
                                   (box[1].hi - box[1].lo) / std::max<double>(1.0, static_cast<double>(opts.grid2 - 1))};
  const std::size_t starts = std::min(opts.starts, order.size());
  std::vector<std::pair<std::array<double, 2>, double>> found(starts);
  std::vector<std::size_t> evals(starts, 0);
  parallel_for(starts, opts.jobs, [&](std::size_t s) {
    const std::size_t k = order[s];
    found[s] = detail::nelder_mead_box(objective, {a1.values[k / n2], a2.values[k % n2]}, step, box, opts.tolerance, 1e-6,
                                       opts.max_evaluations, evals[s]);
  });
  for (std::size_t s = 0; s < starts; ++s) {
    out.evaluations += evals[s];
    if (found[s].second > out.concurrence) {
      out.concurrence = found[s].second;
      out.params = found[s].first;
    }
  }
  return out;
}

}  // namespace qfb
