#pragma once

// Deterministic master-equation propagation with classic RK4 on vec(rho).
// A fixed-step RK4 update is the linear map T = p(hL) with
// p(z) = 1 + z + z^2/2 + z^3/6 + z^4/24, so many steps can be taken at once
// by powering T.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qfb/liouville.hpp"

namespace qfb {

/// Largest absolute row sum of L; bounds its spectral radius.
inline double rate_scale(const Superoperator& l) {
  double best = 0.0;
  for (std::size_t i = 0; i < l.matrix.rows(); ++i) {
    double s = 0.0;
    const cplx* row = l.matrix.row_ptr(i);
    for (std::size_t j = 0; j < l.matrix.cols(); ++j) s += std::abs(row[j]);
    best = std::max(best, s);
  }
  return best;
}

/// Step size used when no tighter bound is given: 0.01 / rate scale.
inline double default_rk4_step(const Superoperator& l) {
  const double r = rate_scale(l);
  return r > 0.0 ? 0.01 / r : 1.0;
}

inline CMatrix rk4_step_operator(const Superoperator& l, double h) {
  const std::size_t n = l.matrix.rows();
  const CMatrix hl = l.matrix * cplx(h);
  const CMatrix id = CMatrix::identity(n);
  CMatrix t = id + hl * cplx(0.25);
  t = id + (hl * t) * cplx(1.0 / 3.0);
  t = id + (hl * t) * cplx(0.5);
  t = id + hl * t;
  return t;
}

/// One explicit RK4 step on a vector.
inline CVector rk4_step(const Superoperator& l, const CVector& v, double h) {
  auto axpy = [](const CVector& a, const CVector& b, double s) {
    CVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  const CVector k1 = l.matrix * v;
  const CVector k2 = l.matrix * axpy(v, k1, h / 2);
  const CVector k3 = l.matrix * axpy(v, k2, h / 2);
  const CVector k4 = l.matrix * axpy(v, k3, h);
  CVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return r;
}

namespace detail {
inline cplx vec_trace(const CVector& v, std::size_t d) {
  cplx t = 0.0;
  for (std::size_t k = 0; k < d; ++k) t += v[k * d + k];
  return t;
}
}  // namespace detail

struct PropagateOptions {
  /// Maximum RK4 step; 0 selects 0.01 / rate_scale(L).
  double max_step = 0.0;
};

/// Density matrices at each time of t_grid (t_grid[0] is the start time).
inline std::vector<CMatrix> propagate_me(const Superoperator& l, const CMatrix& rho0, const std::vector<double>& t_grid,
                                         const PropagateOptions& opts = {}) {
  if (!rho0.is_density_matrix(1e-8)) throw NotDensityMatrix("propagate_me: initial state is not a density matrix");
  if (rho0.rows() != l.dim) throw DimensionMismatch("propagate_me: state and generator dimensions differ");
  const std::size_t d = l.dim, n = d * d;
  const double hmax = opts.max_step > 0.0 ? opts.max_step : default_rk4_step(l);

  std::vector<CMatrix> out;
  out.reserve(t_grid.size());
  if (t_grid.empty()) return out;
  CVector v = vectorize(rho0);
  out.push_back(rho0);

  // The interval operator is reused while consecutive spacings agree.
  CMatrix interval_op;
  double interval_dt = -1.0;
  for (std::size_t s = 1; s < t_grid.size(); ++s) {
    const double dt = t_grid[s] - t_grid[s - 1];
    if (!(dt >= 0.0)) throw DimensionMismatch("propagate_me: time grid must be non-decreasing");
    if (dt > 0.0) {
      const auto steps = static_cast<std::uint64_t>(std::ceil(dt / hmax - 1e-9));
      const double h = dt / static_cast<double>(steps);
      // powering costs ~(2 log2 m + 4) n^3 once, stepping ~4 m n^2 per interval
      const double power_cost = (2.0 * std::log2(static_cast<double>(steps) + 1.0) + 4.0) * static_cast<double>(n);
      const double step_cost = 4.0 * static_cast<double>(steps) * static_cast<double>(t_grid.size() - s);
      if (interval_dt > 0.0 && std::abs(dt - interval_dt) <= 1e-12 * dt) {
        v = interval_op * v;
      } else if (power_cost < step_cost) {
        interval_op = matrix_power(rk4_step_operator(l, h), steps);
        interval_dt = dt;
        v = interval_op * v;
      } else {
        for (std::uint64_t k = 0; k < steps; ++k) v = rk4_step(l, v, h);
      }
    }
    const cplx tr = detail::vec_trace(v, d);
    if (std::abs(tr - 1.0) > 1e-6 || !std::isfinite(std::abs(tr)))
      throw StepTooLarge("propagate_me: trace drift exceeds 1e-6");
    for (auto& x : v) x /= tr;
    double mx = 0.0;
    for (const auto& x : v) mx = std::max(mx, std::abs(x));
    if (mx > 1.0 + 1e-6) throw StepTooLarge("propagate_me: state left the set of density matrices");
    out.push_back(devectorize(v, d));
  }
  return out;
}

}  // namespace qfb
