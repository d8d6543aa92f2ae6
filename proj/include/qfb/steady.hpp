#pragma once

// Stationary states of master-equation generators.
//
//  * steady_state_unique: trace-constrained linear solve, with a numerical
//    rank test that rejects generators whose kernel is not one-dimensional.
//    Generators on the atoms (x) cavity space are solved in a banded
//    ordering so that large Fock cutoffs stay affordable.
//  * steady_state_from: long-time RK4 propagation for degenerate generators.
//  * coherence_form: the real affine form dv/dt = G v + k in a generalized
//    Gell-Mann basis, with the det(G) != 0 uniqueness diagnosis.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qfb/liouville.hpp"
#include "qfb/propagate.hpp"

namespace qfb {

struct SteadyOptions {
  /// The equation for rho(k,k) is replaced by the trace constraint.
  std::size_t trace_row_state = 0;
  /// Above this vec dimension the rank test uses LU pivots instead of an SVD.
  std::size_t svd_limit = 256;
  /// Largest vec dimension for which a failed banded solve is retried densely.
  std::size_t dense_fallback_limit = 1600;
};

namespace detail {

inline void hermitize(CMatrix& rho) {
  for (std::size_t i = 0; i < rho.rows(); ++i)
    for (std::size_t j = i; j < rho.cols(); ++j) {
      const cplx m = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
      rho(i, j) = m;
      rho(j, i) = std::conj(m);
    }
}

/// Validates a candidate stationary state given its residual L(rho).
inline void check_stationary(CMatrix& rho, const CMatrix& residual, double l_scale) {
  const cplx tr = rho.trace();
  rho *= 1.0 / tr;
  double herm = 0.0;
  for (std::size_t i = 0; i < rho.rows(); ++i)
    for (std::size_t j = 0; j < rho.cols(); ++j) herm = std::max(herm, std::abs(rho(i, j) - std::conj(rho(j, i))));
  hermitize(rho);
  const double res = residual.max_abs() / std::abs(tr);
  if (!(res < tol::density * std::max(1.0, l_scale)))
    throw DegenerateSteadyState("steady state residual " + std::to_string(res) + " too large (ill-conditioned generator)");
  if (!(herm < 1e-8)) throw DegenerateSteadyState("steady state not Hermitian (ill-conditioned generator)");
  const double min_eig = eig_hermitian(rho).values.front();
  if (!(min_eig >= -tol::density * std::max(1.0, rho.rows() / 4.0)))
    throw DegenerateSteadyState("steady state not positive (ill-conditioned generator)");
}

inline double max_entry(const CMatrix& m) { return m.max_abs(); }

}  // namespace detail

/// Number of singular values of L below tol::rank * sigma_max.
inline std::size_t kernel_dimension(const Superoperator& l) {
  const auto sv = singular_values(l.matrix);
  const double thresh = tol::rank * std::max(sv.front(), 1e-300);
  return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s < thresh; }));
}

inline CMatrix steady_state_unique(const Superoperator& l, const SteadyOptions& opts = {}) {
  const std::size_t d = l.dim, n = d * d;
  if (opts.trace_row_state >= d) throw DimensionMismatch("steady_state_unique: trace row outside the state space");
  if (n <= opts.svd_limit) {
    const std::size_t k = kernel_dimension(l);
    if (k != 1) throw DegenerateSteadyState("generator kernel has dimension " + std::to_string(k));
  }
  CMatrix m = l.matrix;
  const std::size_t row = opts.trace_row_state * d + opts.trace_row_state;
  cplx* r = m.row_ptr(row);
  std::fill(r, r + n, cplx{});
  for (std::size_t k = 0; k < d; ++k) r[k * d + k] = 1.0;
  CMatrix rhs(n, 1);
  rhs(row, 0) = 1.0;
  CMatrix x;
  try {
    x = LU(std::move(m)).solve(rhs);
  } catch (const Singular&) {
    throw DegenerateSteadyState("trace-constrained generator is singular");
  }
  CVector v(x.data().begin(), x.data().end());
  CMatrix rho = devectorize(v, d);
  const CMatrix res = devectorize(l.matrix * v, d);
  detail::check_stationary(rho, res, l.matrix.max_abs());
  return rho;
}

namespace detail {

/// Banded LU (partial pivoting restricted to the band) for a matrix whose
/// last row is dense. Row i of the band part keeps columns
/// [i - kl, i + ku + kl].
class BorderedBandSolver {
 public:
  BorderedBandSolver(std::size_t n, std::size_t kl, std::size_t ku)
      : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), band_((n - 1) * width_), last_(n) {}

  cplx& band(std::size_t i, std::size_t j) { return band_[i * width_ + (j + kl_ - i)]; }
  cplx& last(std::size_t j) { return last_[j]; }

  std::vector<cplx> solve_last_unit() {
    const std::size_t nb = n_ - 1;  // band rows
    double scale = 0.0;
    for (const auto& x : band_) scale = std::max(scale, std::abs(x));
    for (const auto& x : last_) scale = std::max(scale, std::abs(x));
    std::vector<std::size_t> piv(nb);
    std::vector<cplx> tmp(width_);
    for (std::size_t k = 0; k < nb; ++k) {
      // pivot search among band rows k..k+kl
      std::size_t p = k;
      double best = std::abs(band(k, k));
      const std::size_t lo_end = std::min(nb - 1, k + kl_);
      for (std::size_t i = k + 1; i <= lo_end; ++i) {
        const double a = std::abs(band(i, k));
        if (a > best) best = a, p = i;
      }
      if (!(best >= tol::singular_pivot * scale)) throw Singular("banded solve: pivot below threshold");
      piv[k] = p;
      const std::size_t hi = std::min(n_ - 1, k + ku_ + kl_);
      if (p != k)
        for (std::size_t j = k; j <= hi; ++j) std::swap(band(k, j), band(p, j));
      const cplx inv = 1.0 / band(k, k);
      for (std::size_t i = k + 1; i <= lo_end; ++i) {
        const cplx f = band(i, k) * inv;
        if (f == cplx{}) continue;
        band(i, k) = f;
        for (std::size_t j = k + 1; j <= hi; ++j) band(i, j) -= f * band(k, j);
      }
      const cplx fl = last_[k] * inv;
      if (fl != cplx{}) {
        last_[k] = fl;
        for (std::size_t j = k + 1; j <= hi; ++j) last_[j] -= fl * band(k, j);
      } else {
        last_[k] = 0.0;
      }
    }
    if (!(std::abs(last_[nb]) >= tol::singular_pivot * scale)) throw Singular("banded solve: final pivot below threshold");
    // Forward substitution of e_last: only the last component is nonzero and
    // row swaps stay inside the band rows, so y = (0, ..., 0, 1).
    std::vector<cplx> x(n_);
    x[nb] = 1.0 / last_[nb];
    for (std::size_t kk = nb; kk-- > 0;) {
      cplx s = 0.0;
      const std::size_t hi = std::min(n_ - 1, kk + ku_ + kl_);
      for (std::size_t j = kk + 1; j <= hi; ++j) s += band(kk, j) * x[j];
      x[kk] = -s / band(kk, kk);
    }
    return x;
  }

 private:
  std::size_t n_, kl_, ku_, width_;
  std::vector<cplx> band_;
  std::vector<cplx> last_;
};

/// Ordering of vec(rho) for a 4N-dimensional atoms (x) cavity space that
/// groups the 16 atomic entries of each photon block (n, m). Blocks run
/// from (N-1, N-1) down to (0, 0) so that rho(|ge,0>,|ge,0>) comes last.
inline std::vector<std::size_t> cavity_block_order(std::size_t nf) {
  const std::size_t d = 4 * nf;
  std::vector<std::size_t> order;  // order[new] = old
  order.reserve(d * d);
  for (std::size_t mm = nf; mm-- > 0;)
    for (std::size_t nn = nf; nn-- > 0;) {
      std::vector<std::size_t> block;
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 4; ++i) block.push_back((j * nf + mm) * d + (i * nf + nn));
      const std::size_t last_pos = basis::ge * 4 + basis::ge;
      std::swap(block[last_pos], block.back());
      order.insert(order.end(), block.begin(), block.end());
    }
  return order;
}

inline CMatrix steady_state_banded(const LindbladForm& form) {
  const std::size_t nf = form.fock_cutoff, d = form.dim, n = d * d;
  const auto order = cavity_block_order(nf);
  std::vector<std::size_t> where(n);
  for (std::size_t k = 0; k < n; ++k) where[order[k]] = k;
  const auto terms = form.sandwiches();

  std::size_t kl = 0, ku = 0;
  for (const auto& t : terms)
    for_each_sandwich_entry(t, d, [&](std::size_t r, std::size_t c, cplx) {
      const std::size_t i = where[r], j = where[c];
      if (i == n - 1) return;
      if (i > j) kl = std::max(kl, i - j);
      else ku = std::max(ku, j - i);
    });

  BorderedBandSolver solver(n, kl, ku);
  for (const auto& t : terms)
    for_each_sandwich_entry(t, d, [&](std::size_t r, std::size_t c, cplx v) {
      const std::size_t i = where[r], j = where[c];
      if (i != n - 1) solver.band(i, j) += v;
    });
  for (std::size_t k = 0; k < d; ++k) solver.last(where[k * d + k]) = 1.0;

  std::vector<cplx> x;
  try {
    x = solver.solve_last_unit();
  } catch (const Singular&) {
    throw DegenerateSteadyState("trace-constrained generator is singular");
  }
  CVector v(n);
  for (std::size_t k = 0; k < n; ++k) v[order[k]] = x[k];
  CMatrix rho = devectorize(v, d);
  double l_scale = 0.0;
  for (const auto& t : terms) l_scale = std::max(l_scale, t.left.max_abs() * t.right.max_abs());
  const CMatrix res = form.apply(rho);
  check_stationary(rho, res, l_scale);
  return rho;
}

}  // namespace detail

/// Cavity models above a few photons go through the banded solver; all
/// others through the dense superoperator.
inline CMatrix steady_state_unique(const LindbladForm& form, const SteadyOptions& opts = {}) {
  if (form.fock_cutoff >= 3 && form.dim * form.dim > opts.svd_limit) {
    try {
      return detail::steady_state_banded(form);
    } catch (const DegenerateSteadyState&) {
      // pivoting is restricted to the band; retry densely when affordable
      if (form.dim * form.dim > opts.dense_fallback_limit) throw;
    }
  }
  return steady_state_unique(to_superoperator(form), opts);
}

inline CMatrix steady_state_unique(const ModelSpec& spec, const SteadyOptions& opts = {}) {
  return steady_state_unique(lindblad_form(spec), opts);
}

struct FromOptions {
  double max_time = 1e4;
  double residual = tol::density;
};

/// Long-time limit of exp(L t) rho0. RK4 with h = 0.01/rate_scale; the
/// residual is checked after the first 100 steps and the span of the
/// propagator doubles after every check.
inline CMatrix steady_state_from(const Superoperator& l, const CMatrix& rho0, const FromOptions& opts = {}) {
  if (!rho0.is_density_matrix(1e-8)) throw NotDensityMatrix("steady_state_from: initial state is not a density matrix");
  if (rho0.rows() != l.dim) throw DimensionMismatch("steady_state_from: dimension mismatch");
  const std::size_t d = l.dim;
  const double h = default_rk4_step(l);
  CMatrix span = matrix_power(rk4_step_operator(l, h), 100);
  double span_time = 100 * h;
  CVector v = vectorize(rho0);
  double t = 0.0;
  while (true) {
    v = span * v;
    t += span_time;
    const cplx tr = detail::vec_trace(v, d);
    for (auto& x : v) x /= tr;
    const CVector dv = l.matrix * v;
    double mx = 0.0;
    for (const auto& x : dv) mx = std::max(mx, std::abs(x));
    if (mx < opts.residual) break;
    if (t >= opts.max_time) throw NoConvergence("steady_state_from: no convergence before max_time");
    span = span * span;
    span_time *= 2;
  }
  CMatrix rho = devectorize(v, d);
  detail::hermitize(rho);
  return rho;
}

// ---------------------------------------------------------------------------
// Coherence-vector form

/// Generalized Gell-Mann basis for dimension d, normalized Tr(a b) = 2 delta.
/// Ordering: symmetric X_jk (j<k, lexicographic), antisymmetric Y_jk (same
/// order), then diagonal Z_l, l = 1..d-1.
inline std::vector<CMatrix> gell_mann_basis(std::size_t d) {
  std::vector<CMatrix> out;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j + 1; k < d; ++k) {
      CMatrix x(d, d);
      x(j, k) = 1.0;
      x(k, j) = 1.0;
      out.push_back(x);
    }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j + 1; k < d; ++k) {
      CMatrix y(d, d);
      y(j, k) = -kI;
      y(k, j) = kI;
      out.push_back(y);
    }
  for (std::size_t l = 1; l < d; ++l) {
    CMatrix z(d, d);
    const double c = std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
    for (std::size_t m = 0; m < l; ++m) z(m, m) = c;
    z(l, l) = -c * static_cast<double>(l);
    out.push_back(z);
  }
  return out;
}

struct CoherenceForm {
  std::vector<std::vector<double>> g;  // (d^2-1) x (d^2-1)
  std::vector<double> k;               // d^2-1
  std::vector<CMatrix> basis;
  std::size_t dim = 0;
};

namespace detail {
inline double re_trace_product(const CMatrix& a, const CMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += (a(i, j) * b(j, i)).real();
  return s;
}
}  // namespace detail

/// v_a = Tr(rho lambda_a), rho = I/d + (1/2) sum_a v_a lambda_a;
/// dv/dt = G v + k with G_ab = Tr(lambda_a L(lambda_b))/2, k_a = Tr(lambda_a L(I))/d.
inline CoherenceForm coherence_form(const Superoperator& l) {
  if (l.dim != 4) throw DimensionUnsupported("coherence_form: only d = 4 is supported");
  const std::size_t d = l.dim;
  CoherenceForm f;
  f.dim = d;
  f.basis = gell_mann_basis(d);
  const std::size_t m = f.basis.size();
  std::vector<CMatrix> images;
  images.reserve(m);
  for (const auto& b : f.basis) images.push_back(apply(l, b));
  const CMatrix li = apply(l, CMatrix::identity(d));
  f.g.assign(m, std::vector<double>(m));
  f.k.assign(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    f.k[a] = detail::re_trace_product(f.basis[a], li) / static_cast<double>(d);
    for (std::size_t b = 0; b < m; ++b) f.g[a][b] = 0.5 * detail::re_trace_product(f.basis[a], images[b]);
  }
  return f;
}

inline CMatrix coherence_g_matrix(const CoherenceForm& f) {
  const std::size_t m = f.k.size();
  CMatrix g(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) g(a, b) = f.g[a][b];
  return g;
}

enum class Uniqueness { Unique, Degenerate };

/// det(G) != 0 decided by sigma_min(G) >= tol::rank * sigma_max(G).
inline Uniqueness is_unique(const CoherenceForm& f) {
  const auto sv = singular_values(coherence_g_matrix(f));
  return sv.back() >= tol::rank * sv.front() ? Uniqueness::Unique : Uniqueness::Degenerate;
}

inline std::vector<double> coherence_vector(const CoherenceForm& f, const CMatrix& rho) {
  std::vector<double> v(f.basis.size());
  for (std::size_t a = 0; a < v.size(); ++a) v[a] = detail::re_trace_product(f.basis[a], rho);
  return v;
}

inline CMatrix density_from_coherence(const CoherenceForm& f, const std::vector<double>& v) {
  CMatrix rho = CMatrix::identity(f.dim) * cplx(1.0 / static_cast<double>(f.dim));
  for (std::size_t a = 0; a < v.size(); ++a) rho += f.basis[a] * cplx(0.5 * v[a]);
  return rho;
}

/// d rho/dt reconstructed from (G, k).
inline CMatrix apply_coherence(const CoherenceForm& f, const CMatrix& rho) {
  const auto v = coherence_vector(f, rho);
  CMatrix out(f.dim, f.dim);
  for (std::size_t a = 0; a < v.size(); ++a) {
    double vdot = f.k[a];
    for (std::size_t b = 0; b < v.size(); ++b) vdot += f.g[a][b] * v[b];
    out += f.basis[a] * cplx(0.5 * vdot);
  }
  return out;
}

/// v_ss = -G^{-1} k, as a density matrix.
inline CMatrix stationary_from_coherence(const CoherenceForm& f) {
  if (is_unique(f) != Uniqueness::Unique) throw DegenerateSteadyState("coherence form: G is singular");
  const std::size_t m = f.k.size();
  CMatrix rhs(m, 1);
  for (std::size_t a = 0; a < m; ++a) rhs(a, 0) = -f.k[a];
  const CMatrix v = solve(coherence_g_matrix(f), rhs);
  std::vector<double> vr(m);
  for (std::size_t a = 0; a < m; ++a) vr[a] = v(a, 0).real();
  return density_from_coherence(f, vr);
}

}  // namespace qfb
