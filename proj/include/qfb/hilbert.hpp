#pragma once

// Operators and states of two two-level atoms and a truncated cavity mode.
//
// Conventions, fixed globally:
//   single atom:  |g> = 0, |e> = 1, sigma = |g><e|
//   two atoms:    |gg>, |ge>, |eg>, |ee> = 0..3, first label is atom 1
//   composite:    atoms (x) cavity, index = atom_index * N + photon_number

#include <cmath>
#include <cstddef>

#include "qfb/linalg.hpp"

namespace qfb {

namespace basis {
inline constexpr std::size_t gg = 0, ge = 1, eg = 2, ee = 3;
}

struct AtomicOps {
  CMatrix sigma1, sigma2;            // lowering
  CMatrix sigma1_plus, sigma2_plus;  // raising
  CMatrix j_minus, j_plus, j_x;      // collective, j_x = J- + J+
  CMatrix sigma_x1, sigma_x2;        // local sigma_x on one atom
  CMatrix sigma_y_y;                 // sigma_y (x) sigma_y
};

inline CMatrix single_lowering() { return CMatrix{{0.0, 1.0}, {0.0, 0.0}}; }

inline AtomicOps atomic_ops() {
  const CMatrix id2 = CMatrix::identity(2);
  const CMatrix s = single_lowering();
  const CMatrix sx = CMatrix{{0.0, 1.0}, {1.0, 0.0}};
  const CMatrix sy = CMatrix{{0.0, -kI}, {kI, 0.0}};
  AtomicOps ops;
  ops.sigma1 = kron(s, id2);
  ops.sigma2 = kron(id2, s);
  ops.sigma1_plus = ops.sigma1.adjoint();
  ops.sigma2_plus = ops.sigma2.adjoint();
  ops.j_minus = ops.sigma1 + ops.sigma2;
  ops.j_plus = ops.j_minus.adjoint();
  ops.j_x = ops.j_minus + ops.j_plus;
  ops.sigma_x1 = kron(sx, id2);
  ops.sigma_x2 = kron(id2, sx);
  ops.sigma_y_y = kron(sy, sy);
  return ops;
}

struct CavityOps {
  CMatrix a, a_dag, n;
};

/// Truncated ladder operators on Fock states |0>..|N-1>; a_dag is the exact
/// adjoint of a, so a_dag|N-1> = 0.
inline CavityOps cavity_ops(std::size_t n) {
  if (n < 2) throw CutoffTooSmall("cavity_ops: Fock cutoff must be >= 2");
  CavityOps ops{CMatrix(n, n), CMatrix(), CMatrix(n, n)};
  for (std::size_t k = 1; k < n; ++k) ops.a(k - 1, k) = std::sqrt(static_cast<double>(k));
  ops.a_dag = ops.a.adjoint();
  for (std::size_t k = 0; k < n; ++k) ops.n(k, k) = static_cast<double>(k);
  return ops;
}

/// Product-basis vector of a two-atom basis state.
inline CVector atom_state(std::size_t index) {
  CVector v(4);
  v.at(index) = 1.0;
  return v;
}

/// Rows are <1|, <2|, <3|, <4| expressed in the product basis:
/// |1>=|gg>, |2>=(|ge>+|eg>)/sqrt2, |3>=|ee>, |4>=(|ge>-|eg>)/sqrt2.
inline CMatrix angular_basis() {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix b(4, 4);
  b(0, basis::gg) = 1.0;
  b(1, basis::ge) = s;
  b(1, basis::eg) = s;
  b(2, basis::ee) = 1.0;
  b(3, basis::ge) = s;
  b(3, basis::eg) = -s;
  return b;
}

/// Angular-momentum state |k>, k = 1..4, in the product basis.
inline CVector angular_state(int k) {
  const CMatrix b = angular_basis();
  CVector v(4);
  for (std::size_t i = 0; i < 4; ++i) v[i] = std::conj(b(static_cast<std::size_t>(k - 1), i));
  return v;
}

inline CVector bell4() { return angular_state(4); }

inline CMatrix to_angular(const CMatrix& rho_product) {
  if (rho_product.rows() != 4 || rho_product.cols() != 4) throw DimensionMismatch("to_angular: expects 4x4");
  const CMatrix b = angular_basis();
  return b * rho_product * b.adjoint();
}

inline CMatrix from_angular(const CMatrix& rho_angular) {
  if (rho_angular.rows() != 4 || rho_angular.cols() != 4) throw DimensionMismatch("from_angular: expects 4x4");
  const CMatrix b = angular_basis();
  return b.adjoint() * rho_angular * b;
}

/// Columns |1>, |2>, |3>: isometry from the symmetric (j=1) subspace.
inline CMatrix symmetric_isometry() {
  const CMatrix b = angular_basis();
  CMatrix p(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) p(i, k) = std::conj(b(k, i));
  return p;
}

/// atom_op (x) I_N
inline CMatrix embed_atoms(const CMatrix& atom_op, std::size_t n) { return kron(atom_op, CMatrix::identity(n)); }
/// I_4 (x) cavity_op
inline CMatrix embed_cavity(const CMatrix& cavity_op) { return kron(CMatrix::identity(4), cavity_op); }

/// (rho_atoms)[i,j] = sum_k rho[(i,k),(j,k)]
inline CMatrix partial_trace_cavity(const CMatrix& rho_full, std::size_t n) {
  if (n == 0 || rho_full.rows() != 4 * n || rho_full.cols() != 4 * n)
    throw DimensionMismatch("partial_trace_cavity: expected a 4N x 4N matrix");
  CMatrix r(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < n; ++k) r(i, j) += rho_full(i * n + k, j * n + k);
  return r;
}

/// Tensor product of an atomic state and a Fock state.
inline CVector composite_state(const CVector& atoms, std::size_t photons, std::size_t n) {
  if (photons >= n) throw DimensionMismatch("composite_state: photon number beyond cutoff");
  CVector v(4 * n);
  for (std::size_t i = 0; i < 4; ++i) v[i * n + photons] = atoms.at(i);
  return v;
}

}  // namespace qfb
