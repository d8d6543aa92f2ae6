#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "qfb/hilbert.hpp"
#include "qfb/linalg.hpp"

namespace qfb {

namespace detail {
inline void require_two_qubit_state(const CMatrix& rho, const char* who) {
  if (rho.rows() != 4 || rho.cols() != 4) throw NotDensityMatrix(std::string(who) + ": expects a 4x4 matrix");
  if (!rho.is_density_matrix(tol::concurrence_psd)) throw NotDensityMatrix(std::string(who) + ": not a density matrix");
}
}  // namespace detail

/// Square roots (descending) of the eigenvalues of rho * rho_tilde, from the
/// Hermitian matrix sqrt(rho) rho_tilde sqrt(rho).
inline std::array<double, 4> wootters_roots(const CMatrix& rho) {
  const CMatrix yy = atomic_ops().sigma_y_y;
  const CMatrix rho_tilde = yy * rho.conj() * yy;
  const auto e = eig_hermitian(0.5 * (rho + rho.adjoint()));
  const CMatrix sq = hermitian_function(e, [](double x) { return std::sqrt(std::max(x, 0.0)); });
  CMatrix r = sq * rho_tilde * sq;
  r = 0.5 * (r + r.adjoint());
  const auto mu = eig_hermitian(r).values;
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = std::sqrt(std::max(mu[3 - i], 0.0));
  return out;
}

inline double concurrence(const CMatrix& rho) {
  detail::require_two_qubit_state(rho, "concurrence");
  const auto s = wootters_roots(rho);
  return std::clamp(s[0] - s[1] - s[2] - s[3], 0.0, 1.0);
}

struct StateDiagnostics {
  double concurrence = 0.0;
  double purity = 0.0;
  std::array<double, 4> populations{};  // rho_11 .. rho_44, angular basis
  double fidelity_bell4 = 0.0;
};

inline StateDiagnostics diagnostics(const CMatrix& rho) {
  detail::require_two_qubit_state(rho, "diagnostics");
  StateDiagnostics d;
  d.concurrence = concurrence(rho);
  d.purity = (rho * rho).trace().real();
  const CMatrix a = to_angular(rho);
  for (std::size_t k = 0; k < 4; ++k) d.populations[k] = a(k, k).real();
  d.fidelity_bell4 = d.populations[3];
  return d;
}

/// (1/2) * sum of |eigenvalues| of a - b.
inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  CMatrix diff = a - b;
  diff = 0.5 * (diff + diff.adjoint());
  double s = 0.0;
  for (double x : eig_hermitian(diff).values) s += std::abs(x);
  return 0.5 * s;
}

}  // namespace qfb
