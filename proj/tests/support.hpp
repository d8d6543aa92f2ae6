#pragma once

#include <random>

#include "qfb/linalg.hpp"

namespace qfb::test {

inline CMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

inline CMatrix random_hermitian(std::mt19937_64& rng, std::size_t d) {
  const CMatrix a = random_matrix(rng, d, d);
  return (a + a.adjoint()) * cplx(0.5);
}

/// Full-rank random density matrix (Ginibre construction).
inline CMatrix random_density(std::mt19937_64& rng, std::size_t d) {
  const CMatrix a = random_matrix(rng, d, d);
  CMatrix rho = a * a.adjoint();
  return rho * (1.0 / rho.trace());
}

inline CVector random_state(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  CVector v(d);
  for (auto& x : v) x = cplx(n(rng), n(rng));
  const double s = std::sqrt(norm2(v));
  for (auto& x : v) x /= s;
  return v;
}

inline double max_diff(const CMatrix& a, const CMatrix& b) { return (a - b).max_abs(); }

/// Partial sums of sum_k m^k / k!, truncated after `terms` terms.
inline CMatrix taylor_exp(const CMatrix& m, int terms) {
  CMatrix sum = CMatrix::identity(m.rows());
  CMatrix term = CMatrix::identity(m.rows());
  for (int k = 1; k < terms; ++k) {
    term = term * m * cplx(1.0 / k);
    sum += term;
  }
  return sum;
}

}  // namespace qfb::test
