#pragma once

// Dense complex linear algebra used throughout the toolkit: a row-major
// complex matrix, Kronecker products, a cyclic Jacobi eigensolver for
// Hermitian matrices, LU solves, one-sided Jacobi singular values and
// unitary exponentials of Hermitian generators.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qfb/error.hpp"

namespace qfb {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

inline constexpr cplx kI{0.0, 1.0};

/// Numerical tolerances shared by every module.
namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double unitary = 1e-10;
inline constexpr double density = 1e-10;
inline constexpr double jacobi_offdiag = 1e-12;
inline constexpr double singular_pivot = 1e-13;
inline constexpr double rank = 1e-10;
inline constexpr double concurrence_psd = 1e-8;
inline constexpr double sqrt_clamp = 1e-10;
}  // namespace tol

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DimensionMismatch("CMatrix: entries length != rows*cols");
  }
  CMatrix(std::initializer_list<std::initializer_list<cplx>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw DimensionMismatch("CMatrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static CMatrix identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static CMatrix zeros(std::size_t r, std::size_t c) { return CMatrix(r, c); }
  static CMatrix diagonal(std::span<const double> d) {
    CMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static CMatrix column(const CVector& v) { return CMatrix(v.size(), 1, v); }
  /// |v><v|
  static CMatrix projector(const CVector& v) {
    CMatrix m(v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[i] * std::conj(v[j]);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  cplx* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const cplx* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  CMatrix adjoint() const {
    CMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }
  CMatrix transpose() const {
    CMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }
  CMatrix conj() const {
    CMatrix r = *this;
    for (auto& x : r.data_) x = std::conj(x);
    return r;
  }
  cplx trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& x : data_) m = std::max(m, std::abs(x));
    return m;
  }
  double frobenius() const {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return std::sqrt(s);
  }

  CMatrix& operator+=(const CMatrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  CMatrix& operator*=(cplx s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  bool is_hermitian(double eps = tol::hermitian) const {
    if (!square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i; j < cols_; ++j)
        if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > eps) return false;
    return true;
  }
  bool is_unitary(double eps = tol::unitary) const;
  bool is_density_matrix(double eps = tol::density) const;

 private:
  void check_same(const CMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("CMatrix: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

inline CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
inline CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
inline CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
inline CMatrix operator*(CMatrix a, cplx s) { return a *= s; }

namespace detail {
// (a+bi)(c+di) spelled out so the inner loops vectorize without the
// NaN-recovery path of the library complex multiply.
inline void axpy(std::size_t n, cplx alpha, const cplx* x, cplx* y) {
  const double ar = alpha.real(), ai = alpha.imag();
  auto* xd = reinterpret_cast<const double*>(x);
  auto* yd = reinterpret_cast<double*>(y);
  for (std::size_t k = 0; k < n; ++k) {
    const double xr = xd[2 * k], xi = xd[2 * k + 1];
    yd[2 * k] += ar * xr - ai * xi;
    yd[2 * k + 1] += ar * xi + ai * xr;
  }
}
}  // namespace detail

inline CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dimensions differ");
  CMatrix r(a.rows(), b.cols());
  // tiles of b small enough to stay in cache while all rows of a pass over them
  constexpr std::size_t kb = 64, jb = 256;
  for (std::size_t k0 = 0; k0 < a.cols(); k0 += kb) {
    const std::size_t k1 = std::min(a.cols(), k0 + kb);
    for (std::size_t j0 = 0; j0 < b.cols(); j0 += jb) {
      const std::size_t w = std::min(b.cols(), j0 + jb) - j0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx* out = r.row_ptr(i) + j0;
        const cplx* arow = a.row_ptr(i);
        for (std::size_t k = k0; k < k1; ++k) {
          if (arow[k] == cplx{}) continue;
          detail::axpy(w, arow[k], b.row_ptr(k) + j0, out);
        }
      }
    }
  }
  return r;
}

inline CVector operator*(const CMatrix& a, const CVector& v) {
  if (a.cols() != v.size()) throw DimensionMismatch("matvec: dimension mismatch");
  CVector r(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const cplx* arow = a.row_ptr(i);
    double sr = 0.0, si = 0.0;
    auto* ad = reinterpret_cast<const double*>(arow);
    auto* vd = reinterpret_cast<const double*>(v.data());
    for (std::size_t k = 0; k < a.cols(); ++k) {
      sr += ad[2 * k] * vd[2 * k] - ad[2 * k + 1] * vd[2 * k + 1];
      si += ad[2 * k] * vd[2 * k + 1] + ad[2 * k + 1] * vd[2 * k];
    }
    r[i] = {sr, si};
  }
  return r;
}

inline double norm2(const CVector& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

inline cplx inner(const CVector& a, const CVector& b) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s;
}

/// Commutator [a, b].
inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

/// (a ⊗ b)[(i·rB+k),(j·cB+l)] = a[i,j]·b[k,l]
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{}) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return r;
}

inline bool CMatrix::is_unitary(double eps) const {
  if (!square()) return false;
  const CMatrix p = adjoint() * (*this);
  return (p - identity(rows_)).max_abs() <= eps;
}

struct HermitianEigen {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns are eigenvectors
};

/// Cyclic Jacobi for Hermitian matrices. Stops when the off-diagonal
/// Frobenius norm drops below tol::jacobi_offdiag relative to ||h||_F.
inline HermitianEigen eig_hermitian(const CMatrix& h) {
  if (!h.is_hermitian(tol::hermitian)) throw NotHermitian("eig_hermitian: input not Hermitian");
  const std::size_t n = h.rows();
  CMatrix a = h;
  for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  CMatrix v = CMatrix::identity(n);
  const double scale = std::max(h.frobenius(), 1e-300);

  auto offdiag = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && offdiag() > tol::jacobi_offdiag * scale; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag < 1e-300) continue;
        const cplx phase = apq / mag;
        const double app = a(p, p).real(), aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        // G = diag(1, conj(phase)) * [[c, s], [-s, c]]
        const cplx gpp = c, gpq = s, gqp = -s * std::conj(phase), gqq = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  HermitianEigen out{std::vector<double>(n), CMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline bool CMatrix::is_density_matrix(double eps) const {
  if (!is_hermitian(eps)) return false;
  if (std::abs(trace() - 1.0) > eps) return false;
  const auto e = eig_hermitian(*this);
  return e.values.front() >= -eps;
}

/// V f(D) V† for a Hermitian matrix.
template <class F>
CMatrix hermitian_function(const HermitianEigen& e, F&& f) {
  const std::size_t n = e.values.size();
  CMatrix r(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx fk = f(e.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx vik = e.vectors(i, k) * fk;
      for (std::size_t j = 0; j < n; ++j) r(i, j) += vik * std::conj(e.vectors(j, k));
    }
  }
  return r;
}

/// exp(-i·theta·f) for Hermitian f via its spectral decomposition.
inline CMatrix unitary_exp(const CMatrix& f, double theta) {
  const auto e = eig_hermitian(f);
  return hermitian_function(e, [theta](double x) { return std::exp(cplx(0.0, -theta * x)); });
}

/// LU factorization with partial pivoting (Doolittle, in place).
class LU {
 public:
  explicit LU(CMatrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (!lu_.square()) throw DimensionMismatch("LU: matrix not square");
    const std::size_t n = lu_.rows();
    std::iota(perm_.begin(), perm_.end(), 0);
    const double scale = std::max(lu_.max_abs(), 1e-300);
    min_pivot_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > best) best = std::abs(lu_(i, k)), piv = i;
      min_pivot_ = std::min(min_pivot_, best / scale);
      if (best < tol::singular_pivot * scale) throw Singular("solve: pivot below threshold");
      if (piv != k) {
        std::swap_ranges(lu_.row_ptr(k), lu_.row_ptr(k) + n, lu_.row_ptr(piv));
        std::swap(perm_[k], perm_[piv]);
      }
      const cplx inv = 1.0 / lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        cplx& lik = lu_(i, k);
        if (lik == cplx{}) continue;
        lik *= inv;
        detail::axpy(n - k - 1, -lik, lu_.row_ptr(k) + k + 1, lu_.row_ptr(i) + k + 1);
      }
    }
  }

  /// Smallest |pivot| relative to max |entry|.
  double min_relative_pivot() const { return min_pivot_; }

  CMatrix solve(const CMatrix& b) const {
    const std::size_t n = lu_.rows();
    if (b.rows() != n) throw DimensionMismatch("solve: rhs rows != matrix size");
    CMatrix x(n, b.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = b(perm_[i], j);
    for (std::size_t c = 0; c < b.cols(); ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        cplx s = x(i, c);
        for (std::size_t k = 0; k < i; ++k) s -= lu_(i, k) * x(k, c);
        x(i, c) = s;
      }
      for (std::size_t ii = n; ii-- > 0;) {
        cplx s = x(ii, c);
        for (std::size_t k = ii + 1; k < n; ++k) s -= lu_(ii, k) * x(k, c);
        x(ii, c) = s / lu_(ii, ii);
      }
    }
    return x;
  }

 private:
  CMatrix lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
};

inline CMatrix solve(const CMatrix& a, const CMatrix& b) { return LU(a).solve(b); }

/// Singular values (descending) by one-sided Jacobi on the columns.
inline std::vector<double> singular_values(const CMatrix& m) {
  // Work on the transpose when wide so that columns >= rows is not required.
  CMatrix a = m.rows() >= m.cols() ? m : m.adjoint();
  const std::size_t r = a.rows(), n = a.cols();
  // column-major copy for cache-friendly column rotations
  std::vector<CVector> col(n, CVector(r));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j][i] = a(i, j);

  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0;
        cplx gamma = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
          alpha += std::norm(col[p][i]);
          beta += std::norm(col[q][i]);
          gamma += std::conj(col[p][i]) * col[q][i];
        }
        const double g = std::abs(gamma);
        if (g <= eps * std::sqrt(alpha * beta) || g < 1e-300) continue;
        rotated = true;
        const cplx phase = std::conj(gamma) / g;  // column q times phase makes <p,q> real
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < r; ++i) {
          const cplx ap = col[p][i], aq = col[q][i] * phase;
          col[p][i] = c * ap - s * aq;
          col[q][i] = s * ap + c * aq;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = std::sqrt(norm2(col[j]));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

/// exp(m) for a general square matrix by scaling and squaring with a
/// truncated Taylor series. Used for non-Hermitian effective propagators.
inline CMatrix expm(const CMatrix& m) {
  if (!m.square()) throw DimensionMismatch("expm: matrix not square");
  const std::size_t n = m.rows();
  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(m(i, j));
    norm1 = std::max(norm1, s);
  }
  int squarings = 0;
  if (norm1 > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.25)));
  const CMatrix a = m * cplx(std::ldexp(1.0, -squarings));
  CMatrix result = CMatrix::identity(n);
  CMatrix term = CMatrix::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = term * a;
    term *= 1.0 / k;
    result += term;
    if (term.max_abs() < 1e-18 * result.max_abs()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// a^p by binary powering.
inline CMatrix matrix_power(CMatrix a, std::uint64_t p) {
  CMatrix result = CMatrix::identity(a.rows());
  bool first = true;
  while (p) {
    if (p & 1u) {
      result = first ? a : result * a;
      first = false;
    }
    p >>= 1u;
    if (p) a = a * a;
  }
  return result;
}

}  // namespace qfb
