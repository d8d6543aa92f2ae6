#include <gtest/gtest.h>

#include "qfb/hilbert.hpp"
#include "support.hpp"

using namespace qfb;
using test::max_diff;

namespace {
double vec_diff(const CVector& a, const CVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
CVector scaled(CVector v, cplx s) {
  for (auto& x : v) x *= s;
  return v;
}
}  // namespace

TEST(AtomicOps, SigmaConventions) {
  const auto ops = atomic_ops();
  // sigma1 |eg> = |gg>, sigma2 |ge> = |gg>
  EXPECT_LT(vec_diff(ops.sigma1 * atom_state(basis::eg), atom_state(basis::gg)), 1e-15);
  EXPECT_LT(vec_diff(ops.sigma2 * atom_state(basis::ge), atom_state(basis::gg)), 1e-15);
  EXPECT_LT(vec_diff(ops.sigma1 * atom_state(basis::ge), CVector(4)), 1e-15);
}

TEST(AtomicOps, AntisymmetricStateIsDark) {
  const auto ops = atomic_ops();
  EXPECT_LT(vec_diff(ops.j_minus * bell4(), CVector(4)), 1e-15);
  EXPECT_LT(vec_diff((ops.j_plus + ops.j_minus) * bell4(), CVector(4)), 1e-15);
}

TEST(AtomicOps, LoweringFromDoublyExcited) {
  const auto ops = atomic_ops();
  EXPECT_LT(vec_diff(ops.j_minus * atom_state(basis::ee), scaled(angular_state(2), std::sqrt(2.0))), 1e-15);
  CVector sum(4);
  sum[basis::ge] = 1.0;
  sum[basis::eg] = 1.0;
  EXPECT_LT(vec_diff(ops.j_minus * atom_state(basis::ee), sum), 1e-15);
}

TEST(AtomicOps, CollectiveOperatorIdentities) {
  const auto ops = atomic_ops();
  EXPECT_LT(max_diff(ops.j_plus, ops.j_minus.adjoint()), 0.0 + 1e-15);
  EXPECT_LT(max_diff(ops.j_x, ops.j_minus + ops.j_plus), 1e-15);
  const CMatrix jm3 = ops.j_minus * ops.j_minus * ops.j_minus;
  EXPECT_EQ(jm3.max_abs(), 0.0);
  // J+J- expanded element-wise from sigma products
  const CMatrix expanded = ops.sigma1_plus * ops.sigma1 + ops.sigma1_plus * ops.sigma2 + ops.sigma2_plus * ops.sigma1 +
                           ops.sigma2_plus * ops.sigma2;
  EXPECT_LT(max_diff(ops.j_plus * ops.j_minus, expanded), 1e-15);
  // explicit entries: J+J- = |ee><ee|*2 + (|ge>+|eg>)(<ge|+<eg|)
  CMatrix explicit_jpjm(4, 4);
  explicit_jpjm(basis::ee, basis::ee) = 2.0;
  for (auto i : {basis::ge, basis::eg})
    for (auto j : {basis::ge, basis::eg}) explicit_jpjm(i, j) = 1.0;
  EXPECT_LT(max_diff(ops.j_plus * ops.j_minus, explicit_jpjm), 1e-15);
}

TEST(CavityOps, LadderAction) {
  const auto c = cavity_ops(5);
  CVector vac(5), three(5);
  vac[0] = 1.0;
  three[3] = 1.0;
  EXPECT_LT(vec_diff(c.a * vac, CVector(5)), 1e-15);
  CVector expect(5);
  expect[2] = std::sqrt(3.0);
  EXPECT_LT(vec_diff(c.a * three, expect), 1e-15);
  EXPECT_LT(max_diff(c.a_dag, c.a.adjoint()), 1e-15);
}

TEST(CavityOps, TruncatedCommutator) {
  const std::size_t n = 6;
  const auto c = cavity_ops(n);
  const CMatrix comm = commutator(c.a, c.a_dag);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double expect = i != j ? 0.0 : i + 1 < n ? 1.0 : 1.0 - static_cast<double>(n);
      EXPECT_NEAR(std::abs(comm(i, j) - expect), 0.0, 1e-12);
    }
}

TEST(CavityOps, CutoffTooSmall) {
  EXPECT_THROW(cavity_ops(1), CutoffTooSmall);
  EXPECT_NO_THROW(cavity_ops(2));
}

TEST(Embedding, AtomAndCavityFactorsCommute) {
  std::mt19937_64 rng(1);
  const std::size_t n = 4;
  const CMatrix atom = embed_atoms(test::random_matrix(rng, 4, 4), n);
  const CMatrix cav = embed_cavity(test::random_matrix(rng, n, n));
  EXPECT_LT(commutator(atom, cav).max_abs(), 1e-12);
}

TEST(AngularBasis, Unitary) {
  const CMatrix b = angular_basis();
  EXPECT_LT(max_diff(b * b.adjoint(), CMatrix::identity(4)), 1e-14);
}

TEST(AngularBasis, GroundMapsToFirst) {
  const CMatrix a = to_angular(CMatrix::projector(atom_state(basis::gg)));
  CMatrix expect(4, 4);
  expect(0, 0) = 1.0;
  EXPECT_LT(max_diff(a, expect), 1e-15);
}

TEST(AngularBasis, SingleExcitationSplitsEvenly) {
  const CMatrix a = to_angular(CMatrix::projector(atom_state(basis::ge)));
  EXPECT_NEAR(a(1, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(3, 3).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(1, 3).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(3, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(0, 0).real() + a(2, 2).real(), 0.0, 1e-15);
}

TEST(AngularBasis, RoundTripAndSpectrum) {
  std::mt19937_64 rng(2);
  const CMatrix rho = test::random_density(rng, 4);
  EXPECT_LT(max_diff(from_angular(to_angular(rho)), rho), 1e-14);
  const auto e1 = eig_hermitian(rho).values, e2 = eig_hermitian(to_angular(rho)).values;
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e1[i], e2[i], 1e-12);
}

TEST(AngularBasis, SymmetricIsometry) {
  const CMatrix p = symmetric_isometry();
  EXPECT_LT(max_diff(p.adjoint() * p, CMatrix::identity(3)), 1e-15);
  // its complement is |4>
  const CMatrix proj = p * p.adjoint() + CMatrix::projector(bell4());
  EXPECT_LT(max_diff(proj, CMatrix::identity(4)), 1e-15);
}

TEST(PartialTrace, ProductState) {
  std::mt19937_64 rng(3);
  const std::size_t n = 3;
  const CMatrix atoms = test::random_density(rng, 4);
  CMatrix vac(n, n);
  vac(0, 0) = 1.0;
  EXPECT_LT(max_diff(partial_trace_cavity(kron(atoms, vac), n), atoms), 1e-15);
}

TEST(PartialTrace, SchmidtState) {
  const std::size_t n = 3;
  CVector psi(4 * n);
  psi[basis::gg * n + 0] = 1.0 / std::sqrt(2.0);
  psi[basis::ee * n + 1] = 1.0 / std::sqrt(2.0);
  const CMatrix r = partial_trace_cavity(CMatrix::projector(psi), n);
  CMatrix expect(4, 4);
  expect(0, 0) = 0.5;
  expect(3, 3) = 0.5;
  EXPECT_LT(max_diff(r, expect), 1e-15);
}

TEST(PartialTrace, TraceAndPositivity) {
  std::mt19937_64 rng(4);
  const std::size_t n = 5;
  const CMatrix rho = test::random_density(rng, 4 * n);
  const CMatrix r = partial_trace_cavity(rho, n);
  EXPECT_NEAR(std::abs(r.trace() - rho.trace()), 0.0, 1e-12);
  EXPECT_GE(eig_hermitian(r).values.front(), -1e-12);
  // linearity
  const CMatrix rho2 = test::random_density(rng, 4 * n);
  EXPECT_LT(max_diff(partial_trace_cavity(rho + rho2 * cplx(0.3), n), r + partial_trace_cavity(rho2, n) * cplx(0.3)), 1e-14);
}

TEST(PartialTrace, DimensionMismatch) {
  EXPECT_THROW(partial_trace_cavity(CMatrix::identity(10), 3), DimensionMismatch);
}
