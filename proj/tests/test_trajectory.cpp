#include <gtest/gtest.h>

#include <numbers>

#include "qfb/propagate.hpp"
#include "qfb/steady.hpp"
#include "qfb/trajectory.hpp"
#include "support.hpp"

using namespace qfb;
using test::max_diff;

namespace {

ModelSpec jump_local(double omega, double lambda) {
  ModelSpec s;
  s.kind = ModelKind::JumpFB;
  s.omega = omega;
  s.feedback.measurement = Measurement::Photodetection;
  s.feedback.generator = GeneratorKind::LocalSigmaX;
  s.feedback.strength = lambda;
  return s;
}

ModelSpec noisy(double omega, double lambda) {
  ModelSpec s = jump_local(omega, lambda);
  s.kind = ModelKind::JumpFBIneff;
  s.eta = 0.5;
  s.gamma1 = s.gamma2 = 0.2;
  return s;
}

/// Atom 1 decays at rate gamma1 and nothing else happens.
ModelSpec single_decay(double gamma1) {
  ModelSpec s;
  s.kind = ModelKind::JumpFBIneff;
  s.big_gamma = 0.0;
  s.gamma1 = gamma1;
  return s;
}

CMatrix ground() { return CMatrix::projector(atom_state(basis::gg)); }

}  // namespace

TEST(Rng, SplitmixReferenceValues) {
  // first outputs of the reference splitmix64 generator seeded with 0
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(splitmix64(0x9E3779B97F4A7C15ull), 0x6E789E6AA1B965F4ull);
}

TEST(Rng, UniformInOpenUnitInterval) {
  TrajectoryRng rng(42);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, SeedsAreDecorrelated) {
  TrajectoryRng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.uniform() == b.uniform();
  EXPECT_EQ(equal, 0);
}

TEST(SampleGrid, RegularAndRaggedEnd) {
  const auto t = sample_grid(1.0, 0.25);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t.back(), 1.0);
  const auto r = sample_grid(1.1, 0.25);
  ASSERT_EQ(r.size(), 6u);
  EXPECT_DOUBLE_EQ(r.back(), 1.1);
  EXPECT_THROW(sample_grid(1.0, 0.0), InvalidSpec);
}

TEST(Trajectory, RejectsModelsWithoutJumpFeedback) {
  ModelSpec dicke;
  EXPECT_THROW(TrajectorySimulator(dicke, 0.1), InvalidModel);
  ModelSpec hom;
  hom.kind = ModelKind::HomodyneFB;
  hom.feedback.measurement = Measurement::Homodyne;
  EXPECT_THROW(TrajectorySimulator(hom, 0.1), InvalidModel);
}

TEST(Trajectory, RejectsMixedInitialState) {
  EXPECT_THROW(simulate_trajectory(jump_local(0.5, 1.0), CMatrix::identity(4) * cplx(0.25), 1.0, 0.1, 1), NonPureInitial);
}

TEST(Trajectory, SameSeedSameRecord) {
  const auto a = simulate_trajectory(noisy(0.6, 1.0), ground(), 20.0, 0.05, 7);
  const auto b = simulate_trajectory(noisy(0.6, 1.0), ground(), 20.0, 0.05, 7);
  ASSERT_EQ(a.jumps.size(), b.jumps.size());
  ASSERT_GT(a.jumps.size(), 0u);
  for (std::size_t i = 0; i < a.jumps.size(); ++i) {
    EXPECT_EQ(a.jumps[i].time, b.jumps[i].time);
    EXPECT_EQ(a.jumps[i].channel, b.jumps[i].channel);
  }
  for (std::size_t i = 0; i < a.states.size(); ++i)
    for (std::size_t k = 0; k < 4; ++k) ASSERT_EQ(a.states[i][k], b.states[i][k]);
  const auto c = simulate_trajectory(noisy(0.6, 1.0), ground(), 20.0, 0.05, 8);
  bool differs = c.jumps.size() != a.jumps.size();
  for (std::size_t i = 0; !differs && i < a.jumps.size(); ++i) differs = a.jumps[i].time != c.jumps[i].time;
  EXPECT_TRUE(differs);
}

TEST(Trajectory, StatesStayNormalized) {
  const auto rec = simulate_trajectory(noisy(0.6, 1.0), ground(), 10.0, 0.1, 3);
  ASSERT_EQ(rec.states.size(), rec.times.size());
  for (const auto& psi : rec.states) EXPECT_NEAR(norm2(psi), 1.0, 1e-12);
}

TEST(Trajectory, DarkStateNeverJumps) {
  const auto rec = simulate_trajectory(jump_local(0.8, 1.0), CMatrix::projector(bell4()), 50.0, 0.5, 11);
  EXPECT_TRUE(rec.jumps.empty());
  for (const auto& psi : rec.states) EXPECT_NEAR(std::abs(inner(bell4(), psi)), 1.0, 1e-12);
}

TEST(Trajectory, LocalFeedbackTrapsInBell4) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rec = simulate_trajectory(jump_local(0.5, 1.0), ground(), 200.0, 1.0, seed);
    EXPECT_NEAR(std::abs(inner(bell4(), rec.states.back())), 1.0, 1e-9) << "seed " << seed;
    for (const auto& j : rec.jumps) EXPECT_EQ(j.channel, Channel::DetectedFeedback);
  }
}

TEST(Trajectory, WaitingTimeIsExponential) {
  // one excited atom decaying at rate 0.7: jump times ~ Exp(0.7)
  const TrajectorySimulator sim(single_decay(0.7), 0.25);
  const CVector psi0 = atom_state(basis::eg);
  const int n = 4000;
  double sum = 0.0;
  int before_one = 0;
  for (int i = 0; i < n; ++i) {
    const auto rec = sim.simulate(psi0, 40.0, 1000 + i);
    ASSERT_EQ(rec.jumps.size(), 1u);
    EXPECT_EQ(rec.jumps[0].channel, Channel::Atom1SE);
    sum += rec.jumps[0].time;
    before_one += rec.jumps[0].time < 1.0;
    EXPECT_NEAR(std::abs(rec.states.back()[basis::gg]), 1.0, 1e-12);
  }
  const double mean = sum / n, expect = 1.0 / 0.7;
  EXPECT_NEAR(mean, expect, 5.0 * expect / std::sqrt(n));
  const double p = 1.0 - std::exp(-0.7);
  EXPECT_NEAR(static_cast<double>(before_one) / n, p, 5.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Trajectory, SurvivalMatchesNoJumpNorm) {
  // P(no jump before t) = ||exp(-i H_eff t) psi0||^2
  const ModelSpec spec = jump_local(0.9, 2.0);
  const TrajectorySimulator sim(spec, 0.1);
  const CVector psi0 = atom_state(basis::gg);
  const double t = 1.5;
  const double survival = norm2(expm(sim.effective_hamiltonian() * cplx(0.0, -t)) * psi0);
  const int n = 3000;
  int none = 0;
  for (int i = 0; i < n; ++i) {
    const auto rec = sim.simulate(psi0, t, 500 + i);
    none += rec.jumps.empty();
  }
  EXPECT_NEAR(static_cast<double>(none) / n, survival, 5.0 * std::sqrt(survival * (1 - survival) / n));
}

TEST(Trajectory, StationaryJumpRate) {
  const ModelSpec spec = noisy(0.6, 1.0);
  const LindbladForm form = lindblad_form(spec);
  const CMatrix rho_ss = steady_state_unique(form);
  double rate = 0.0;
  for (const auto& c : jump_channels(form)) rate += (c.rate_operator * rho_ss).trace().real();
  const TrajectorySimulator sim(spec, 0.5);
  const double t_burn = 10.0, t_end = 110.0;
  std::size_t count = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    const auto rec = sim.simulate(atom_state(basis::gg), t_end, 77 + i);
    for (const auto& j : rec.jumps) count += j.time > t_burn;
  }
  const double expected = rate * (t_end - t_burn) * n;
  // jumps are positively correlated in time; allow a generous 6 sigma of a Poisson count
  EXPECT_NEAR(static_cast<double>(count), expected, 6.0 * std::sqrt(expected));
}

TEST(Ensemble, MatchesMasterEquation) {
  const ModelSpec spec = noisy(0.6, 1.0);
  const auto ens = ensemble_average(spec, ground(), 4.0, 0.25, 1500, 9);
  const auto me = propagate_me(build_liouvillian(spec), ground(), sample_grid(4.0, 0.25));
  ASSERT_EQ(ens.size(), me.size());
  double worst = 0.0;
  for (std::size_t s = 0; s < me.size(); ++s) worst = std::max(worst, trace_distance(ens[s].rho, me[s]));
  EXPECT_LT(worst, 0.05);
}

TEST(Ensemble, IndependentOfThreadCount) {
  const ModelSpec spec = noisy(0.6, 1.0);
  EnsembleOptions one, three;
  three.jobs = 3;
  const auto a = ensemble_average(spec, ground(), 2.0, 0.5, 70, 5, one);
  const auto b = ensemble_average(spec, ground(), 2.0, 0.5, 70, 5, three);
  for (std::size_t s = 0; s < a.size(); ++s) {
    EXPECT_EQ(max_diff(a[s].rho, b[s].rho), 0.0);
    EXPECT_EQ(a[s].concurrence, b[s].concurrence);
  }
}

TEST(FullModelTrajectory, PhotonNumberAndReducedState) {
  ModelSpec s = jump_local(2.0, 1.0);
  s.kind = ModelKind::FullNonadiabatic;
  s.g = 3.0;
  s.kappa = 10.0;
  s.eta = 0.8;
  s.fock_cutoff = 6;
  const CMatrix rho0 = CMatrix::projector(composite_state(atom_state(basis::gg), 0, 6));
  const auto rec = simulate_trajectory(s, rho0, 3.0, 0.1, 4);
  for (const auto& psi : rec.states) {
    const CMatrix atoms = atomic_state(psi, 6);
    EXPECT_NEAR(atoms.trace().real(), 1.0, 1e-12);
    EXPECT_GE(photon_number(psi, 6), 0.0);
    EXPECT_LT(photon_number(psi, 6), 5.0);
  }
  for (const auto& j : rec.jumps) EXPECT_TRUE(j.channel == Channel::DetectedFeedback || j.channel == Channel::Undetected);
}

TEST(FullModelTrajectory, SaturatedCutoffIsReported) {
  ModelSpec s = jump_local(40.0, 1.0);
  s.kind = ModelKind::FullNonadiabatic;
  s.g = 20.0;
  s.kappa = 1.0;
  s.fock_cutoff = 2;
  const CMatrix rho0 = CMatrix::projector(composite_state(atom_state(basis::gg), 0, 2));
  EXPECT_THROW(simulate_trajectory(s, rho0, 1.0, 0.1, 1), CutoffSaturated);
}

TEST(PhotonNumber, FockStateAndAtomsOnly) {
  EXPECT_DOUBLE_EQ(photon_number(composite_state(atom_state(basis::ee), 3, 5), 5), 3.0);
  EXPECT_DOUBLE_EQ(photon_number(atom_state(basis::ee), 0), 0.0);
}
