#pragma once

// Monte-Carlo wave-function unraveling of the jump-feedback models.
//
// Between jumps the state evolves under exp(-i H_eff t), with
// H_eff = H - (i/2) sum_k c_k^dagger c_k. Time is counted in integer ticks
// of sample_dt / 2^K, and propagators for 2^j ticks are precomputed, so the
// waiting time for ||psi||^2 to reach the drawn threshold r is located by a
// binary descent to one tick without any time-stepping error.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qfb/entangle.hpp"
#include "qfb/liouville.hpp"
#include "qfb/parallel.hpp"

namespace qfb {

inline constexpr std::string_view kRngName = "mt19937_64(splitmix64(seed))";

/// splitmix64 finalizer; decorrelates consecutive integer seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class TrajectoryRng {
 public:
  explicit TrajectoryRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  /// Uniform in (0, 1) with 53 random bits.
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

 private:
  std::mt19937_64 engine_;
};

struct JumpChannel {
  Channel label;
  CMatrix jump_operator;
  CMatrix rate_operator;  // c^dagger c
};

struct JumpEvent {
  double time;
  Channel channel;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<CVector> states;
  std::vector<JumpEvent> jumps;
};

struct TrajectoryOptions {
  /// Ticks per sample interval = 2^ticks_log2.
  unsigned ticks_log2 = 20;
  /// Abort when the population of the highest Fock state exceeds this.
  double cutoff_population = 1e-6;
};

inline std::vector<JumpChannel> jump_channels(const LindbladForm& form) {
  std::vector<JumpChannel> out;
  for (const auto& j : form.jumps) out.push_back({j.label, j.op, j.op.adjoint() * j.op});
  return out;
}

/// Sample times 0, dt, 2 dt, ... up to t_final (a shorter last interval is
/// kept if t_final is not a multiple of dt).
inline std::vector<double> sample_grid(double t_final, double sample_dt) {
  if (!(t_final >= 0.0) || !(sample_dt > 0.0)) throw InvalidSpec("time grid: need t_final >= 0 and sample_dt > 0");
  const auto full = static_cast<std::size_t>(std::floor(t_final / sample_dt + 1e-9));
  std::vector<double> t;
  for (std::size_t k = 0; k <= full; ++k) t.push_back(static_cast<double>(k) * sample_dt);
  if (t_final - t.back() > 1e-9 * sample_dt) t.push_back(t_final);
  return t;
}

/// Mean photon number of a pure composite state; 0 without a cavity.
inline double photon_number(const CVector& psi, std::size_t fock_cutoff) {
  if (fock_cutoff == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) s += static_cast<double>(i % fock_cutoff) * std::norm(psi[i]);
  return s;
}

/// Atomic reduced density matrix of a pure state.
inline CMatrix atomic_state(const CVector& psi, std::size_t fock_cutoff) {
  const CMatrix rho = CMatrix::projector(psi);
  return fock_cutoff == 0 ? rho : partial_trace_cavity(rho, fock_cutoff);
}

inline CVector pure_state_of(const CMatrix& rho0) {
  if (!rho0.is_density_matrix(1e-8)) throw NonPureInitial("initial state is not a density matrix");
  const auto e = eig_hermitian(rho0);
  if (std::abs(e.values.back() - 1.0) > 1e-9) throw NonPureInitial("initial state is mixed");
  CVector psi(rho0.rows());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = e.vectors(i, psi.size() - 1);
  return psi;
}

/// Shared, immutable setup for all trajectories of one (spec, sample_dt).
class TrajectorySimulator {
 public:
  TrajectorySimulator(const ModelSpec& spec, double sample_dt, const TrajectoryOptions& opts = {})
      : opts_(opts), sample_dt_(sample_dt) {
    if (spec.kind != ModelKind::JumpFB && spec.kind != ModelKind::JumpFBIneff && spec.kind != ModelKind::FullNonadiabatic)
      throw InvalidModel("trajectories need a jump-feedback model");
    if (!(sample_dt > 0.0)) throw InvalidSpec("sample_dt must be > 0");
    if (opts.ticks_log2 > 40) throw InvalidSpec("ticks_log2 too large");
    form_ = lindblad_form(spec);
    channels_ = jump_channels(form_);
    CMatrix h_eff = form_.hamiltonian;
    for (const auto& c : channels_) h_eff -= c.rate_operator * cplx(0.0, 0.5);
    h_eff_ = h_eff;
    tick_ = sample_dt / std::ldexp(1.0, static_cast<int>(opts.ticks_log2));
    powers_.push_back(expm(h_eff * cplx(0.0, -tick_)));
    for (unsigned k = 1; k <= opts.ticks_log2 + 1; ++k) powers_.push_back(powers_.back() * powers_.back());
  }

  const LindbladForm& form() const { return form_; }
  const std::vector<JumpChannel>& channels() const { return channels_; }
  const CMatrix& effective_hamiltonian() const { return h_eff_; }
  double tick() const { return tick_; }
  std::size_t fock_cutoff() const { return form_.fock_cutoff; }

  /// Runs one trajectory; observer(sample_index, time, normalized psi) is
  /// called at every sample time, on_jump(JumpEvent, normalized psi) right
  /// after every jump.
  template <class Observer, class OnJump>
  void run(const CVector& psi0, const std::vector<double>& times, std::uint64_t seed, Observer&& observer,
           OnJump&& on_jump) const {
    if (psi0.size() != form_.dim) throw DimensionMismatch("trajectory: initial state dimension");
    TrajectoryRng rng(seed);
    CVector psi = psi0;
    normalize(psi);
    double r = rng.uniform();
    emit(observer, 0, times.front(), psi);
    const std::uint64_t per_sample = std::uint64_t{1} << opts_.ticks_log2;
    for (std::size_t s = 1; s < times.size(); ++s) {
      const double span = times[s] - times[s - 1];
      std::uint64_t remaining = static_cast<std::uint64_t>(std::llround(span / sample_dt_ * static_cast<double>(per_sample)));
      const double t0 = times[s - 1];
      std::uint64_t done = 0;
      while (remaining > 0) {
        unsigned b = 63 - static_cast<unsigned>(__builtin_clzll(remaining));
        if (b >= powers_.size()) b = static_cast<unsigned>(powers_.size() - 1);
        CVector cand = powers_[b] * psi;
        if (norm2(cand) >= r) {
          psi = std::move(cand);
          done += std::uint64_t{1} << b;
          remaining -= std::uint64_t{1} << b;
          continue;
        }
        // the threshold is crossed inside this chunk: descend to one tick
        for (unsigned j = b; j-- > 0;) {
          cand = powers_[j] * psi;
          if (norm2(cand) >= r) {
            psi = std::move(cand);
            done += std::uint64_t{1} << j;
            remaining -= std::uint64_t{1} << j;
          }
        }
        psi = powers_[0] * psi;
        done += 1;
        remaining -= 1;
        const Channel c = jump(psi, rng);
        on_jump(JumpEvent{t0 + static_cast<double>(done) * tick_, c}, static_cast<const CVector&>(psi));
        r = rng.uniform();
      }
      CVector out = psi;
      normalize(out);
      check_cutoff(out);
      emit(observer, s, times[s], out);
    }
  }

  TrajectoryRecord simulate(const CVector& psi0, double t_final, std::uint64_t seed) const {
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.times = sample_grid(t_final, sample_dt_);
    rec.states.reserve(rec.times.size());
    run(
        psi0, rec.times, seed, [&](std::size_t, double, const CVector& psi) { rec.states.push_back(psi); },
        [&](const JumpEvent& e, const CVector&) { rec.jumps.push_back(e); });
    return rec;
  }

 private:
  static void normalize(CVector& v) {
    const double n = std::sqrt(norm2(v));
    for (auto& x : v) x /= n;
  }

  template <class Observer>
  static void emit(Observer& observer, std::size_t index, double t, const CVector& psi) {
    observer(index, t, psi);
  }

  void check_cutoff(const CVector& psi) const {
    const std::size_t n = form_.fock_cutoff;
    if (n == 0) return;
    double top = 0.0;
    for (std::size_t a = 0; a < 4; ++a) top += std::norm(psi[a * n + n - 1]);
    if (top > opts_.cutoff_population)
      throw CutoffSaturated("trajectory: population of the highest Fock state is " + std::to_string(top));
  }

  Channel jump(CVector& psi, TrajectoryRng& rng) const {
    std::vector<double> weights;
    std::vector<CVector> images;
    double total = 0.0;
    for (const auto& c : channels_) {
      images.push_back(c.jump_operator * psi);
      weights.push_back(norm2(images.back()));
      total += weights.back();
    }
    const double u = rng.uniform() * total;
    std::size_t k = 0;
    double acc = weights[0];
    while (k + 1 < weights.size() && !(u < acc)) acc += weights[++k];
    while (weights[k] == 0.0 && k > 0) --k;
    psi = std::move(images[k]);
    normalize(psi);
    return channels_[k].label;
  }

  TrajectoryOptions opts_;
  double sample_dt_;
  LindbladForm form_;
  std::vector<JumpChannel> channels_;
  CMatrix h_eff_;
  double tick_ = 0.0;
  std::vector<CMatrix> powers_;  // exp(-i H_eff 2^j tick)
};

inline TrajectoryRecord simulate_trajectory(const ModelSpec& spec, const CMatrix& rho0, double t_final, double sample_dt,
                                            std::uint64_t seed, const TrajectoryOptions& opts = {}) {
  const TrajectorySimulator sim(spec, sample_dt, opts);
  return sim.simulate(pure_state_of(rho0), t_final, seed);
}

struct EnsemblePoint {
  double time = 0.0;
  CMatrix rho;  // mean of |psi><psi| on the full space
  double concurrence = 0.0;
  double photon_number = 0.0;
};

struct EnsembleOptions {
  unsigned jobs = 1;
  /// Trajectories per partial sum; fixed so results do not depend on jobs.
  std::size_t block = 16;
  TrajectoryOptions trajectory;
};

/// rho_bar(t) over trajectories with seeds base_seed + i. Partial sums over
/// blocks of consecutive indices are combined in index order.
inline std::vector<EnsemblePoint> ensemble_average(const ModelSpec& spec, const CMatrix& rho0, double t_final,
                                                   double sample_dt, std::size_t n_traj, std::uint64_t base_seed,
                                                   const EnsembleOptions& opts = {}) {
  if (n_traj < 1) throw InvalidSpec("ensemble_average: n_traj must be >= 1");
  const TrajectorySimulator sim(spec, sample_dt, opts.trajectory);
  const CVector psi0 = pure_state_of(rho0);
  const auto times = sample_grid(t_final, sample_dt);
  const std::size_t d = sim.form().dim, nt = times.size();
  const std::size_t block = std::max<std::size_t>(1, opts.block);
  const std::size_t n_blocks = (n_traj + block - 1) / block;
  const std::size_t wave = std::max<std::size_t>(1, opts.jobs);

  std::vector<CMatrix> total(nt, CMatrix(d, d));
  for (std::size_t first = 0; first < n_blocks; first += wave) {
    const std::size_t count = std::min(wave, n_blocks - first);
    std::vector<std::vector<CMatrix>> partial(count, std::vector<CMatrix>(nt, CMatrix(d, d)));
    parallel_for(count, opts.jobs, [&](std::size_t w) {
      const std::size_t b = first + w;
      for (std::size_t i = b * block; i < std::min(n_traj, (b + 1) * block); ++i)
        sim.run(
            psi0, times, base_seed + i,
            [&](std::size_t s, double, const CVector& psi) {
              CMatrix& acc = partial[w][s];
              for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = 0; q < d; ++q) acc(p, q) += psi[p] * std::conj(psi[q]);
            },
            [](const JumpEvent&, const CVector&) {});
    });
    for (std::size_t w = 0; w < count; ++w)
      for (std::size_t s = 0; s < nt; ++s) total[s] += partial[w][s];
  }

  std::vector<EnsemblePoint> out(nt);
  const std::size_t nf = sim.fock_cutoff();
  for (std::size_t s = 0; s < nt; ++s) {
    out[s].time = times[s];
    out[s].rho = total[s] * cplx(1.0 / static_cast<double>(n_traj));
    const CMatrix atoms = nf == 0 ? out[s].rho : partial_trace_cavity(out[s].rho, nf);
    out[s].concurrence = concurrence(0.5 * (atoms + atoms.adjoint()));
    double n = 0.0;
    if (nf > 0)
      for (std::size_t i = 0; i < d; ++i) n += static_cast<double>(i % nf) * out[s].rho(i, i).real();
    out[s].photon_number = n;
  }
  return out;
}

}  // namespace qfb
