#pragma once

// Master-equation generators for every model variant, kept in two forms:
// a structured Lindblad form (Hamiltonian, labelled jump operators, extra
// one-sided terms) used by the trajectory code and the banded solver, and
// the dense superoperator acting on column-stacked density matrices.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfb/hilbert.hpp"
#include "qfb/linalg.hpp"

namespace qfb {

enum class ModelKind { Dicke, AdiabaticSE, HomodyneFB, JumpFB, JumpFBIneff, FullNonadiabatic };
enum class Measurement { None, Homodyne, Photodetection };
enum class GeneratorKind { CollectiveJx, LocalSigmaX, Custom };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Dicke: return "dicke";
    case ModelKind::AdiabaticSE: return "adiabatic_se";
    case ModelKind::HomodyneFB: return "homodyne_fb";
    case ModelKind::JumpFB: return "jump_fb";
    case ModelKind::JumpFBIneff: return "jump_fb_ineff";
    case ModelKind::FullNonadiabatic: return "full_nonadiabatic";
  }
  return "?";
}

struct FeedbackSpec {
  Measurement measurement = Measurement::None;
  GeneratorKind generator = GeneratorKind::LocalSigmaX;
  int target_atom = 1;  // LocalSigmaX only
  CMatrix custom;       // Custom only, Hermitian 4x4
  /// Homodyne: lambda in rate units. Photodetection: rotation angle.
  double strength = 0.0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Dicke;
  double omega = 0.0;
  double big_gamma = 1.0;  // adiabatic kinds
  double g = 0.0;          // full model
  double kappa = 0.0;      // full model
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double eta = 1.0;
  FeedbackSpec feedback;
  std::optional<std::size_t> fock_cutoff;  // full model only

  bool has_cavity() const { return kind == ModelKind::FullNonadiabatic; }
  std::size_t dim() const { return has_cavity() ? 4 * fock_cutoff.value_or(0) : 4; }
  /// Gamma = g^2/kappa for the full model, big_gamma otherwise.
  double collective_rate() const { return has_cavity() ? g * g / kappa : big_gamma; }
  /// C = Gamma/gamma when gamma1 == gamma2 > 0.
  std::optional<double> cooperativity() const {
    if (gamma1 > 0 && gamma1 == gamma2) return collective_rate() / gamma1;
    return std::nullopt;
  }
};

enum class Channel { DetectedFeedback, Undetected, Atom1SE, Atom2SE, Collective, HomodyneFeedback };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::DetectedFeedback: return "DETECTED_FEEDBACK";
    case Channel::Undetected: return "UNDETECTED";
    case Channel::Atom1SE: return "ATOM1_SE";
    case Channel::Atom2SE: return "ATOM2_SE";
    case Channel::Collective: return "COLLECTIVE";
    case Channel::HomodyneFeedback: return "HOMODYNE_FEEDBACK";
  }
  return "?";
}

/// rho -> c rho c^dagger - (c^dagger c rho + rho c^dagger c)/2, rate folded into c.
struct JumpTerm {
  Channel label;
  CMatrix op;
};

/// rho -> left * rho * right
struct Sandwich {
  CMatrix left, right;
};

struct LindbladForm {
  std::size_t dim = 0;
  std::size_t fock_cutoff = 0;  // 0 when there is no cavity factor
  CMatrix hamiltonian;
  std::vector<JumpTerm> jumps;
  std::vector<Sandwich> extra;  // terms outside Lindblad form (homodyne feedback)

  /// Every term as a sandwich A rho B.
  std::vector<Sandwich> sandwiches() const {
    const CMatrix id = CMatrix::identity(dim);
    std::vector<Sandwich> out;
    out.push_back({hamiltonian * cplx(0.0, -1.0), id});
    out.push_back({id, hamiltonian * cplx(0.0, 1.0)});
    for (const auto& j : jumps) {
      const CMatrix cd = j.op.adjoint();
      const CMatrix cdc = cd * j.op;
      out.push_back({j.op, cd});
      out.push_back({cdc * cplx(-0.5), id});
      out.push_back({id, cdc * cplx(-0.5)});
    }
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }

  /// L(rho) evaluated directly on the matrix.
  CMatrix apply(const CMatrix& rho) const {
    CMatrix out(dim, dim);
    for (const auto& s : sandwiches()) out += s.left * rho * s.right;
    return out;
  }
};

struct Superoperator {
  std::size_t dim = 0;  // Hilbert dimension d
  CMatrix matrix;       // d^2 x d^2 on column-stacked vec(rho)
};

/// Column stacking: v[col*d + row] = rho(row, col).
inline CVector vectorize(const CMatrix& rho) {
  if (!rho.square()) throw DimensionMismatch("vectorize: matrix not square");
  const std::size_t d = rho.rows();
  CVector v(d * d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r) v[c * d + r] = rho(r, c);
  return v;
}

inline CMatrix devectorize(const CVector& v, std::size_t d) {
  if (v.size() != d * d) throw DimensionMismatch("devectorize: length != d^2");
  CMatrix rho(d, d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r) rho(r, c) = v[c * d + r];
  return rho;
}

namespace detail {
struct Entry {
  std::size_t row, col;
  cplx value;
};
inline std::vector<Entry> nonzeros(const CMatrix& m) {
  std::vector<Entry> out;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != cplx{}) out.push_back({i, j, m(i, j)});
  return out;
}
/// Calls sink(row, col, value) for each nonzero of (B^T (x) A), i.e. the
/// superoperator of rho -> A rho B, in the column-stacked convention.
template <class Sink>
void for_each_sandwich_entry(const Sandwich& s, std::size_t d, Sink&& sink) {
  const auto a = nonzeros(s.left);
  const auto b = nonzeros(s.right);
  // (A rho B)_{pq} = sum A_{pr} rho_{rs} B_{sq}
  for (const auto& eb : b)
    for (const auto& ea : a) sink(eb.col * d + ea.row, eb.row * d + ea.col, ea.value * eb.value);
}
}  // namespace detail

inline Superoperator to_superoperator(const std::vector<Sandwich>& terms, std::size_t d) {
  Superoperator l{d, CMatrix(d * d, d * d)};
  for (const auto& t : terms)
    detail::for_each_sandwich_entry(t, d, [&](std::size_t r, std::size_t c, cplx v) { l.matrix(r, c) += v; });
  return l;
}

inline Superoperator to_superoperator(const LindbladForm& form) { return to_superoperator(form.sandwiches(), form.dim); }

inline Superoperator dissipator(const CMatrix& c) {
  if (!c.square()) throw DimensionMismatch("dissipator: operator not square");
  LindbladForm f{c.rows(), 0, CMatrix(c.rows(), c.rows()), {{Channel::Collective, c}}, {}};
  return to_superoperator(f);
}

inline CVector apply(const Superoperator& l, const CVector& v) { return l.matrix * v; }
inline CMatrix apply(const Superoperator& l, const CMatrix& rho) {
  return devectorize(l.matrix * vectorize(rho), l.dim);
}

/// Hermitian feedback generator acting on the two atoms.
inline CMatrix feedback_generator(const FeedbackSpec& fb) {
  const AtomicOps ops = atomic_ops();
  switch (fb.generator) {
    case GeneratorKind::CollectiveJx: return ops.j_x;
    case GeneratorKind::LocalSigmaX:
      if (fb.target_atom == 1) return ops.sigma_x1;
      if (fb.target_atom == 2) return ops.sigma_x2;
      throw InvalidSpec("feedback: target atom must be 1 or 2");
    case GeneratorKind::Custom:
      if (fb.custom.rows() != 4 || fb.custom.cols() != 4) throw InvalidSpec("feedback: custom generator must be 4x4");
      if (!fb.custom.is_hermitian(tol::hermitian)) throw InvalidSpec("feedback: custom generator not Hermitian");
      return fb.custom;
  }
  throw InvalidSpec("feedback: unknown generator");
}

/// U = exp(-i * strength * generator); the generator is not rescaled.
inline CMatrix feedback_unitary(const FeedbackSpec& fb) {
  if (fb.measurement != Measurement::Photodetection) return CMatrix::identity(4);
  return unitary_exp(feedback_generator(fb), fb.strength);
}

inline void validate(const ModelSpec& s) {
  auto nonneg = [](double x, const char* what) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidSpec(std::string("rate must be finite and >= 0: ") + what);
  };
  nonneg(s.big_gamma, "big_gamma");
  nonneg(s.gamma1, "gamma1");
  nonneg(s.gamma2, "gamma2");
  nonneg(s.g, "g");
  nonneg(s.kappa, "kappa");
  if (!std::isfinite(s.omega)) throw InvalidSpec("omega must be finite");
  if (!(s.eta >= 0.0 && s.eta <= 1.0)) throw InvalidSpec("eta must lie in [0,1]");
  if (!std::isfinite(s.feedback.strength)) throw InvalidSpec("feedback strength must be finite");
  switch (s.kind) {
    case ModelKind::Dicke:
      if (s.gamma1 != 0.0 || s.gamma2 != 0.0) throw InvalidSpec("dicke: spontaneous emission not part of this model");
      break;
    case ModelKind::AdiabaticSE: break;
    case ModelKind::HomodyneFB:
      if (s.feedback.measurement != Measurement::Homodyne) throw InvalidSpec("homodyne_fb: feedback measurement must be homodyne");
      if (s.big_gamma <= 0.0) throw InvalidSpec("homodyne_fb: Gamma must be > 0");
      break;
    case ModelKind::JumpFB:
    case ModelKind::JumpFBIneff:
      if (s.feedback.measurement == Measurement::Homodyne) throw InvalidSpec("jump feedback needs photodetection");
      break;
    case ModelKind::FullNonadiabatic:
      if (s.feedback.measurement == Measurement::Homodyne) throw InvalidSpec("full model supports photodetection feedback only");
      if (!s.fock_cutoff) throw InvalidSpec("full_nonadiabatic: fock_cutoff missing");
      if (*s.fock_cutoff < 2) throw InvalidSpec("full_nonadiabatic: fock_cutoff must be >= 2");
      if (s.kappa <= 0.0) throw InvalidSpec("full_nonadiabatic: kappa must be > 0");
      break;
  }
  if (s.feedback.measurement != Measurement::None) feedback_generator(s.feedback);
}

inline LindbladForm lindblad_form(const ModelSpec& s) {
  validate(s);
  const AtomicOps ops = atomic_ops();
  LindbladForm f;
  auto add_jump = [&f](Channel label, double rate, const CMatrix& op) {
    if (rate > 0.0) f.jumps.push_back({label, op * cplx(std::sqrt(rate))});
  };

  if (s.kind == ModelKind::FullNonadiabatic) {
    const std::size_t n = *s.fock_cutoff;
    const CavityOps cav = cavity_ops(n);
    const CMatrix a = embed_cavity(cav.a), ad = embed_cavity(cav.a_dag);
    const CMatrix jm = embed_atoms(ops.j_minus, n), jp = embed_atoms(ops.j_plus, n);
    f.dim = 4 * n;
    f.fock_cutoff = n;
    f.hamiltonian = (jp + jm) * cplx(s.omega) + (jp * a + jm * ad) * cplx(s.g);
    const CMatrix u = embed_atoms(feedback_unitary(s.feedback), n);
    add_jump(Channel::DetectedFeedback, s.eta * s.kappa, u * a);
    add_jump(Channel::Undetected, (1.0 - s.eta) * s.kappa, a);
    add_jump(Channel::Atom1SE, s.gamma1, embed_atoms(ops.sigma1, n));
    add_jump(Channel::Atom2SE, s.gamma2, embed_atoms(ops.sigma2, n));
    return f;
  }

  f.dim = 4;
  f.hamiltonian = ops.j_x * cplx(s.omega);
  const double big_gamma = s.big_gamma;
  switch (s.kind) {
    case ModelKind::Dicke:
    case ModelKind::AdiabaticSE:
      add_jump(Channel::Collective, big_gamma, ops.j_minus);
      break;
    case ModelKind::HomodyneFB: {
      add_jump(Channel::Collective, big_gamma, ops.j_minus);
      const CMatrix fop = feedback_generator(s.feedback) * cplx(s.feedback.strength);
      add_jump(Channel::HomodyneFeedback, 1.0 / big_gamma, fop);
      // -i[F, -i J- rho + i rho J+] = -F J- rho + F rho J+ + J- rho F - rho J+ F
      const CMatrix id = CMatrix::identity(4);
      f.extra.push_back({fop * ops.j_minus * cplx(-1.0), id});
      f.extra.push_back({fop, ops.j_plus});
      f.extra.push_back({ops.j_minus, fop});
      f.extra.push_back({id, ops.j_plus * fop * cplx(-1.0)});
      break;
    }
    case ModelKind::JumpFB:
      add_jump(Channel::DetectedFeedback, big_gamma, feedback_unitary(s.feedback) * ops.j_minus);
      break;
    case ModelKind::JumpFBIneff:
      add_jump(Channel::DetectedFeedback, big_gamma * s.eta, feedback_unitary(s.feedback) * ops.j_minus);
      add_jump(Channel::Undetected, big_gamma * (1.0 - s.eta), ops.j_minus);
      break;
    case ModelKind::FullNonadiabatic: break;
  }
  add_jump(Channel::Atom1SE, s.gamma1, ops.sigma1);
  add_jump(Channel::Atom2SE, s.gamma2, ops.sigma2);
  return f;
}

inline Superoperator build_liouvillian(const ModelSpec& s) { return to_superoperator(lindblad_form(s)); }

}  // namespace qfb
