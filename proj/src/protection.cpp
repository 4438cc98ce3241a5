#include "protmeas/protection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "protmeas/composite.hpp"
#include "protmeas/errors.hpp"
#include "protmeas/parallel.hpp"

namespace protmeas {

TwoStateVector::TwoStateVector(StateVector forward, StateVector backward)
    : forward_(forward.normalized()), backward_(backward.normalized()), overlap_(0.0) {
  if (forward_.dim() != backward_.dim())
    throw StructuralError("TwoStateVector: forward/backward dimension mismatch");
  overlap_ = backward_.inner(forward_);
  if (!(std::abs(overlap_) > kMinOverlap))
    throw DegenerateTwoStateVector("TwoStateVector: |<phi|psi>| below 1e-12");
}

std::vector<Eigenspace> eigenspaces(const Operator& observable) {
  const Spectrum spec = spectrum(observable);
  std::vector<Eigenspace> spaces;
  const Eigen::Index n = spec.values.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && spec.values[end] - spec.values[end - 1] < kDegeneracyThreshold) ++end;
    spaces.push_back(Eigenspace{spec.values.segment(start, end - start).mean(),
                                spec.vectors.middleCols(start, end - start)});
    start = end;
  }
  return spaces;
}

ZenoScheme make_zeno_scheme(const Operator& observable, double period, ZenoMode mode,
                            const StateVector& protected_state) {
  if (!(period > 0.0)) throw ConfigurationError("ZenoScheme: period must be positive");
  if (!observable.is_hermitian()) throw ContractViolation("ZenoScheme: observable must be Hermitian");
  if (observable.dim() != protected_state.dim())
    throw StructuralError("ZenoScheme: observable does not match protected state");
  auto spaces = eigenspaces(observable);
  const StateVector psi = protected_state.normalized();
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    const double weight = (spaces[k].basis.adjoint() * psi.amplitudes()).squaredNorm();
    if (weight > 1.0 - 1e-6) {
      if (spaces[k].basis.cols() != 1)
        throw ProtectionImpossible("ZenoScheme: protected state lies in a degenerate eigenspace");
      return ZenoScheme{observable, period, mode, k, std::move(spaces)};
    }
  }
  throw ProtectionImpossible("ZenoScheme: protected state is not an eigenstate of the observable");
}

double compute_gap(const Operator& hamiltonian, std::size_t index) {
  const Spectrum spec = spectrum(hamiltonian);
  if (index >= static_cast<std::size_t>(spec.values.size()))
    throw StructuralError("compute_gap: eigenstate index out of range");
  double gap = std::numeric_limits<double>::infinity();
  const double e = spec.values[static_cast<Eigen::Index>(index)];
  for (Eigen::Index i = 0; i < spec.values.size(); ++i)
    if (static_cast<std::size_t>(i) != index) gap = std::min(gap, std::abs(spec.values[i] - e));
  if (!(gap > kDegeneracyThreshold))
    throw ProtectionImpossible("compute_gap: eigenvalue " + std::to_string(index) + " is degenerate");
  return gap;
}

StateVector eigenstate(const Operator& hamiltonian, std::size_t index) {
  const Spectrum spec = spectrum(hamiltonian);
  if (index >= static_cast<std::size_t>(spec.values.size()))
    throw StructuralError("eigenstate: index out of range");
  CVector v = spec.vectors.col(static_cast<Eigen::Index>(index));
  // Fix the global phase: largest component real and positive.
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v[imax]) / std::abs(v[imax]);
  return StateVector(std::move(v));
}

HamiltonianScheme make_hamiltonian_scheme(const Operator& hamiltonian, std::size_t protected_index) {
  if (!hamiltonian.is_hermitian())
    throw ContractViolation("HamiltonianScheme: Hamiltonian must be Hermitian");
  return HamiltonianScheme{hamiltonian, protected_index, compute_gap(hamiltonian, protected_index)};
}

EffectiveComplexScheme make_effective_complex_scheme(const Operator& h_eff) {
  return EffectiveComplexScheme{h_eff};
}

void ZenoOutcomeLog::record(double t, int outcome, std::size_t protected_outcome) {
  times.push_back(t);
  outcomes.push_back(outcome);
  if (outcome != static_cast<int>(protected_outcome)) survived = false;
}

// ---------------------------------------------------------------------------
// Zeno steps

int zeno_project(CVector& amps, const std::vector<std::size_t>& dims, const ZenoScheme& scheme,
                 Rng& rng) {
  if (scheme.mode != ZenoMode::Stochastic)
    throw ContractViolation("zeno_step: pure-state step requires stochastic mode");
  const std::size_t ns = scheme.observable.dim();
  if (dims.empty() || dims[0] != ns)
    throw StructuralError("zeno_step: observable does not act on the system factor");
  const std::size_t rest = product(std::span(dims).subspan(1));
  if (ns * rest != static_cast<std::size_t>(amps.size()))
    throw StructuralError("zeno_step: dims do not match amplitude vector");

  Eigen::Map<CMatrix> m(amps.data(), static_cast<Eigen::Index>(rest), static_cast<Eigen::Index>(ns));
  std::vector<CMatrix> blocks;
  blocks.reserve(scheme.spaces.size());
  std::vector<double> probs;
  probs.reserve(scheme.spaces.size());
  double total = 0.0;
  for (const auto& space : scheme.spaces) {
    blocks.push_back(m * space.basis.conjugate());
    probs.push_back(blocks.back().squaredNorm());
    total += probs.back();
  }
  if (!(total > 0.0)) throw NumericalIntegrityError("zeno_step: zero-norm state");

  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t k = 0;
  for (; k + 1 < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) break;
  }
  if (probs[k] / total < 1e-300)
    throw NumericalIntegrityError("zeno_step: sampled outcome has vanishing probability");
  m = blocks[k] * scheme.spaces[k].basis.transpose();
  amps /= std::sqrt(probs[k]);
  return static_cast<int>(k);
}

ZenoStepResult zeno_step(const StateVector& composite, const ZenoScheme& scheme, Rng& rng) {
  CVector amps = composite.amplitudes();
  const int outcome = zeno_project(amps, composite.dims(), scheme, rng);
  return ZenoStepResult{StateVector(composite.dims(), std::move(amps)), outcome};
}

ZenoMixedStepResult zeno_step(const DensityMatrix& composite, const ZenoScheme& scheme) {
  const auto& dims = composite.dims();
  if (dims.empty() || dims[0] != scheme.observable.dim())
    throw StructuralError("zeno_step: observable does not act on the system factor");
  const CMatrix& rho = composite.matrix();
  const Eigen::Index n = rho.rows();
  CMatrix out = CMatrix::Zero(n, n);
  for (const auto& space : scheme.spaces) {
    const CMatrix proj = space.basis * space.basis.adjoint();
    CMatrix left = rho;
    for (Eigen::Index c = 0; c < n; ++c) {
      CVector col = left.col(c);
      composite::apply_system(col, dims, proj);
      left.col(c) = col;
    }
    CMatrix both = left.adjoint();
    for (Eigen::Index c = 0; c < n; ++c) {
      CVector col = both.col(c);
      composite::apply_system(col, dims, proj);
      both.col(c) = col;
    }
    out += both;
  }
  out = 0.5 * (out + out.adjoint()).eval();
  return ZenoMixedStepResult{DensityMatrix(dims, std::move(out)), -1};
}

// ---------------------------------------------------------------------------
// Adiabatic switching

namespace {

void check_window(double t_on, double t_off, double ramp) {
  if (!(ramp >= 0.0) || !(t_on + ramp <= t_off - ramp))
    throw ConfigurationError("adiabatic_envelope: need ramp >= 0 and t_on + ramp <= t_off - ramp");
}

}  // namespace

double adiabatic_envelope(double t, double t_on, double t_off, double ramp) {
  check_window(t_on, t_off, ramp);
  if (t <= t_on || t >= t_off) return 0.0;
  if (ramp > 0.0) {
    if (t < t_on + ramp) {
      const double s = std::sin(0.5 * std::numbers::pi * (t - t_on) / ramp);
      return s * s;
    }
    if (t > t_off - ramp) {
      const double s = std::sin(0.5 * std::numbers::pi * (t_off - t) / ramp);
      return s * s;
    }
  }
  return 1.0;
}

double adiabatic_envelope_integral(double t, double t_on, double t_off, double ramp) {
  check_window(t_on, t_off, ramp);
  if (t <= t_on) return 0.0;
  const double total = t_off - t_on - ramp;
  if (t >= t_off) return total;
  const auto rising = [&](double tau) {
    return ramp > 0.0 ? 0.5 * tau - ramp / (2.0 * std::numbers::pi) * std::sin(std::numbers::pi * tau / ramp)
                      : 0.0;
  };
  if (t < t_on + ramp) return rising(t - t_on);
  if (t <= t_off - ramp) return 0.5 * ramp + (t - t_on - ramp);
  // Falling edge mirrors the rising one.
  const double remaining = t_off - t;
  return total - rising(remaining);
}

// ---------------------------------------------------------------------------
// Two-state-vector protection

TwoStateVector evolve_two_state(const TwoStateVector& tsv, const EffectiveComplexScheme& scheme,
                                double t) {
  const CMatrix& h = scheme.h_eff.matrix();
  if (static_cast<std::size_t>(h.rows()) != tsv.forward().dim())
    throw StructuralError("evolve_two_state: H_eff does not match the two-state vector");
  if (t == 0.0) return tsv;

  Eigen::ComplexEigenSolver<CMatrix> solver(h, false);
  const RVector im = solver.eigenvalues().imag();
  const double bound = std::max({im.cwiseAbs().maxCoeff(), im.maxCoeff() - im.minCoeff(), 1e-300});
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(t) * bound)));
  const double dt = t / static_cast<double>(steps);
  const CMatrix step = (h * cplx(0.0, -dt)).exp();
  const CMatrix step_adjoint = step.adjoint();

  CVector fwd = tsv.forward().amplitudes();
  CVector bwd = tsv.backward().amplitudes();
  for (std::size_t k = 0; k < steps; ++k) {
    fwd = step * fwd;
    bwd = step_adjoint * bwd;
    const double nf = fwd.norm();
    const double nb = bwd.norm();
    if (!(nf > 0.0) || !(nb > 0.0) || !std::isfinite(nf) || !std::isfinite(nb))
      throw NumericalIntegrityError("evolve_two_state: norm collapsed");
    fwd /= nf;
    bwd /= nb;
    if (!(std::abs(bwd.dot(fwd)) > kMinOverlap))
      throw DegenerateTwoStateVector("evolve_two_state: overlap collapsed below 1e-12");
  }
  return TwoStateVector(StateVector(tsv.forward().dims(), std::move(fwd)),
                        StateVector(tsv.backward().dims(), std::move(bwd)));
}

TwoStateVector evolve_two_state(const TwoStateVector& tsv, const ProtectionScheme& scheme, double t) {
  const auto* eff = std::get_if<EffectiveComplexScheme>(&scheme);
  if (eff == nullptr)
    throw ContractViolation("evolve_two_state: scheme must be of kind EffectiveComplex");
  return evolve_two_state(tsv, *eff, t);
}

// ---------------------------------------------------------------------------
// Survival statistics

SurvivalResult zeno_survival(double epsilon, double delta, std::size_t trials, std::uint64_t seed,
                             unsigned threads) {
  if (!(epsilon > 0.0) || !(delta > 0.0))
    throw ConfigurationError("zeno_survival: epsilon and delta must be positive");
  const double failure = epsilon * epsilon / (delta * delta);
  if (!(failure < 1.0)) throw ConfigurationError("zeno_survival: epsilon^2/delta^2 must be < 1");
  const auto rounds = static_cast<std::size_t>(std::llround(1.0 / epsilon));

  // Protected qubit |0>, Zeno measurement of the projector onto |1>.
  const StateVector up = StateVector::basis({2}, 0);
  const ZenoScheme scheme = make_zeno_scheme(Operator::basis_projector(2, 1), 1.0, ZenoMode::Stochastic, up);
  const double c = std::sqrt(1.0 - failure);
  const double s = std::sqrt(failure);
  CMatrix kick(2, 2);
  kick << c, -s, s, c;

  // Exact weight of the branch in which every Zeno step succeeds.
  const CMatrix keep = scheme.spaces[scheme.protected_outcome].basis *
                       scheme.spaces[scheme.protected_outcome].basis.adjoint();
  CVector branch = up.amplitudes();
  double log_prob = 0.0;
  for (std::size_t r = 0; r < rounds; ++r) {
    branch = keep * (kick * branch);
    const double n = branch.norm();
    log_prob += 2.0 * std::log(n);
    branch /= n;
  }

  const Rng root(seed);
  std::vector<unsigned char> alive(trials, 0);
  parallel_for(trials, threads, [&](std::size_t trial) {
    Rng rng = root.split(trial);
    CVector amps = up.amplitudes();
    const std::vector<std::size_t> dims{2};
    for (std::size_t r = 0; r < rounds; ++r) {
      amps = kick * amps;
      if (zeno_project(amps, dims, scheme, rng) != static_cast<int>(scheme.protected_outcome)) return;
    }
    alive[trial] = 1;
  });

  SurvivalResult result;
  result.epsilon = epsilon;
  result.delta = delta;
  result.trials = trials;
  result.survived = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
  result.predicted = std::pow(1.0 - failure, static_cast<double>(rounds));
  result.branch_probability = std::exp(log_prob);
  return result;
}

}  // namespace protmeas
