#pragma once

// Protection mechanisms: Zeno-type repeated measurement, Hamiltonian-type
// nondegenerate-eigenstate protection, and non-Hermitian protection of a
// two-state vector.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "protmeas/hilbert.hpp"
#include "protmeas/rng.hpp"
#include "protmeas/two_state_vector.hpp"

namespace protmeas {

enum class ZenoMode { Stochastic, Nonselective };

/// Orthonormal basis of one eigenspace of a measured observable.
struct Eigenspace {
  double value;
  CMatrix basis;  // columns
};

/// Groups eigenvectors whose eigenvalues differ by less than 1e-10.
std::vector<Eigenspace> eigenspaces(const Operator& observable);

struct ZenoScheme {
  Operator observable;
  double period;
  ZenoMode mode;
  std::size_t protected_outcome;  // index into `spaces`, ascending eigenvalue
  std::vector<Eigenspace> spaces;
};

struct HamiltonianScheme {
  Operator hamiltonian;
  std::size_t protected_index;
  double gap;
};

struct EffectiveComplexScheme {
  Operator h_eff;
};

using ProtectionScheme = std::variant<ZenoScheme, HamiltonianScheme, EffectiveComplexScheme>;

/// Zeno protection of `protected_state`, which must lie in a single
/// nondegenerate eigenspace of `observable` (weight > 1 - 1e-6).
ZenoScheme make_zeno_scheme(const Operator& observable, double period, ZenoMode mode,
                            const StateVector& protected_state);

HamiltonianScheme make_hamiltonian_scheme(const Operator& hamiltonian, std::size_t protected_index);

EffectiveComplexScheme make_effective_complex_scheme(const Operator& h_eff);

/// Minimum distance between eigenvalue `index` (ascending order) and every
/// other eigenvalue. Throws ProtectionImpossible below 1e-10.
double compute_gap(const Operator& hamiltonian, std::size_t index);

/// Ground state (or eigenstate `index`) of a Hermitian operator.
StateVector eigenstate(const Operator& hamiltonian, std::size_t index = 0);

struct ZenoOutcomeLog {
  std::vector<double> times;
  std::vector<int> outcomes;
  bool survived = true;

  void record(double t, int outcome, std::size_t protected_outcome);
};

struct ZenoStepResult {
  StateVector state;
  int outcome;
};

/// One stochastic Zeno measurement of the system factor (factor 0) of
/// `composite`: samples an eigenspace with Born probabilities, projects and
/// renormalizes. Requires scheme.mode == Stochastic.
ZenoStepResult zeno_step(const StateVector& composite, const ZenoScheme& scheme, Rng& rng);

/// Nonselective Zeno measurement: rho -> sum_k (P_k ⊗ I) rho (P_k ⊗ I).
/// The reported outcome is always -1.
struct ZenoMixedStepResult {
  DensityMatrix state;
  int outcome;
};
ZenoMixedStepResult zeno_step(const DensityMatrix& composite, const ZenoScheme& scheme);

/// In-place kernels used by the measurement engines. `amps` may hold pointer
/// factors in either representation. Returns the sampled outcome.
int zeno_project(CVector& amps, const std::vector<std::size_t>& dims, const ZenoScheme& scheme,
                 Rng& rng);

/// sin^2-shaped switching envelope: 0 -> 1 over [t_on, t_on + ramp], flat,
/// 1 -> 0 over [t_off - ramp, t_off], 0 outside. C^1 continuous; integral over
/// the window is t_off - t_on - ramp.
double adiabatic_envelope(double t, double t_on, double t_off, double ramp);
/// Closed-form integral of the envelope from -inf to t.
double adiabatic_envelope_integral(double t, double t_on, double t_off, double ramp);

/// Forward state -> exp(-i H_eff t) psi, backward bra <phi| -> <phi| exp(-i H_eff t),
/// i.e. |phi> -> exp(+i H_eff^dagger t) |phi>. Both are renormalized after
/// every sub-step; sub-steps are sized so no component grows by more than e.
TwoStateVector evolve_two_state(const TwoStateVector& tsv, const EffectiveComplexScheme& scheme,
                                double t);
TwoStateVector evolve_two_state(const TwoStateVector& tsv, const ProtectionScheme& scheme, double t);

/// Calibrated Zeno survival experiment: each of round(1/epsilon) rounds
/// disturbs the protected qubit by a rotation whose weight on the orthogonal
/// complement is epsilon^2/delta^2, then performs a stochastic Zeno step.
struct SurvivalResult {
  double epsilon;
  double delta;
  std::size_t trials;
  std::size_t survived;
  double predicted;            // (1 - eps^2/delta^2)^round(1/eps)
  double branch_probability;   // exact norm^2 of the all-success branch
};
SurvivalResult zeno_survival(double epsilon, double delta, std::size_t trials, std::uint64_t seed,
                             unsigned threads = 1);

}  // namespace protmeas
