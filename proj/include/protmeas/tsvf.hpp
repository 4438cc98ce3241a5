#pragma once

// Weak values, postselection of a system ⊗ pointer composite, and the
// subensemble (postselection-binned) pointer-velocity analysis.

#include <cstddef>
#include <string>
#include <vector>

#include "protmeas/grid.hpp"
#include "protmeas/hilbert.hpp"
#include "protmeas/pointer.hpp"
#include "protmeas/protection.hpp"
#include "protmeas/rng.hpp"
#include "protmeas/two_state_vector.hpp"
#include "protmeas/weak_measurement.hpp"

namespace protmeas {

/// <phi|A|psi> / <phi|psi>.
cplx weak_value(const Operator& a, const TwoStateVector& tsv);

/// Pointer conditioned on a system outcome.
struct ConditionalPointer {
  double probability = 0.0;
  PointerReadout readout;
  double momentum_mean = 0.0;
};

/// (Pi ⊗ I) composite, reduced onto pointer factor `factor` (position
/// representation). Throws ImpossiblePostselection below probability 1e-300.
ConditionalPointer postselect(const StateVector& composite, const Operator& projector, const Grid1D& pointer_grid,
                              std::size_t factor = 1);
/// Rank-one outcome |phi><phi|.
ConditionalPointer postselect(const StateVector& composite, const StateVector& outcome,
                              const Grid1D& pointer_grid, std::size_t factor = 1);

/// Centred differences, one-sided at the ends. `times` must increase strictly.
RVector finite_difference_velocity(const std::vector<double>& times, const RVector& values);

/// Re/Im of <phi(t)|A|psi(t)> / <phi(t)|psi(t)> with psi(t) = U(t) psi0 and
/// phi(t) = U(T - t)^dagger outcome, U generated by the static H.
std::vector<cplx> weak_value_trajectory(const Operator& a, const StateVector& psi0, const StateVector& outcome,
                                        const Operator& hamiltonian, double t_final,
                                        const std::vector<double>& times);

struct SubensembleStats {
  std::string postselection_label;
  std::size_t outcome = 0;
  std::size_t count = 0;
  double probability = 0.0;       // final-time postselection probability
  double distortion = 0.0;        // outcome probability under the protected state
  std::vector<double> times;
  RVector means;                  // conditional pointer mean at each time
  RVector velocity;               // finite-difference velocity of `means`
  RVector predicted_velocity;     // g(t) Re A_w(t) from the two-state vector
  double mean_final = 0.0;
};

struct SubensembleOptions {
  Grid1D pointer_grid{128, -1.5, 2.5};
  double delta = 0.1;
  std::vector<double> sample_times;  // strictly increasing, within the coupling window
  double dt = 0.05;
  double t_final = 0.0;              // postselection time (>= last sample)
};

struct SubensembleAnalysis {
  std::vector<SubensembleStats> bins;  // empty bins omitted
  SubensembleStats aggregate;          // probability-weighted over the whole family
  RVector unconditioned;               // pointer mean without any postselection
  double backaction_metric = 0.0;      // eps^2 N with eps = strength / samples
  bool backaction_flag = false;        // metric > 0.01
};

/// Pointer read at each sample time t_i; the system then evolves freely to
/// t_final and is postselected on each member of `family`. Trial counts are
/// drawn with `rng` from the final outcome probabilities.
SubensembleAnalysis subensemble_analysis(const StateVector& psi0, const ProtectionScheme& scheme,
                                         const CouplingSpec& target, const std::vector<StateVector>& family,
                                         const std::vector<std::string>& labels, std::size_t n_trials,
                                         const SubensembleOptions& options, Rng& rng);

/// Pearson correlation.
double correlation(const RVector& a, const RVector& b);

}  // namespace protmeas
