#pragma once

// von Neumann weak coupling and the protective-measurement protocol.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "protmeas/grid.hpp"
#include "protmeas/hilbert.hpp"
#include "protmeas/pointer.hpp"
#include "protmeas/protection.hpp"
#include "protmeas/rng.hpp"

namespace protmeas {

enum class ScheduleKind { Impulsive, Continuous };

/// Weak coupling of one system observable to its own pointer.
/// Impulsive: `pulses` kicks of strength `strength` each.
/// Continuous: rate g(t) = g0 * adiabatic_envelope(t, t_on, t_off, ramp) with
/// g0 chosen so that the time integral of g equals `strength`.
struct CouplingSpec {
  Operator observable;
  double strength = 0.0;
  ScheduleKind schedule = ScheduleKind::Impulsive;
  std::size_t pulses = 1;
  double t_on = 0.0;
  double t_off = 0.0;
  double ramp = 0.0;
  std::string label;

  double peak_rate() const;
  double rate(double t) const;
  /// Integral of g over [t0, t1].
  double integrated(double t0, double t1) const;
  /// Total pointer kick over the whole schedule.
  double total_strength() const;
  void validate() const;
};

/// N = round(1/epsilon) pulses unless `pulses` is given.
CouplingSpec impulsive_coupling(Operator observable, double epsilon, std::size_t pulses = 0,
                                std::string label = {});
CouplingSpec continuous_coupling(Operator observable, double strength, double t_on, double t_off,
                                 double ramp, std::string label = {});

/// One coupling exp(-i g A ⊗ p) on pointer factor `factor` (position
/// representation). A acts on factor 0.
StateVector couple_weak(const StateVector& composite, const CouplingSpec& spec, const Grid1D& pointer_grid,
                        double g, std::size_t factor = 1);
DensityMatrix couple_weak(const DensityMatrix& composite, const CouplingSpec& spec,
                          const Grid1D& pointer_grid, double g, std::size_t factor = 1);

struct RunOptions {
  Grid1D pointer_grid{128, -1.5, 2.5};
  double delta = 0.1;
  /// Pointer readouts per target, evenly spread over its schedule (last one at the end).
  std::size_t samples = 10;
  /// Continuous schedules: maximal time step of the split-operator integrator.
  double dt = 0.05;
  /// Zeno runs: restart a failed batch up to this many times.
  std::size_t max_retries = 0;
  /// Cap on targets measured simultaneously (0 = as many as fit under the composite limit).
  std::size_t max_targets_per_batch = 0;
  /// Unprotected runs: free system Hamiltonian applied between pulses / during coupling.
  std::optional<Operator> free_hamiltonian;
  /// Unprotected impulsive runs: time between pulses.
  double pulse_interval = 0.01;
  /// Hamiltonian runs: overrides the scheme's static Hamiltonian with H(t).
  HamiltonianSource hamiltonian_of_t;
};

struct ProtectiveRunRecord {
  std::string label;
  std::vector<PointerReadout> pointer_trace;
  std::optional<ZenoOutcomeLog> zeno_log;
  double final_system_fidelity = 0.0;
  bool survived = true;
  std::size_t attempts = 1;
  /// Weight of the leading Schmidt component when the system was handed on.
  double handoff_weight = 1.0;
  /// Final pointer mean divided by the total coupling strength.
  double estimate = 0.0;
};

/// Measures every target on one system. Targets are grouped into batches that
/// fit under the composite dimension cap; within a batch all pointers are
/// coupled simultaneously. `scheme` absent means unprotected evolution.
/// Failure of a Zeno run is reported through `survived`, never thrown.
/// A psi0 with several factors is treated as one system factor.
std::vector<ProtectiveRunRecord> run_protective_measurement(const StateVector& psi0,
                                                            const std::optional<ProtectionScheme>& scheme,
                                                            const std::vector<CouplingSpec>& targets,
                                                            const RunOptions& options, Rng& rng);

/// j = Im(psi* dpsi/dx) for the continuum wave function psi = amps / sqrt(dx).
double local_current(const Grid1D& grid, const StateVector& psi, std::size_t index);
RVector current_density(const Grid1D& grid, const StateVector& psi);

/// Phase recovered by integrating j / rho where rho > 1e-6 max(rho). Points
/// outside the mask are NaN; each connected region starts at phase 0.
struct PhaseReconstruction {
  RVector phase;
  std::vector<bool> defined;
  std::vector<int> region;  // -1 where undefined
};
PhaseReconstruction reconstruct_phase(const Grid1D& grid, const StateVector& psi,
                                      double mask_fraction = 1e-6);

struct TrackingWindow {
  double t_start;
  double t_end;
  std::vector<double> estimate;   // per target: pointer increment / integrated coupling
  std::vector<double> reference;  // per target: <A> in the instantaneous eigenstate at mid-window
  double error;                   // max over targets |estimate - reference|
};

struct TrackingRecord {
  std::vector<TrackingWindow> windows;
  std::vector<ProtectiveRunRecord> runs;
  double adiabaticity = 0.0;  // min over time of gap^2 / max_n |<n|dH/dt|k>|
  double max_error = 0.0;
  std::vector<std::string> warnings;
};

/// Continuous protective measurement under a slowly varying H(t) whose
/// eigenstate `protected_index` is tracked. Pointer increments over `windows`
/// equal intervals give snapshots of <A_i>(t).
TrackingRecord track_nonstationary(const StateVector& psi0, const HamiltonianSource& hamiltonian,
                                   std::size_t protected_index, const std::vector<CouplingSpec>& targets,
                                   std::size_t windows, const RunOptions& options, Rng& rng);

/// gap(t)^2 / max_{n != k} |<n|dH/dt|k>| minimized over `samples` times in [t0, t1].
double adiabaticity(const HamiltonianSource& hamiltonian, std::size_t index, double t0, double t1,
                    std::size_t samples = 41);

}  // namespace protmeas
