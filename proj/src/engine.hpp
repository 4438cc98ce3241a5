#pragma once

// Internal pieces of the measurement engines shared by weak_measurement.cpp
// and tsvf.cpp. Composites are system ⊗ pointer_1 ⊗ ... with every pointer
// held in the momentum representation while the engine runs.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "protmeas/composite.hpp"
#include "protmeas/hilbert.hpp"
#include "protmeas/pointer.hpp"
#include "protmeas/weak_measurement.hpp"

namespace protmeas::detail {

/// exp(-i H(t_mid) tau) for the system factor, cached when H is static.
class SystemPropagator {
 public:
  SystemPropagator() = default;  // zero Hamiltonian
  explicit SystemPropagator(const Operator& h);
  explicit SystemPropagator(HamiltonianSource h);

  bool trivial() const noexcept { return !static_ && !source_; }
  /// Returns nullptr for the zero Hamiltonian.
  const CMatrix* get(double t_mid, double tau);

 private:
  std::optional<Spectrum> static_;
  HamiltonianSource source_;
  double cached_tau_ = 0.0;
  double cached_t_ = 0.0;
  bool have_cache_ = false;
  CMatrix cache_;
};

/// system ⊗ pointer^k, pointers converted to momentum representation.
CVector attach_pointers(const CVector& system, const PointerState& pointer, std::size_t k);

/// Strang-split integration of H(t) ⊗ I + sum_k g_k(t) A_k ⊗ p_k from t0 to
/// t1 with steps no longer than dt. kernels[k] acts on factor k + 1.
void advance_continuous(CVector& amps, const std::vector<std::size_t>& dims,
                        const std::vector<const composite::CouplingKernel*>& kernels,
                        const std::vector<const CouplingSpec*>& specs, SystemPropagator& prop, double t0,
                        double t1, double dt);

/// Position-space readout of pointer factor `factor` of a momentum-held composite.
PointerReadout readout_momentum_held(const CVector& amps, const std::vector<std::size_t>& dims,
                                     std::size_t factor, const Grid1D& grid, double time);

}  // namespace protmeas::detail
