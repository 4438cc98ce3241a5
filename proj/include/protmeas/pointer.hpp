#pragma once

// The von Neumann measuring device: a Gaussian pointer on its own grid.

#include <cstddef>
#include <string>

#include "protmeas/grid.hpp"
#include "protmeas/hilbert.hpp"

namespace protmeas {

/// Pointer wave function on `grid`, discrete-normalized, with nominal
/// position uncertainty `delta`.
class PointerState {
 public:
  PointerState(Grid1D grid, CVector amplitudes, double delta, std::string label);

  const Grid1D& grid() const noexcept { return grid_; }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  double delta() const noexcept { return delta_; }
  const std::string& label() const noexcept { return label_; }

  StateVector state() const { return StateVector(amplitudes_); }
  double fidelity(const PointerState& other) const;

  /// Rigid translation by `shift` (spectral, exact for band-limited packets).
  PointerState displaced(double shift) const;

 private:
  Grid1D grid_;
  CVector amplitudes_;
  double delta_;
  std::string label_;
};

struct PointerReadout {
  double mean = 0.0;
  double variance = 0.0;
  RVector distribution;  // probability per grid point, sums to 1
  double time = 0.0;
};

/// Normalized Gaussian centred at 0 whose |psi|^2 has standard deviation
/// `delta`. Requires delta > 3 dx and edge probabilities below 1e-12.
PointerState make_pointer(const Grid1D& grid, double delta, std::string label = "pointer");

PointerReadout readout(const PointerState& p, double time = 0.0);

/// Readout of the pointer held in factor `factor` of a composite state given
/// in the position representation (marginal over all other factors).
PointerReadout readout(const StateVector& composite, std::size_t factor, const Grid1D& grid,
                       double time = 0.0);
PointerReadout readout_distribution(const RVector& distribution, const Grid1D& grid, double time);

/// <p> computed spectrally. Throws NumericalIntegrityError if the packet has
/// wrapped into the outer 1/16 of the grid (tail mass above 1e-9).
double momentum_readout(const PointerState& p);
double momentum_readout(const StateVector& composite, std::size_t factor, const Grid1D& grid);

}  // namespace protmeas
