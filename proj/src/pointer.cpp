#include "protmeas/pointer.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "protmeas/composite.hpp"
#include "protmeas/errors.hpp"

namespace protmeas {

namespace {

void check_tails(const RVector& dist, const char* where) {
  const double tail = composite::tail_mass(dist);
  if (tail > composite::kMaxTailMass)
    throw NumericalIntegrityError(std::string(where) + ": pointer tail mass " + std::to_string(tail) +
                                  " exceeds 1e-9 (periodic wrap-around)");
}

}  // namespace

PointerState::PointerState(Grid1D grid, CVector amplitudes, double delta, std::string label)
    : grid_(std::move(grid)), amplitudes_(std::move(amplitudes)), delta_(delta), label_(std::move(label)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != grid_.size())
    throw StructuralError("PointerState: amplitude length does not match grid");
  if (!(delta_ > 0.0)) throw ConfigurationError("PointerState: delta must be positive");
  if (std::abs(amplitudes_.norm() - 1.0) > kNormTolerance)
    throw ContractViolation("PointerState: amplitudes not normalized");
}

double PointerState::fidelity(const PointerState& other) const {
  if (!(grid_ == other.grid_)) throw StructuralError("PointerState::fidelity: different grids");
  return std::norm(amplitudes_.dot(other.amplitudes_));
}

PointerState PointerState::displaced(double shift) const {
  const RVector k = grid_.wavenumbers(false);
  CVector f = spectral::fft(amplitudes_);
  for (Eigen::Index j = 0; j < f.size(); ++j) f[j] *= std::polar(1.0, -k[j] * shift);
  CVector out = spectral::ifft(f);
  out /= out.norm();
  return PointerState(grid_, std::move(out), delta_, label_);
}

PointerState make_pointer(const Grid1D& grid, double delta, std::string label) {
  if (!(delta > 3.0 * grid.dx()))
    throw ConfigurationError("make_pointer: delta " + std::to_string(delta) +
                             " is not resolvable (needs delta > 3 dx = " + std::to_string(3.0 * grid.dx()) +
                             ")");
  CVector amps(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    amps[static_cast<Eigen::Index>(i)] = std::exp(-x * x / (4.0 * delta * delta));
  }
  amps /= amps.norm();
  const double edge = std::max(std::norm(amps[0]), std::norm(amps[amps.size() - 1]));
  if (edge > 1e-12)
    throw ConfigurationError("make_pointer: Gaussian tails too large at grid edges (" +
                             std::to_string(edge) + ")");
  return PointerState(grid, std::move(amps), delta, std::move(label));
}

PointerReadout readout_distribution(const RVector& distribution, const Grid1D& grid, double time) {
  const RVector x = grid.points();
  PointerReadout r;
  r.distribution = distribution / distribution.sum();
  r.mean = r.distribution.dot(x);
  const RVector centred = (x.array() - r.mean).matrix();
  r.variance = std::max(0.0, r.distribution.dot(centred.cwiseAbs2()));
  r.time = time;
  return r;
}

PointerReadout readout(const PointerState& p, double time) {
  return readout_distribution(p.amplitudes().cwiseAbs2(), p.grid(), time);
}

PointerReadout readout(const StateVector& composite, std::size_t factor, const Grid1D& grid,
                       double time) {
  if (factor >= composite.dims().size() || composite.dims()[factor] != grid.size())
    throw StructuralError("readout: pointer factor does not match grid");
  return readout_distribution(composite::marginal(composite.amplitudes(), composite.dims(), factor),
                              grid, time);
}

double momentum_readout(const PointerState& p) {
  return momentum_readout(p.state(), 0, p.grid());
}

double momentum_readout(const StateVector& composite, std::size_t factor, const Grid1D& grid) {
  if (factor >= composite.dims().size() || composite.dims()[factor] != grid.size())
    throw StructuralError("momentum_readout: pointer factor does not match grid");
  check_tails(composite::marginal(composite.amplitudes(), composite.dims(), factor), "momentum_readout");
  CVector amps = composite.amplitudes();
  composite::to_momentum(amps, composite.dims(), factor);
  const RVector pk = composite::marginal(amps, composite.dims(), factor);
  return pk.dot(grid.wavenumbers(false));
}

}  // namespace protmeas
