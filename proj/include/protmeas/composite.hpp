#pragma once

// Kernels for composite states system (factor 0) ⊗ pointer_1 ⊗ ... ⊗ pointer_K.
//
// All kernels work in place on the raw amplitude vector. Pointer factors can
// be held in either the position or the momentum (DFT) representation; the
// von Neumann coupling exp(-i g A ⊗ p) is diagonal in the latter, and every
// system-only operation commutes with the change of representation.

#include <cstddef>
#include <span>
#include <vector>

#include "protmeas/grid.hpp"
#include "protmeas/hilbert.hpp"

namespace protmeas::composite {

/// (op ⊗ I) amps, where op acts on factor 0.
void apply_system(CVector& amps, std::span<const std::size_t> dims, const CMatrix& op);

/// DFT (or inverse DFT) along `factor` for every fiber of the composite.
void to_momentum(CVector& amps, std::span<const std::size_t> dims, std::size_t factor);
void to_position(CVector& amps, std::span<const std::size_t> dims, std::size_t factor);

/// Marginal probability distribution of `factor` (normalized to 1).
RVector marginal(const CVector& amps, std::span<const std::size_t> dims, std::size_t factor);

/// Probability mass in the outer 1/16 of `factor`'s grid at each end.
double tail_mass(const RVector& distribution);
inline constexpr double kMaxTailMass = 1e-9;

/// Reduced density matrix of factor 0, unnormalized input allowed.
CMatrix system_density(const CVector& amps, std::span<const std::size_t> dims);

/// Best product approximation across the system | rest cut: returns the
/// dominant eigenvector of the reduced system state, its weight, and the
/// rest-of-composite vector <u| ⊗ I |amps> normalized.
struct SchmidtSplit {
  CVector system;
  CVector rest;
  double weight;
};
SchmidtSplit leading_schmidt(const CVector& amps, std::span<const std::size_t> dims);

/// Precomputed von Neumann coupling exp(-i g A ⊗ p_pointer) for one system
/// observable A and one pointer grid.
class CouplingKernel {
 public:
  CouplingKernel(const Operator& observable, const Grid1D& pointer_grid);

  const Grid1D& pointer_grid() const noexcept { return grid_; }
  bool diagonal() const noexcept { return diagonal_; }

  /// Composite must hold `factor` in the momentum representation.
  void apply_momentum(CVector& amps, std::span<const std::size_t> dims, std::size_t factor,
                      double strength) const;
  /// Composite in the position representation.
  void apply(CVector& amps, std::span<const std::size_t> dims, std::size_t factor,
             double strength) const;

 private:
  void phase(CVector& amps, std::span<const std::size_t> dims, std::size_t factor,
             double strength) const;

  Grid1D grid_;
  bool diagonal_;
  RVector eigenvalues_;
  CMatrix eigenvectors_;
  RVector wavenumbers_;
};

}  // namespace protmeas::composite
