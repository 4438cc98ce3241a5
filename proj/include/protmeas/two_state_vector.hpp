#pragma once

#include "protmeas/hilbert.hpp"

namespace protmeas {

inline constexpr double kMinOverlap = 1e-12;

/// Pre- and postselected description (psi forward, phi backward). Both
/// components are stored normalized; |<phi|psi>| must exceed 1e-12.
class TwoStateVector {
 public:
  TwoStateVector(StateVector forward, StateVector backward);

  const StateVector& forward() const noexcept { return forward_; }
  const StateVector& backward() const noexcept { return backward_; }
  /// <phi|psi>
  cplx overlap() const noexcept { return overlap_; }

 private:
  StateVector forward_;
  StateVector backward_;
  cplx overlap_;
};

}  // namespace protmeas
