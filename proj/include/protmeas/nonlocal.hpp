#pragma once

// Two-qubit nonlocal states: Bell basis, modular-sum observables and their
// nondemolition measurement, and the spin encoding of a two-mode
// superposition. Spin convention: up -> bit 0, down -> bit 1, basis index
// 2 * s_A + s_B.

#include <array>
#include <cstddef>
#include <string>

#include "protmeas/hilbert.hpp"
#include "protmeas/rng.hpp"

namespace protmeas {

enum class ModularBase { Z, X };

struct ModularObservable {
  ModularBase base;
  Operator op;  // eigenvalues {0, 1}
};

/// (s_A + s_B) mod 2 in the chosen single-qubit basis.
ModularObservable modular_sum(ModularBase base);

/// Phi+, Phi-, Psi+, Psi- in that order.
struct BellBasis {
  std::array<StateVector, 4> states;
  std::array<std::string, 4> labels;
};
const BellBasis& bell_basis();

/// Bell index identified by the (z, x) modular-sum bits.
std::size_t bell_index(int z_bit, int x_bit);

struct NondemolitionResult {
  int z_bit;
  int x_bit;
  StateVector post_state;
  double probability;  // of the sampled outcome pair
};

/// Projective measurement of modular_sum(Z) and then modular_sum(X).
NondemolitionResult nondemolition_measure(const StateVector& psi, Rng& rng);

/// alpha |up up> + beta |down down>.
StateVector swap_mode_to_spins(cplx alpha, cplx beta);

/// Z_mod + 2 X_mod: every Bell state is a nondegenerate eigenstate, so it can
/// serve as a Zeno observable protecting any one of them.
Operator bell_protection_observable();

}  // namespace protmeas
