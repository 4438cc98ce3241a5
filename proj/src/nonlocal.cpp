#include "protmeas/nonlocal.hpp"

#include <cmath>
#include <numbers>

#include "protmeas/errors.hpp"

namespace protmeas {

namespace {

CMatrix pauli_x() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0;
  return m;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Measures the {0,1}-valued observable `op`; returns the bit and projects psi.
int measure_bit(CVector& psi, const CMatrix& op, Rng& rng, double& prob) {
  const CMatrix p1 = op;
  const CMatrix p0 = CMatrix::Identity(op.rows(), op.cols()) - op;
  CVector v0 = p0 * psi;
  CVector v1 = p1 * psi;
  const double q0 = v0.squaredNorm();
  const double q1 = v1.squaredNorm();
  const double total = q0 + q1;
  const int bit = rng.uniform() * total < q0 ? 0 : 1;
  const double q = bit == 0 ? q0 : q1;
  if (q / total < 1e-300) throw NumericalIntegrityError("nondemolition_measure: vanishing outcome");
  psi = (bit == 0 ? v0 : v1) / std::sqrt(q);
  prob *= q / total;
  return bit;
}

}  // namespace

ModularObservable modular_sum(ModularBase base) {
  CMatrix op;
  if (base == ModularBase::Z) {
    op = CMatrix::Zero(4, 4);
    op(1, 1) = op(2, 2) = 1.0;
  } else {
    // In the x basis, parity of two bits is (1 - sx ⊗ sx) / 2.
    op = 0.5 * (CMatrix::Identity(4, 4) - kron(pauli_x(), pauli_x()));
  }
  return ModularObservable{base, Operator(op, true)};
}

const BellBasis& bell_basis() {
  static const BellBasis basis = [] {
    const double r = std::numbers::sqrt2 / 2.0;
    auto make = [r](double a00, double a01, double a10, double a11) {
      CVector v(4);
      v << a00 * r, a01 * r, a10 * r, a11 * r;
      return StateVector({2, 2}, v);
    };
    return BellBasis{{make(1, 0, 0, 1), make(1, 0, 0, -1), make(0, 1, 1, 0), make(0, 1, -1, 0)},
                     {"Phi+", "Phi-", "Psi+", "Psi-"}};
  }();
  return basis;
}

std::size_t bell_index(int z_bit, int x_bit) {
  if ((z_bit != 0 && z_bit != 1) || (x_bit != 0 && x_bit != 1))
    throw ContractViolation("bell_index: bits must be 0 or 1");
  return static_cast<std::size_t>(2 * z_bit + x_bit);
}

NondemolitionResult nondemolition_measure(const StateVector& psi, Rng& rng) {
  if (psi.dim() != 4) throw StructuralError("nondemolition_measure: needs a two-qubit state");
  static const ModularObservable mz = modular_sum(ModularBase::Z);
  static const ModularObservable mx = modular_sum(ModularBase::X);
  CVector v = psi.normalized().amplitudes();
  double prob = 1.0;
  const int z = measure_bit(v, mz.op.matrix(), rng, prob);
  const int x = measure_bit(v, mx.op.matrix(), rng, prob);
  return NondemolitionResult{z, x, StateVector({2, 2}, std::move(v)), prob};
}

StateVector swap_mode_to_spins(cplx alpha, cplx beta) {
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > kNormTolerance)
    throw ContractViolation("swap_mode_to_spins: |alpha|^2 + |beta|^2 must be 1");
  CVector v = CVector::Zero(4);
  v[0] = alpha;
  v[3] = beta;
  return StateVector({2, 2}, std::move(v));
}

Operator bell_protection_observable() {
  return modular_sum(ModularBase::Z).op + 2.0 * modular_sum(ModularBase::X).op;
}

}  // namespace protmeas
