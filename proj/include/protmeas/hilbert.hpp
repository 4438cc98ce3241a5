#pragma once

// Finite-dimensional Hilbert-space foundation: pure states with tensor
// structure, dense operators, density matrices, and the dense-exponential
// evolvers every faster propagator in the library is checked against.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace protmeas {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr std::size_t kMaxCompositeDim = 8192;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kStepNormDrift = 1e-8;
inline constexpr double kDegeneracyThreshold = 1e-10;

std::size_t product(std::span<const std::size_t> dims);

/// Pure state on a tensor product of factors with dimensions `dims`.
/// Amplitude index ordering is row-major over the factors (Kronecker
/// convention): index = ((i0 * d1 + i1) * d2 + i2) ...
class StateVector {
 public:
  StateVector(std::vector<std::size_t> dims, CVector amplitudes);
  explicit StateVector(CVector amplitudes);

  static StateVector basis(std::vector<std::size_t> dims, std::size_t index);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  cplx operator[](std::size_t i) const { return amplitudes_[static_cast<Eigen::Index>(i)]; }
  double norm() const noexcept { return norm_; }

  StateVector normalized() const;
  StateVector with_dims(std::vector<std::size_t> dims) const;

  /// <this|other>
  cplx inner(const StateVector& other) const;
  /// |<this|other>|^2 for normalized inputs.
  double fidelity(const StateVector& other) const;

 private:
  std::vector<std::size_t> dims_;
  CVector amplitudes_;
  double norm_;
};

/// Dense square matrix with a Hermiticity flag that is validated on
/// construction (max |A - A^dagger| < 1e-12).
class Operator {
 public:
  Operator(CMatrix entries, bool hermitian);

  /// Builds a Hermitian operator from `m`, symmetrizing away round-off first.
  /// Throws ContractViolation if the asymmetry is larger than round-off.
  static Operator hermitian(const CMatrix& m);
  static Operator general(CMatrix m);
  static Operator identity(std::size_t dim);
  static Operator diagonal(const RVector& values);
  static Operator projector(const StateVector& psi);
  static Operator basis_projector(std::size_t dim, std::size_t index);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const CMatrix& matrix() const noexcept { return entries_; }
  bool is_hermitian() const noexcept { return hermitian_; }
  bool is_diagonal() const;

  Operator adjoint() const;
  Operator operator+(const Operator& other) const;
  Operator operator-(const Operator& other) const;
  Operator operator*(const Operator& other) const;
  Operator scaled(cplx c) const;
  Operator kron(const Operator& other) const;

  StateVector apply(const StateVector& psi) const;

 private:
  CMatrix entries_;
  bool hermitian_;
};

inline Operator operator*(double c, const Operator& op) { return op.scaled(c); }

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
struct Spectrum {
  RVector values;
  CMatrix vectors;
};
Spectrum spectrum(const Operator& hermitian_op);

/// Mixed state with tensor structure `dims`.
class DensityMatrix {
 public:
  DensityMatrix(std::vector<std::size_t> dims, CMatrix entries);
  explicit DensityMatrix(CMatrix entries);
  static DensityMatrix pure(const StateVector& psi);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const CMatrix& matrix() const noexcept { return entries_; }

  double trace() const { return entries_.trace().real(); }
  double purity() const;
  /// <psi|rho|psi>
  double fidelity(const StateVector& psi) const;

 private:
  std::vector<std::size_t> dims_;
  CMatrix entries_;
};

StateVector tensor(const StateVector& a, const StateVector& b);

/// Reduced density matrix of factor `keep` of a state with structure `dims`.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                            std::size_t keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t keep);
/// Same as partial_trace(DensityMatrix::pure(psi), keep) without forming the
/// full projector.
DensityMatrix reduced_density(const StateVector& psi, std::size_t keep);

/// exp(-i H t) as a dense matrix, from the eigen-decomposition of H.
CMatrix propagator(const Operator& hamiltonian, double t);
CMatrix propagator(const Spectrum& spec, double t);

/// exp(-i H t) psi via full eigen-decomposition.
StateVector evolve_dense(const StateVector& psi, const Operator& hamiltonian, double t);

using HamiltonianSource = std::function<Operator(double)>;

/// Product of short-time dense propagators with H sampled at each step's
/// midpoint. Second-order accurate in dt for time-dependent H; exact for
/// constant H. The state is renormalized after every step; a per-step norm
/// drift above 1e-8 raises NumericalIntegrityError.
StateVector evolve_stepped(const StateVector& psi, const HamiltonianSource& hamiltonian,
                           double t0, double t1, double dt);

/// <psi|A|psi> for Hermitian A. Throws NumericalIntegrityError if the
/// imaginary residue exceeds 1e-12 (relative to the operator scale).
double expectation(const StateVector& psi, const Operator& a);

}  // namespace protmeas
