#include "protmeas/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "protmeas/errors.hpp"

namespace protmeas {

namespace {

double hermitian_defect(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

std::string dims_string(std::span<const std::size_t> dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

}  // namespace

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(std::vector<std::size_t> dims, CVector amplitudes)
    : dims_(std::move(dims)), amplitudes_(std::move(amplitudes)) {
  if (dims_.empty()) throw StructuralError("StateVector: empty dimension list");
  for (auto d : dims_)
    if (d == 0) throw StructuralError("StateVector: zero factor dimension");
  if (product(dims_) != static_cast<std::size_t>(amplitudes_.size()))
    throw StructuralError("StateVector: amplitude length " + std::to_string(amplitudes_.size()) +
                          " does not match dims " + dims_string(dims_));
  norm_ = amplitudes_.norm();
}

StateVector::StateVector(CVector amplitudes)
    : dims_{static_cast<std::size_t>(amplitudes.size())}, amplitudes_(std::move(amplitudes)) {
  if (dims_[0] == 0) throw StructuralError("StateVector: zero factor dimension");
  norm_ = amplitudes_.norm();
}

StateVector StateVector::basis(std::vector<std::size_t> dims, std::size_t index) {
  const std::size_t n = product(dims);
  if (index >= n) throw StructuralError("StateVector::basis: index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVector(std::move(dims), std::move(v));
}

StateVector StateVector::normalized() const {
  if (!(norm_ > 0.0) || !std::isfinite(norm_))
    throw NumericalIntegrityError("StateVector::normalized: zero or non-finite norm");
  return StateVector(dims_, amplitudes_ / norm_);
}

StateVector StateVector::with_dims(std::vector<std::size_t> dims) const {
  return StateVector(std::move(dims), amplitudes_);
}

cplx StateVector::inner(const StateVector& other) const {
  if (dim() != other.dim()) throw StructuralError("StateVector::inner: dimension mismatch");
  return amplitudes_.dot(other.amplitudes_);  // conjugates the left operand
}

double StateVector::fidelity(const StateVector& other) const { return std::norm(inner(other)); }

// ---------------------------------------------------------------------------
// Operator

Operator::Operator(CMatrix entries, bool hermitian)
    : entries_(std::move(entries)), hermitian_(hermitian) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
    throw StructuralError("Operator: matrix must be square and non-empty");
  if (hermitian_) {
    const double defect = hermitian_defect(entries_);
    if (!(defect < kHermitianTolerance)) {
      std::ostringstream os;
      os << "Operator: flagged Hermitian but max|A - A^dagger| = " << defect;
      throw ContractViolation(os.str());
    }
  }
}

Operator Operator::hermitian(const CMatrix& m) {
  if (m.rows() != m.cols()) throw StructuralError("Operator::hermitian: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double defect = hermitian_defect(m);
  if (defect > 1e-10 * scale)
    throw ContractViolation("Operator::hermitian: matrix is not Hermitian (defect " +
                            std::to_string(defect) + ")");
  CMatrix sym = 0.5 * (m + m.adjoint());
  return Operator(std::move(sym), true);
}

Operator Operator::general(CMatrix m) { return Operator(std::move(m), false); }

Operator Operator::identity(std::size_t dim) {
  return Operator(CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)),
                  true);
}

Operator Operator::diagonal(const RVector& values) {
  return Operator(values.cast<cplx>().asDiagonal().toDenseMatrix(), true);
}

Operator Operator::projector(const StateVector& psi) {
  const StateVector n = psi.normalized();
  CMatrix p = n.amplitudes() * n.amplitudes().adjoint();
  return Operator::hermitian(p);
}

Operator Operator::basis_projector(std::size_t dim, std::size_t index) {
  if (index >= dim) throw StructuralError("Operator::basis_projector: index out of range");
  CMatrix p = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  p(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return Operator(std::move(p), true);
}

bool Operator::is_diagonal() const {
  const auto n = entries_.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && entries_(i, j) != cplx(0.0, 0.0)) return false;
  return true;
}

Operator Operator::adjoint() const { return Operator(entries_.adjoint(), hermitian_); }

Operator Operator::operator+(const Operator& other) const {
  if (dim() != other.dim()) throw StructuralError("Operator::+: dimension mismatch");
  if (hermitian_ && other.hermitian_) return Operator::hermitian(entries_ + other.entries_);
  return Operator(entries_ + other.entries_, false);
}

Operator Operator::operator-(const Operator& other) const {
  if (dim() != other.dim()) throw StructuralError("Operator::-: dimension mismatch");
  if (hermitian_ && other.hermitian_) return Operator::hermitian(entries_ - other.entries_);
  return Operator(entries_ - other.entries_, false);
}

Operator Operator::operator*(const Operator& other) const {
  if (dim() != other.dim()) throw StructuralError("Operator::*: dimension mismatch");
  return Operator(entries_ * other.entries_, false);
}

Operator Operator::scaled(cplx c) const {
  const bool herm = hermitian_ && c.imag() == 0.0;
  return Operator(entries_ * c, herm);
}

Operator Operator::kron(const Operator& other) const {
  const auto na = entries_.rows();
  const auto nb = other.entries_.rows();
  CMatrix k(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) k.block(i * nb, j * nb, nb, nb) = entries_(i, j) * other.entries_;
  if (hermitian_ && other.hermitian_) return Operator::hermitian(k);
  return Operator(std::move(k), false);
}

StateVector Operator::apply(const StateVector& psi) const {
  if (psi.dim() != dim()) throw StructuralError("Operator::apply: dimension mismatch");
  return StateVector(psi.dims(), entries_ * psi.amplitudes());
}

Spectrum spectrum(const Operator& op) {
  if (!op.is_hermitian()) throw ContractViolation("spectrum: operator is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix());
  if (solver.info() != Eigen::Success)
    throw NumericalIntegrityError("spectrum: eigen-decomposition failed");
  return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(std::vector<std::size_t> dims, CMatrix entries)
    : dims_(std::move(dims)), entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
    throw StructuralError("DensityMatrix: matrix must be square and non-empty");
  if (product(dims_) != static_cast<std::size_t>(entries_.rows()))
    throw StructuralError("DensityMatrix: dims " + dims_string(dims_) + " do not match matrix size");
  if (!(hermitian_defect(entries_) < kHermitianTolerance))
    throw ContractViolation("DensityMatrix: not Hermitian within 1e-12");
  if (std::abs(trace() - 1.0) > kNormTolerance)
    throw ContractViolation("DensityMatrix: trace " + std::to_string(trace()) + " != 1");
  // Positivity check is O(n^3); skip it for large composites.
  if (entries_.rows() <= 1024) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(entries_, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -kNormTolerance)
      throw ContractViolation("DensityMatrix: negative eigenvalue");
  }
}

DensityMatrix::DensityMatrix(CMatrix entries)
    : DensityMatrix(std::vector<std::size_t>{static_cast<std::size_t>(entries.rows())},
                    std::move(entries)) {}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  const StateVector n = psi.normalized();
  CMatrix rho = n.amplitudes() * n.amplitudes().adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(n.dims(), std::move(rho));
}

double DensityMatrix::purity() const {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return entries_.squaredNorm();
}

double DensityMatrix::fidelity(const StateVector& psi) const {
  if (psi.dim() != dim()) throw StructuralError("DensityMatrix::fidelity: dimension mismatch");
  return psi.amplitudes().dot(entries_ * psi.amplitudes()).real();
}

// ---------------------------------------------------------------------------
// Composition

StateVector tensor(const StateVector& a, const StateVector& b) {
  std::vector<std::size_t> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  CVector out(na * nb);
  for (Eigen::Index i = 0; i < na; ++i) out.segment(i * nb, nb) = a.amplitudes()[i] * b.amplitudes();
  return StateVector(std::move(dims), std::move(out)).normalized();
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                            std::size_t keep) {
  if (product(dims) != rho.dim())
    throw StructuralError("partial_trace: dims " + dims_string(dims) +
                          " do not match density matrix of dimension " + std::to_string(rho.dim()));
  if (keep >= dims.size()) throw StructuralError("partial_trace: keep index out of range");

  const std::size_t nk = dims[keep];
  const std::size_t inner = product(dims.subspan(keep + 1));
  const std::size_t outer = product(dims.subspan(0, keep));
  const CMatrix& m = rho.matrix();

  CMatrix reduced = CMatrix::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nk));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in)
      for (std::size_t a = 0; a < nk; ++a)
        for (std::size_t b = 0; b < nk; ++b) {
          const auto row = static_cast<Eigen::Index>((o * nk + a) * inner + in);
          const auto col = static_cast<Eigen::Index>((o * nk + b) * inner + in);
          reduced(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += m(row, col);
        }
  reduced = 0.5 * (reduced + reduced.adjoint()).eval();
  return DensityMatrix(std::vector<std::size_t>{nk}, std::move(reduced));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t keep) {
  return partial_trace(rho, rho.dims(), keep);
}

DensityMatrix reduced_density(const StateVector& psi, std::size_t keep) {
  const auto& dims = psi.dims();
  if (keep >= dims.size()) throw StructuralError("reduced_density: keep index out of range");
  const std::size_t nk = dims[keep];
  const std::size_t inner = product(std::span(dims).subspan(keep + 1));
  const std::size_t outer = product(std::span(dims).subspan(0, keep));
  const StateVector n = psi.normalized();

  CMatrix reduced = CMatrix::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nk));
  for (std::size_t o = 0; o < outer; ++o) {
    // Block for this outer index: rows = inner, cols = kept factor.
    Eigen::Map<const CMatrix> block(n.amplitudes().data() + o * nk * inner,
                                    static_cast<Eigen::Index>(inner), static_cast<Eigen::Index>(nk));
    reduced.noalias() += block.transpose() * block.conjugate();
  }
  reduced = 0.5 * (reduced + reduced.adjoint()).eval();
  return DensityMatrix(std::vector<std::size_t>{nk}, std::move(reduced));
}

// ---------------------------------------------------------------------------
// Evolution

CMatrix propagator(const Spectrum& spec, double t) {
  const CVector phases =
      (spec.values.cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
  return spec.vectors * phases.asDiagonal() * spec.vectors.adjoint();
}

CMatrix propagator(const Operator& hamiltonian, double t) {
  if (!hamiltonian.is_hermitian()) throw ContractViolation("propagator: Hamiltonian is not Hermitian");
  return propagator(spectrum(hamiltonian), t);
}

StateVector evolve_dense(const StateVector& psi, const Operator& hamiltonian, double t) {
  if (!hamiltonian.is_hermitian())
    throw ContractViolation("evolve_dense: Hamiltonian is not Hermitian");
  if (hamiltonian.dim() != psi.dim()) throw StructuralError("evolve_dense: dimension mismatch");
  if (t == 0.0) return psi;
  const Spectrum spec = spectrum(hamiltonian);
  CVector coeffs = spec.vectors.adjoint() * psi.amplitudes();
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    coeffs[i] *= std::exp(cplx(0.0, -spec.values[i] * t));
  CVector out = spec.vectors * coeffs;
  const double drift = std::abs(out.norm() - psi.norm());
  if (drift > kStepNormDrift)
    throw NumericalIntegrityError("evolve_dense: norm drift " + std::to_string(drift));
  return StateVector(psi.dims(), std::move(out));
}

StateVector evolve_stepped(const StateVector& psi, const HamiltonianSource& hamiltonian, double t0,
                           double t1, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("evolve_stepped: dt must be positive");
  const double span = t1 - t0;
  if (span == 0.0) return psi;
  const auto steps = static_cast<std::size_t>(std::ceil(std::abs(span) / dt - 1e-9));
  const double h = span / static_cast<double>(steps);

  CVector state = psi.amplitudes();
  const double target_norm = psi.norm();
  for (std::size_t k = 0; k < steps; ++k) {
    const double t_mid = t0 + (static_cast<double>(k) + 0.5) * h;
    const Operator hk = hamiltonian(t_mid);
    if (!hk.is_hermitian())
      throw ContractViolation("evolve_stepped: Hamiltonian is not Hermitian at t = " +
                              std::to_string(t_mid));
    if (hk.dim() != psi.dim()) throw StructuralError("evolve_stepped: dimension mismatch");
    const Spectrum spec = spectrum(hk);
    CVector coeffs = spec.vectors.adjoint() * state;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
      coeffs[i] *= std::exp(cplx(0.0, -spec.values[i] * h));
    state.noalias() = spec.vectors * coeffs;
    const double n = state.norm();
    if (std::abs(n - target_norm) > kStepNormDrift)
      throw NumericalIntegrityError("evolve_stepped: norm drift " +
                                    std::to_string(std::abs(n - target_norm)) + " at step " +
                                    std::to_string(k));
    state *= target_norm / n;
  }
  return StateVector(psi.dims(), std::move(state));
}

double expectation(const StateVector& psi, const Operator& a) {
  if (!a.is_hermitian()) throw ContractViolation("expectation: operator is not Hermitian");
  if (a.dim() != psi.dim()) throw StructuralError("expectation: dimension mismatch");
  const cplx value = psi.amplitudes().dot(a.matrix() * psi.amplitudes()) / (psi.norm() * psi.norm());
  const double scale = std::max(1.0, a.matrix().cwiseAbs().maxCoeff());
  if (std::abs(value.imag()) > kHermitianTolerance * scale)
    throw NumericalIntegrityError("expectation: imaginary residue " + std::to_string(value.imag()));
  return value.real();
}

}  // namespace protmeas
