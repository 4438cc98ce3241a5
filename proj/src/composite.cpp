#include "protmeas/composite.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

#include "protmeas/errors.hpp"

namespace protmeas::composite {

namespace {

struct FiberLayout {
  std::size_t outer;
  std::size_t n;
  std::size_t inner;
};

FiberLayout layout(std::span<const std::size_t> dims, std::size_t factor, std::size_t size) {
  if (factor >= dims.size()) throw StructuralError("composite: factor index out of range");
  if (product(dims) != size) throw StructuralError("composite: dims do not match amplitude vector");
  return {product(dims.subspan(0, factor)), dims[factor], product(dims.subspan(factor + 1))};
}

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

template <bool Forward>
void transform_fibers(CVector& amps, std::span<const std::size_t> dims, std::size_t factor) {
  const FiberLayout l = layout(dims, factor, static_cast<std::size_t>(amps.size()));
  auto& engine = fft_engine();
  const auto n = static_cast<Eigen::Index>(l.n);
  CVector in(n), out(n);
  for (std::size_t o = 0; o < l.outer; ++o)
    for (std::size_t i = 0; i < l.inner; ++i) {
      const std::size_t base = o * l.n * l.inner + i;
      for (Eigen::Index j = 0; j < n; ++j) in[j] = amps[static_cast<Eigen::Index>(base + j * l.inner)];
      if constexpr (Forward) {
        engine.fwd(out, in);
        // Unitary normalization so that norms are preserved in both representations.
        out /= std::sqrt(static_cast<double>(n));
      } else {
        engine.inv(out, in);
        out *= std::sqrt(static_cast<double>(n));
      }
      for (Eigen::Index j = 0; j < n; ++j) amps[static_cast<Eigen::Index>(base + j * l.inner)] = out[j];
    }
}

}  // namespace

void apply_system(CVector& amps, std::span<const std::size_t> dims, const CMatrix& op) {
  if (dims.empty() || static_cast<std::size_t>(op.rows()) != dims[0] || op.rows() != op.cols())
    throw StructuralError("apply_system: operator does not match system factor");
  const std::size_t rest = product(dims.subspan(1));
  if (rest * dims[0] != static_cast<std::size_t>(amps.size()))
    throw StructuralError("apply_system: dims do not match amplitude vector");
  Eigen::Map<CMatrix> m(amps.data(), static_cast<Eigen::Index>(rest), static_cast<Eigen::Index>(dims[0]));
  CMatrix updated = m * op.transpose();
  m = updated;
}

void to_momentum(CVector& amps, std::span<const std::size_t> dims, std::size_t factor) {
  transform_fibers<true>(amps, dims, factor);
}

void to_position(CVector& amps, std::span<const std::size_t> dims, std::size_t factor) {
  transform_fibers<false>(amps, dims, factor);
}

RVector marginal(const CVector& amps, std::span<const std::size_t> dims, std::size_t factor) {
  const FiberLayout l = layout(dims, factor, static_cast<std::size_t>(amps.size()));
  RVector dist = RVector::Zero(static_cast<Eigen::Index>(l.n));
  for (std::size_t o = 0; o < l.outer; ++o)
    for (std::size_t j = 0; j < l.n; ++j) {
      const std::size_t base = (o * l.n + j) * l.inner;
      dist[static_cast<Eigen::Index>(j)] +=
          amps.segment(static_cast<Eigen::Index>(base), static_cast<Eigen::Index>(l.inner)).squaredNorm();
    }
  const double total = dist.sum();
  if (!(total > 0.0)) throw NumericalIntegrityError("marginal: zero-norm composite");
  return dist / total;
}

double tail_mass(const RVector& distribution) {
  const Eigen::Index n = distribution.size();
  const Eigen::Index edge = std::max<Eigen::Index>(1, n / 16);
  return distribution.head(edge).sum() + distribution.tail(edge).sum();
}

CMatrix system_density(const CVector& amps, std::span<const std::size_t> dims) {
  const std::size_t rest = product(dims.subspan(1));
  Eigen::Map<const CMatrix> m(amps.data(), static_cast<Eigen::Index>(rest),
                              static_cast<Eigen::Index>(dims[0]));
  CMatrix rho = m.transpose() * m.conjugate();
  return 0.5 * (rho + rho.adjoint());
}

SchmidtSplit leading_schmidt(const CVector& amps, std::span<const std::size_t> dims) {
  const CMatrix rho = system_density(amps, dims);
  const double total = rho.trace().real();
  if (!(total > 0.0)) throw NumericalIntegrityError("leading_schmidt: zero-norm composite");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho);
  const Eigen::Index top = rho.rows() - 1;
  CVector u = solver.eigenvectors().col(top);
  const std::size_t rest = product(dims.subspan(1));
  Eigen::Map<const CMatrix> m(amps.data(), static_cast<Eigen::Index>(rest),
                              static_cast<Eigen::Index>(dims[0]));
  CVector r = m * u.conjugate();
  const double rn = r.norm();
  if (!(rn > 0.0)) throw NumericalIntegrityError("leading_schmidt: empty rest component");
  return SchmidtSplit{std::move(u), r / rn, solver.eigenvalues()[top] / total};
}

// ---------------------------------------------------------------------------

CouplingKernel::CouplingKernel(const Operator& observable, const Grid1D& pointer_grid)
    : grid_(pointer_grid), diagonal_(observable.is_diagonal()) {
  if (!observable.is_hermitian())
    throw ContractViolation("CouplingKernel: coupled observable must be Hermitian");
  if (diagonal_) {
    eigenvalues_ = observable.matrix().diagonal().real();
  } else {
    const Spectrum spec = spectrum(observable);
    eigenvalues_ = spec.values;
    eigenvectors_ = spec.vectors;
  }
  wavenumbers_ = grid_.wavenumbers(false);
}

void CouplingKernel::phase(CVector& amps, std::span<const std::size_t> dims, std::size_t factor,
                           double strength) const {
  if (factor == 0) throw StructuralError("CouplingKernel: pointer cannot be the system factor");
  const FiberLayout l = layout(dims, factor, static_cast<std::size_t>(amps.size()));
  if (l.n != grid_.size()) throw StructuralError("CouplingKernel: pointer grid size mismatch");
  if (static_cast<std::size_t>(eigenvalues_.size()) != dims[0])
    throw StructuralError("CouplingKernel: observable does not match system factor");

  const std::size_t rest = product(dims.subspan(1));
  const std::size_t mid = l.outer / dims[0];  // factors strictly between system and pointer
  CVector ph(static_cast<Eigen::Index>(l.n));
  for (std::size_t s = 0; s < dims[0]; ++s) {
    const double a = eigenvalues_[static_cast<Eigen::Index>(s)];
    if (a == 0.0 || strength == 0.0) continue;
    for (std::size_t j = 0; j < l.n; ++j)
      ph[static_cast<Eigen::Index>(j)] =
          std::polar(1.0, -strength * a * wavenumbers_[static_cast<Eigen::Index>(j)]);
    cplx* block = amps.data() + s * rest;
    for (std::size_t o = 0; o < mid; ++o)
      for (std::size_t j = 0; j < l.n; ++j) {
        cplx* fiber = block + (o * l.n + j) * l.inner;
        const cplx p = ph[static_cast<Eigen::Index>(j)];
        for (std::size_t i = 0; i < l.inner; ++i) fiber[i] *= p;
      }
  }
}

void CouplingKernel::apply_momentum(CVector& amps, std::span<const std::size_t> dims,
                                    std::size_t factor, double strength) const {
  if (diagonal_) {
    phase(amps, dims, factor, strength);
    return;
  }
  apply_system(amps, dims, eigenvectors_.adjoint());
  phase(amps, dims, factor, strength);
  apply_system(amps, dims, eigenvectors_);
}

void CouplingKernel::apply(CVector& amps, std::span<const std::size_t> dims, std::size_t factor,
                           double strength) const {
  to_momentum(amps, dims, factor);
  apply_momentum(amps, dims, factor, strength);
  to_position(amps, dims, factor);
}

}  // namespace protmeas::composite
