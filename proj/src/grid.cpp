#include "protmeas/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "protmeas/errors.hpp"

namespace protmeas {

Grid1D::Grid1D(std::size_t n_points, double x_min, double x_max)
    : n_(n_points), x_min_(x_min), x_max_(x_max) {
  if (n_points < 8) throw ConfigurationError("Grid1D: n_points must be >= 8");
  if (!(x_min < x_max)) throw ConfigurationError("Grid1D: x_min must be < x_max");
  dx_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  if (!(dx_ > 0.0)) throw ConfigurationError("Grid1D: non-positive spacing");
}

RVector Grid1D::points() const {
  RVector p(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) p[static_cast<Eigen::Index>(i)] = x(i);
  return p;
}

std::size_t Grid1D::nearest_index(double x) const {
  const double r = std::round((x - x_min_) / dx_);
  return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(n_ - 1)));
}

RVector Grid1D::wavenumbers(bool zero_nyquist) const {
  const auto n = static_cast<Eigen::Index>(n_);
  RVector k(n);
  const double base = 2.0 * std::numbers::pi / period();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index m = (j < (n + 1) / 2) ? j : j - n;
    k[j] = base * static_cast<double>(m);
  }
  if (zero_nyquist && n % 2 == 0) k[n / 2] = 0.0;
  return k;
}

namespace spectral {

CVector fft(const CVector& v) {
  Eigen::FFT<double> engine;
  CVector out(v.size());
  engine.fwd(out, v);
  return out;
}

CVector ifft(const CVector& v) {
  Eigen::FFT<double> engine;
  CVector out(v.size());
  engine.inv(out, v);
  return out;
}

CVector derivative(const Grid1D& grid, const CVector& values) {
  if (static_cast<std::size_t>(values.size()) != grid.size())
    throw StructuralError("spectral::derivative: size mismatch");
  const RVector k = grid.wavenumbers(true);
  CVector f = fft(values);
  for (Eigen::Index j = 0; j < f.size(); ++j) f[j] *= cplx(0.0, k[j]);
  return ifft(f);
}

CMatrix derivative_matrix(const Grid1D& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  CMatrix d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    CVector e = CVector::Zero(n);
    e[j] = 1.0;
    d.col(j) = derivative(grid, e);
  }
  return d;
}

Operator kinetic(const Grid1D& grid, double mass) {
  // T_ab = (1/n) sum_j exp(i k_j (x_a - x_b)) k_j^2 / (2m)
  const auto n = static_cast<Eigen::Index>(grid.size());
  const RVector k = grid.wavenumbers(false);
  CMatrix t(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      cplx sum = 0.0;
      const double sep = static_cast<double>(a - b) * grid.dx();
      for (Eigen::Index j = 0; j < n; ++j) sum += std::polar(k[j] * k[j], k[j] * sep);
      t(a, b) = sum / (2.0 * mass * static_cast<double>(n));
    }
  return Operator::hermitian(t);
}

Operator position(const Grid1D& grid) { return Operator::diagonal(grid.points()); }

Operator potential(const Grid1D& grid, const std::function<double(double)>& v) {
  RVector values(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) values[static_cast<Eigen::Index>(i)] = v(grid.x(i));
  return Operator::diagonal(values);
}

Operator oscillator(const Grid1D& grid, double omega, double center) {
  return kinetic(grid) + potential(grid, [&](double x) {
           const double d = x - center;
           return 0.5 * omega * omega * d * d;
         });
}

double oscillator_ground_density(double x, double omega, double center) {
  const double d = x - center;
  return std::sqrt(omega / std::numbers::pi) * std::exp(-omega * d * d);
}

StateVector sample(const Grid1D& grid, const std::function<cplx(double)>& psi) {
  CVector v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = psi(grid.x(i)) * std::sqrt(grid.dx());
  return StateVector(std::move(v)).normalized();
}

RVector density(const Grid1D& grid, const StateVector& psi) {
  if (psi.dim() != grid.size()) throw StructuralError("spectral::density: size mismatch");
  return psi.amplitudes().cwiseAbs2() / grid.dx();
}

}  // namespace spectral
}  // namespace protmeas
