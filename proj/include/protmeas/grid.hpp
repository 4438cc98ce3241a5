#pragma once

// Uniform 1D grids with periodic spectral calculus (hbar = m = 1).

#include <cstddef>
#include <functional>

#include "protmeas/hilbert.hpp"

namespace protmeas {

/// n_points samples x_j = x_min + j*dx, dx = (x_max - x_min)/(n_points - 1).
/// Spectral operators treat the samples as one period of length n_points*dx.
class Grid1D {
 public:
  Grid1D(std::size_t n_points, double x_min, double x_max);

  std::size_t size() const noexcept { return n_; }
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double dx() const noexcept { return dx_; }
  double period() const noexcept { return static_cast<double>(n_) * dx_; }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
  RVector points() const;
  /// Index of the grid point closest to `x` (clamped to the grid).
  std::size_t nearest_index(double x) const;

  /// Angular wavenumbers in FFT order. With `zero_nyquist` the unpaired
  /// Nyquist mode of an even grid is set to 0 (first-derivative use);
  /// otherwise it is -pi/dx.
  RVector wavenumbers(bool zero_nyquist = false) const;

  bool operator==(const Grid1D& other) const = default;

 private:
  std::size_t n_;
  double x_min_;
  double x_max_;
  double dx_;
};

namespace spectral {

/// Forward/inverse DFT of a single vector (unnormalized forward, 1/n inverse).
CVector fft(const CVector& v);
CVector ifft(const CVector& v);

/// d/dx of the periodic interpolant of `values`.
CVector derivative(const Grid1D& grid, const CVector& values);

/// Dense matrix of the periodic spectral first derivative.
CMatrix derivative_matrix(const Grid1D& grid);

/// Kinetic energy p^2 / (2 mass) with p = -i d/dx, built spectrally.
Operator kinetic(const Grid1D& grid, double mass = 1.0);

Operator position(const Grid1D& grid);
Operator potential(const Grid1D& grid, const std::function<double(double)>& v);

/// Harmonic oscillator T + omega^2 (x - center)^2 / 2 on the grid.
Operator oscillator(const Grid1D& grid, double omega, double center = 0.0);

/// Analytic oscillator ground-state density sqrt(omega/pi) exp(-omega (x-c)^2).
double oscillator_ground_density(double x, double omega, double center = 0.0);

/// Discrete state sampling psi(x_j) * sqrt(dx), normalized.
StateVector sample(const Grid1D& grid, const std::function<cplx(double)>& psi);

/// Continuum density |psi_j|^2 / dx for a discrete-normalized grid state.
RVector density(const Grid1D& grid, const StateVector& psi);

}  // namespace spectral
}  // namespace protmeas
