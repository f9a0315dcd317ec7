#pragma once

// Closed-form reference solutions used to validate the finite element solver
// and the adjoint gradients. Nothing here depends on the assembly code.

#include "grinlens/geometry.hpp"

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace grinlens {

/// Penetrable circular cylinder centred at the origin.
struct CylinderSpec {
  double radius = 0.0;
  double rho_in = 0.0, kappa_in = 0.0;
  double rho_out = 0.0, kappa_out = 0.0;
  int truncation = 0;  ///< 0 selects ceil(k_max * radius) + 10

  void validate() const;
};

/// Scattered pressure p - p_i of the incident wave exp(-j k.x), k = omega /
/// c_out (cos theta, sin theta), inside and outside the cylinder. Pressure and
/// a dp/dr (a = 1/rho) are continuous across the interface.
std::vector<std::complex<double>> cylinder_scattering(const CylinderSpec& spec, double omega, double theta,
                                                      std::span<const Vec2> points);

/// Truncation order actually used by cylinder_scattering.
int cylinder_truncation(const CylinderSpec& spec, double omega);

/// Outgoing free-field response to a unit point source at the origin in a
/// homogeneous medium: -div(a grad p) - b w^2 p = delta, p = -j/4 H0(k r) / a.
std::complex<double> point_source_field(double k, double a, double r);

/// Average of exp(-j k.x) over a disk of radius r centred at the origin,
/// 2 J1(k r) / (k r).
double disk_average_plane_wave(double k, double r);

/// First positive zero of J1, by bracketing and bisection.
double bessel_j1_first_zero();

struct FdDirectionReport {
  double analytic = 0.0;                 ///< grad . d
  std::vector<double> steps;
  std::vector<double> fd;                ///< central differences per step
  std::vector<double> rel_error;         ///< |fd - analytic| / |fd|
  double best_error = 0.0;
  double best_step = 0.0;
};

struct FdReport {
  std::vector<FdDirectionReport> directions;
  double worst_best_error = 0.0;
};

/// Central finite differences (J(x + e d) - J(x - e d)) / 2e against grad . d.
FdReport fd_gradient_check(const std::function<double(const std::vector<double>&)>& cost,
                           const std::vector<double>& x, const std::vector<double>& grad,
                           const std::vector<std::vector<double>>& directions, const std::vector<double>& steps);

}  // namespace grinlens
