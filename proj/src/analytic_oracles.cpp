#include "grinlens/analytic_oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace grinlens {

namespace {

using cplx = std::complex<double>;
constexpr cplx kJ{0.0, 1.0};

double bessel_j(int n, double x) { return std::cyl_bessel_j(static_cast<double>(n), x); }
double bessel_y(int n, double x) { return std::cyl_neumann(static_cast<double>(n), x); }

// Derivative from J_n' = (J_{n-1} - J_{n+1}) / 2, valid for n = 0 with J_{-1} = -J_1.
double bessel_j_prime(int n, double x) {
  if (n == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x));
}
double bessel_y_prime(int n, double x) {
  if (n == 0) return -bessel_y(1, x);
  return 0.5 * (bessel_y(n - 1, x) - bessel_y(n + 1, x));
}

cplx hankel2(int n, double x) { return {bessel_j(n, x), -bessel_y(n, x)}; }
cplx hankel2_prime(int n, double x) { return {bessel_j_prime(n, x), -bessel_y_prime(n, x)}; }

cplx minus_j_pow(int n) {
  static constexpr cplx table[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  return table[n % 4];
}

}  // namespace

void CylinderSpec::validate() const {
  if (!(radius > 0) || !(rho_in > 0) || !(kappa_in > 0) || !(rho_out > 0) || !(kappa_out > 0))
    throw Error("cylinder oracle: radius and properties must be positive");
  if (truncation < 0) throw Error("cylinder oracle: negative truncation order");
}

int cylinder_truncation(const CylinderSpec& spec, double omega) {
  const double k_out = omega * std::sqrt(spec.rho_out / spec.kappa_out);
  const double k_in = omega * std::sqrt(spec.rho_in / spec.kappa_in);
  const int minimum = static_cast<int>(std::ceil(std::max(k_out, k_in) * spec.radius)) + 10;
  return std::max(spec.truncation, minimum);
}

std::vector<cplx> cylinder_scattering(const CylinderSpec& spec, double omega, double theta,
                                      std::span<const Vec2> points) {
  spec.validate();
  if (!(omega > 0)) throw Error("cylinder oracle: omega must be positive");
  const double R = spec.radius;
  const double a0 = 1.0 / spec.rho_out, a1 = 1.0 / spec.rho_in;
  const double k = omega * std::sqrt(spec.rho_out / spec.kappa_out);
  const double k1 = omega * std::sqrt(spec.rho_in / spec.kappa_in);
  const int order = cylinder_truncation(spec, omega);

  // Outside: p_s = sum (-j)^n A_n H_n(k r) e^{jn psi}; inside: p = sum (-j)^n B_n J_n(k1 r) e^{jn psi}.
  std::vector<cplx> A(order + 1), B(order + 1);
  for (int n = 0; n <= order; ++n) {
    const double jk = bessel_j(n, k * R), jk1 = bessel_j(n, k1 * R);
    const double djk = bessel_j_prime(n, k * R), djk1 = bessel_j_prime(n, k1 * R);
    if (!std::isfinite(bessel_y(n, k * R))) break;  // A_n underflows to zero beyond this order
    const cplx h = hankel2(n, k * R), dh = hankel2_prime(n, k * R);
    const cplx num = a1 * k1 * djk1 * jk - a0 * k * djk * jk1;
    const cplx den = a1 * k1 * djk1 * h - a0 * k * dh * jk1;
    A[n] = -num / den;
    B[n] = jk1 != 0.0 ? (jk + A[n] * h) / jk1 : (a0 * k * (djk + A[n] * dh)) / (a1 * k1 * djk1);
  }

  // Convergence: the last retained coefficient must be negligible.
  double amax = 0.0;
  for (const auto& a : A) amax = std::max(amax, std::abs(a));
  if (amax > 0 && A[order] != 0.0 && std::abs(A[order]) * std::abs(hankel2(order, k * R)) > 1e-10 * amax)
    throw Error(fmt::format("cylinder oracle: series not converged at order {}", order));

  std::vector<cplx> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    const double r = x.norm();
    const double psi = std::atan2(x.y, x.x) - theta;
    cplx sum = 0.0;
    if (r >= R) {
      for (int n = 0; n <= order; ++n) {
        if (A[n] == 0.0) continue;
        const double y = bessel_y(n, k * r);
        if (!std::isfinite(y)) break;
        const cplx term = minus_j_pow(n) * A[n] * cplx(bessel_j(n, k * r), -y);
        sum += (n == 0 ? 1.0 : 2.0 * std::cos(n * psi)) * term;
      }
    } else {
      for (int n = 0; n <= order; ++n) {
        const cplx term = minus_j_pow(n) * (B[n] * bessel_j(n, k1 * r) - bessel_j(n, k * r));
        sum += (n == 0 ? 1.0 : 2.0 * std::cos(n * psi)) * term;
      }
    }
    out.push_back(sum);
  }
  return out;
}

std::complex<double> point_source_field(double k, double a, double r) {
  if (!(r > 0) || !(k > 0) || !(a > 0)) throw Error("point source oracle: k, a and r must be positive");
  return -kJ / 4.0 * hankel2(0, k * r) / a;
}

double disk_average_plane_wave(double k, double r) {
  if (!(k > 0) || !(r > 0)) throw Error("disk average oracle: k and r must be positive");
  const double x = k * r;
  if (x < 1e-4) return 1.0 - x * x / 8.0;
  return 2.0 * bessel_j(1, x) / x;
}

double bessel_j1_first_zero() {
  double lo = 3.0, hi = 4.5;  // J1(3) > 0 > J1(4.5)
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bessel_j(1, mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

FdReport fd_gradient_check(const std::function<double(const std::vector<double>&)>& cost,
                           const std::vector<double>& x, const std::vector<double>& grad,
                           const std::vector<std::vector<double>>& directions, const std::vector<double>& steps) {
  if (grad.size() != x.size()) throw Error("fd_gradient_check: gradient length mismatch");
  if (steps.empty()) throw Error("fd_gradient_check: no steps");
  FdReport report;
  for (const auto& d : directions) {
    if (d.size() != x.size()) throw Error("fd_gradient_check: direction length mismatch");
    FdDirectionReport r;
    for (std::size_t i = 0; i < x.size(); ++i) r.analytic += grad[i] * d[i];
    r.best_error = std::numeric_limits<double>::infinity();
    std::vector<double> xp(x.size()), xm(x.size());
    for (double eps : steps) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + eps * d[i];
        xm[i] = x[i] - eps * d[i];
      }
      const double fd = (cost(xp) - cost(xm)) / (2.0 * eps);
      const double scale = std::max(std::abs(fd), std::numeric_limits<double>::min());
      const double err = std::abs(fd - r.analytic) / scale;
      r.steps.push_back(eps);
      r.fd.push_back(fd);
      r.rel_error.push_back(err);
      if (err < r.best_error) {
        r.best_error = err;
        r.best_step = eps;
      }
    }
    report.worst_best_error = std::max(report.worst_best_error, r.best_error);
    report.directions.push_back(std::move(r));
  }
  return report;
}

}  // namespace grinlens
