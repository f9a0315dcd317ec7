#pragma once

// Scattered-field Helmholtz problem on the P2 space:
//
//   -div(a grad p_s) - b w^2 p_s = f        in the disk
//   a dp_s/dn + alpha p_s = 0               on the outer circle
//
// with alpha = a0 (j k + 1/(2 r_a)) and the incident plane wave
// p_i = exp(-j k.x) (time factor exp(j w t)). The load is assembled in weak
// form: int w^2 (b - b0) p_i phi - (a - a0) grad p_i . grad phi.

#include "grinlens/attainable_materials.hpp"
#include "grinlens/fe_space.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <complex>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace grinlens {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CSparse = Eigen::SparseMatrix<cplx>;

struct DesignWave {
  double omega = 0.0;  ///< rad/s
  double theta = 0.0;  ///< propagation direction, rad from the x axis
  Vec2 k_vec;          ///< rad/m

  static DesignWave from_frequency(double frequency_hz, double theta_rad, double c0);
  double k() const { return k_vec.norm(); }
  double frequency() const { return omega / (2.0 * kPi); }
  void validate(double c0) const;
};

struct IncidentSample {
  cplx value;
  std::array<cplx, 2> grad;
};

IncidentSample incident_at(const DesignWave& wave, Vec2 x);
std::vector<IncidentSample> incident_field(const DesignWave& wave, std::span<const Vec2> points);

/// Per-element coefficients a = 1/rho and b = 1/kappa.
struct ElementCoefficients {
  std::vector<double> a;
  std::vector<double> b;
};

ElementCoefficients element_coefficients(const Mesh& mesh, const MaterialField& mat);

struct SystemMatrices {
  CSparse k;    ///< complex symmetric system operator
  CVector f;    ///< load vector
  DesignWave wave;
};

SystemMatrices assemble(const FeSpace& space, const MaterialField& mat, const DesignWave& wave);
SystemMatrices assemble(const FeSpace& space, const ElementCoefficients& coeffs, const ReferenceMedium& ref,
                        const DesignWave& wave);

/// Only the operator, with zero load.
CSparse assemble_operator(const FeSpace& space, const ElementCoefficients& coeffs, const ReferenceMedium& ref,
                          const DesignWave& wave);

/// Adds int_{outer circle} g(x) phi ds to the load.
void add_boundary_load(const FeSpace& space, const std::function<cplx(Vec2)>& g, CVector& f);

/// Sparse LU factorization of the system operator. Because the operator is
/// complex symmetric, adjoint systems K^H x = b reuse the same factors.
class LinearSolver {
public:
  explicit LinearSolver(const CSparse& k);
  CVector solve(const CVector& b) const;
  CVector solve_adjoint(const CVector& b) const;
  const CSparse& matrix() const { return k_; }

private:
  CSparse k_;
  Eigen::SparseLU<CSparse, Eigen::COLAMDOrdering<int>> lu_;
};

struct FieldSolution {
  CVector coeffs;
  DesignWave wave;
  double residual = 0.0;  ///< ||K x - f|| / ||f|| (zero for a zero load)
  std::shared_ptr<const LinearSolver> solver;
};

FieldSolution solve_scattered(const SystemMatrices& sys);

/// Relative residual ||K x - b|| / ||b||.
double relative_residual(const CSparse& k, const CVector& x, const CVector& b);

/// Scattered field and its gradient at quadrature point q of element e.
struct FieldSample {
  cplx value;
  std::array<cplx, 2> grad;
};
FieldSample evaluate(const FeSpace& space, const CVector& coeffs, int e, const QuadPoint& q);

/// Average of p_i + p_s over the focal disk.
cplx focal_mean(const FieldSolution& sol, const FeSpace& space);

/// CSV rows: node id, x, y, Re p_s, Im p_s.
void write_field_csv(std::ostream& out, const Mesh& mesh, const CVector& coeffs);

}  // namespace grinlens
