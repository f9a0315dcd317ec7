#pragma once

// Per-cell controls, the material coefficients they induce, the attainable
// property region used as the projection set, and the control regularization.
//
// Controls are logarithmic: rho_hat = e^v and kappa_hat = e^u, so that
// a = a0 e^{-v} and b = b0 e^{-u} with a = 1/rho and b = 1/kappa.

#include "grinlens/domain_mesh.hpp"
#include "grinlens/geometry.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <string>
#include <vector>

namespace grinlens {

struct ReferenceMedium {
  double rho0 = 998.0;
  double kappa0 = 998.0 * 1485.0 * 1485.0;
  double c0 = 1485.0;

  static ReferenceMedium from_rho_kappa(double rho0, double kappa0);
  static ReferenceMedium from_rho_c(double rho0, double c0);

  double a0() const { return 1.0 / rho0; }
  double b0() const { return 1.0 / kappa0; }
  void validate() const;
};

struct ControlState {
  std::vector<double> v;
  std::vector<double> u;

  static ControlState zeros(int n);
  int size() const { return static_cast<int>(v.size()); }
  /// (v_0..v_{n-1}, u_0..u_{n-1})
  std::vector<double> flat() const;
  static ControlState from_flat(const std::vector<double>& x);
};

/// Piecewise-constant coefficients: one (a, b) pair per cell, water elsewhere.
struct MaterialField {
  ReferenceMedium ref;
  std::vector<double> a_cell;
  std::vector<double> b_cell;

  double a(RegionTag tag) const { return tag.kind == Region::Cell ? a_cell[tag.cell] : ref.a0(); }
  double b(RegionTag tag) const { return tag.kind == Region::Cell ? b_cell[tag.cell] : ref.b0(); }
};

MaterialField material_field(const ControlState& ctrl, const ReferenceMedium& ref, int num_cells);
MaterialField material_field(const ControlState& ctrl, const ReferenceMedium& ref, const CellGraph& cells);

/// Admissible (v, u) pairs: a union of simple polygons in log-property space.
class AttainableRegion {
public:
  struct Polygon {
    std::string family;
    std::vector<Vec2> vertices;  ///< (v, u), counter-clockwise
  };

  AttainableRegion() = default;
  explicit AttainableRegion(std::vector<Polygon> polygons);

  /// Parses the region text format. Vertices are given as "rho_hat kappa_hat".
  static AttainableRegion parse(std::istream& in);
  static AttainableRegion load(const std::string& path);
  /// Approximation of the crown and star cell families shipped with the tool.
  static AttainableRegion builtin();
  static const char* builtin_text();

  const std::vector<Polygon>& polygons() const { return polygons_; }
  bool empty() const { return polygons_.empty(); }

  /// True when (v, u) lies in the union, boundary included up to `tol`.
  bool contains(Vec2 vu, double tol = 1e-12) const;

  /// Nearest point of the union; admissible points are returned unchanged.
  /// Ties between polygons go to the "crown" family.
  Vec2 project(Vec2 vu) const;

  void write(std::ostream& out) const;

private:
  std::vector<Polygon> polygons_;
};

ControlState project_control(const ControlState& ctrl, const AttainableRegion& region);

/// True when every cell's (v_j, u_j) lies in the region.
bool is_admissible(const ControlState& ctrl, const AttainableRegion& region, double tol = 1e-12);

struct RegularizationMatrices {
  Eigen::VectorXd d;               ///< cell areas (m^2)
  Eigen::SparseMatrix<double> h;   ///< graph Laplacian

  int size() const { return static_cast<int>(d.size()); }
  /// (D + H) x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

RegularizationMatrices regularization_matrices(const CellGraph& cells);
RegularizationMatrices regularization_matrices(const std::vector<double>& areas,
                                               const std::vector<std::vector<int>>& adjacency);

/// v^T (D+H) v + u^T (D+H) u
double control_norm_sq(const ControlState& ctrl, const RegularizationMatrices& reg);

/// CSV rows: cell id, v, u, rho_hat, kappa_hat.
void write_control_csv(std::ostream& out, const ControlState& ctrl);
ControlState read_control_csv(std::istream& in);

}  // namespace grinlens
