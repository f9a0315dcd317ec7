#pragma once

// Quadratic (6-node) triangle: reference shape functions, quadrature rules
// and the isoparametric geometry map.
//
// Node order: corners 0,1,2 then mid-edge nodes 3 (0-1), 4 (1-2), 5 (2-0).
// Local edge e joins corners e and (e+1)%3 through mid-node 3+e.

#include "grinlens/geometry.hpp"

#include <array>
#include <vector>

namespace grinlens::p2 {

inline constexpr int kNodes = 6;

struct RefPoint {
  double xi = 0.0;
  double eta = 0.0;
};

/// Quadrature on the reference triangle; weights sum to 1/2.
struct TriangleRule {
  std::vector<RefPoint> points;
  std::vector<double> weights;
};

/// Quadrature on [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Six-point rule exact for polynomials of degree 4.
const TriangleRule& degree4_rule();

/// Collapsed Gauss-Legendre product rule with n points per direction,
/// exact for polynomials of degree 2n-2 on the triangle.
TriangleRule collapsed_gauss_rule(int n);

/// Gauss-Legendre rule with n points on [0, 1].
LineRule gauss_line_rule(int n);

std::array<double, kNodes> shape(RefPoint p);
/// Reference gradients: [k][0] = dN_k/dxi, [k][1] = dN_k/deta.
std::array<std::array<double, 2>, kNodes> shape_grad(RefPoint p);

/// Quadratic edge shape functions at s in [0, 1] for nodes (start, mid, end).
std::array<double, 3> edge_shape(double s);
std::array<double, 3> edge_shape_grad(double s);

/// Corner indices and mid-node index of local edge e.
constexpr std::array<int, 3> edge_nodes(int e) { return {e, 3 + e, (e + 1) % 3}; }

/// Geometry of the isoparametric map at one reference point.
struct MappedPoint {
  Vec2 x;
  double det_j = 0.0;
  std::array<Vec2, kNodes> grad;  ///< physical gradients of the shape functions
  std::array<double, kNodes> value;
};

MappedPoint map_point(const std::array<Vec2, kNodes>& nodes, RefPoint p);

/// Area of a (possibly curved) 6-node triangle.
double element_area(const std::array<Vec2, kNodes>& nodes);

}  // namespace grinlens::p2
