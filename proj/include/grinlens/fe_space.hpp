#pragma once

// Second-order Lagrange space on a Mesh with per-element quadrature data and
// unit-coefficient element matrices, computed once and shared by every solve.

#include "grinlens/domain_mesh.hpp"
#include "grinlens/p2_element.hpp"

#include <array>
#include <vector>

namespace grinlens {

using ElementMatrix = std::array<double, p2::kNodes * p2::kNodes>;

struct QuadPoint {
  Vec2 x;
  double weight = 0.0;  ///< quadrature weight times |det J|
  std::array<double, p2::kNodes> value{};
  std::array<Vec2, p2::kNodes> grad{};
};

struct ElementData {
  std::vector<QuadPoint> quad;
  ElementMatrix stiffness{};  ///< int grad N_i . grad N_j
  ElementMatrix mass{};       ///< int N_i N_j
};

struct BoundaryQuadPoint {
  Vec2 x;
  double weight = 0.0;  ///< weight times arc-length Jacobian
  std::array<double, 3> value{};
};

struct BoundaryEdgeData {
  std::vector<BoundaryQuadPoint> quad;
  std::array<double, 9> mass{};  ///< int N_i N_j ds over the edge
};

class FeSpace {
public:
  explicit FeSpace(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  int num_dofs() const { return mesh_->num_nodes(); }
  const ElementData& element(int e) const { return elements_[e]; }
  const BoundaryEdgeData& boundary_edge(int b) const { return boundary_[b]; }
  const std::vector<int>& focal_elements() const { return focal_; }
  const std::vector<std::vector<int>>& cell_elements() const { return cell_elements_; }
  double focal_area() const { return focal_area_; }

private:
  const Mesh* mesh_;
  std::vector<ElementData> elements_;
  std::vector<BoundaryEdgeData> boundary_;
  std::vector<int> focal_;
  std::vector<std::vector<int>> cell_elements_;
  double focal_area_ = 0.0;
};

}  // namespace grinlens
