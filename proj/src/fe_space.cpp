#include "grinlens/fe_space.hpp"

#include <fmt/format.h>

#include <cmath>

namespace grinlens {

FeSpace::FeSpace(const Mesh& mesh) : mesh_(&mesh) {
  if (mesh.num_elements() == 0) throw Error("finite element space: empty mesh");
  const auto& rule = p2::degree4_rule();
  elements_.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto nodes = mesh.element_coords(e);
    ElementData& d = elements_[e];
    d.quad.reserve(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const p2::MappedPoint m = p2::map_point(nodes, rule.points[q]);
      if (!(m.det_j > 0)) throw Error(fmt::format("finite element space: element {} is inverted", e));
      QuadPoint qp;
      qp.x = m.x;
      qp.weight = rule.weights[q] * m.det_j;
      qp.value = m.value;
      qp.grad = m.grad;
      for (int i = 0; i < p2::kNodes; ++i)
        for (int j = 0; j < p2::kNodes; ++j) {
          d.stiffness[i * p2::kNodes + j] += qp.weight * dot(m.grad[i], m.grad[j]);
          d.mass[i * p2::kNodes + j] += qp.weight * m.value[i] * m.value[j];
        }
      d.quad.push_back(qp);
    }
    if (mesh.regions[e].kind == Region::Focal) {
      focal_.push_back(e);
      for (const auto& qp : d.quad) focal_area_ += qp.weight;
    }
  }
  cell_elements_ = mesh.cell_elements();

  const p2::LineRule line = p2::gauss_line_rule(4);
  boundary_.resize(mesh.boundary.size());
  for (std::size_t b = 0; b < mesh.boundary.size(); ++b) {
    const auto& be = mesh.boundary[b];
    const std::array<Vec2, 3> x{mesh.nodes[be.nodes[0]], mesh.nodes[be.nodes[1]], mesh.nodes[be.nodes[2]]};
    BoundaryEdgeData& d = boundary_[b];
    for (std::size_t q = 0; q < line.points.size(); ++q) {
      const double s = line.points[q];
      const auto n = p2::edge_shape(s);
      const auto dn = p2::edge_shape_grad(s);
      Vec2 pos{}, tangent{};
      for (int k = 0; k < 3; ++k) {
        pos = pos + x[k] * n[k];
        tangent = tangent + x[k] * dn[k];
      }
      BoundaryQuadPoint bq;
      bq.x = pos;
      bq.weight = line.weights[q] * tangent.norm();
      bq.value = n;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d.mass[i * 3 + j] += bq.weight * n[i] * n[j];
      d.quad.push_back(bq);
    }
  }
}

}  // namespace grinlens
