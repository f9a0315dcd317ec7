#pragma once

// Constrained Delaunay triangulation with Delaunay refinement, used by the
// domain mesher. Internal to the library.

#include "grinlens/geometry.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace grinlens::detail {

struct PslgSegment {
  int a = -1;
  int b = -1;
  int curve = -1;         ///< curve id carried to the output edges (-1: straight)
  bool splittable = true; ///< refinement may insert midpoints on this segment
};

/// Planar straight-line graph. Segments may only meet at shared endpoints and
/// no point may lie in the interior of a segment.
struct Pslg {
  std::vector<Vec2> points;
  std::vector<PslgSegment> segments;
};

struct RefineOptions {
  double max_edge = 0.0;          ///< upper bound on every triangle edge
  double quality_min_edge = 0.0;  ///< quality refinement stops below this edge length
  double max_radius_edge = 1.414; ///< circumradius / shortest edge bound
  std::size_t max_points = 4'000'000;
};

struct Triangulation {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;  ///< counter-clockwise
  /// Per triangle edge i (opposite vertex i): curve id of a constrained edge,
  /// -1 for straight constraints, -2 for unconstrained edges.
  std::vector<std::array<int, 3>> edge_curve;
  std::vector<int> component;  ///< connected region id per triangle
  int num_components = 0;
};

/// Triangulates the region bounded by the PSLG's outer constraints and refines
/// it. Throws Error when the input is degenerate or refinement does not settle.
Triangulation triangulate(const Pslg& pslg, const RefineOptions& opts);

}  // namespace grinlens::detail
