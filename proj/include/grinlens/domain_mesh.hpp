#pragma once

// Annular lens geometry: hexagonal control cells, and the conforming second
// order triangle mesh of the computational disk.
//
// Radii, from the centre outwards:
//   r_f  focal disk (hydrophone region)
//   r_i  inner lens radius (the ring r_f..r_i is a water clearance)
//   r_e  outer lens radius (the ring r_i..r_e is tiled with control cells)
//   r_a  artificial absorbing boundary
//
// All circles are represented by inscribed polygons whose vertices are shared
// between the tiling and the mesh. The focal circle and the outer boundary are
// additionally curved (quadratic) in the mesh.

#include "grinlens/geometry.hpp"
#include "grinlens/p2_element.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace grinlens {

struct DomainSpec {
  double r_f = 0.010;
  double r_i = 0.020;
  double r_e = 0.0743;
  double r_a = 0.2228;
  double l = 0.005;           ///< hexagon edge length
  double h_target = 0.01485;  ///< largest admissible element diameter

  /// Throws Error unless 0 < r_f < r_i < r_e < r_a, l > 0 and h_target > 0.
  void validate() const;
};

/// Number of vertices of the polygon used for a circle of radius r, with
/// chord length at most `max_chord`. Always a multiple of four.
int circle_polygon_size(double r, double max_chord);

/// Vertices of the circle polygon, counter-clockwise from angle zero.
std::vector<Vec2> circle_polygon(double r, int n);

struct HexCell {
  int id = 0;
  Vec2 centroid;
  std::vector<Vec2> loop;  ///< counter-clockwise boundary, not closed
  double area = 0.0;       ///< m^2
  bool clipped = false;    ///< touched by one of the lens circles or merged
};

class CellGraph {
public:
  std::vector<HexCell> cells;
  std::vector<std::vector<int>> adjacency;  ///< sorted neighbour ids per cell
  std::vector<int> mirror;                  ///< cell reflected about the x axis
  std::vector<std::string> merges;          ///< human-readable merge report
  double edge_length = 0.0;

  int size() const { return static_cast<int>(cells.size()); }
  bool empty() const { return cells.empty(); }

  /// Cell containing p, or -1 outside the lens annulus.
  int cell_at(Vec2 p) const;

  /// Lattice coordinates of the hexagon whose closure contains p.
  std::pair<int, int> lattice_of(Vec2 p) const;

  struct Piece {
    std::vector<Vec2> loop;
    int upper_owner = -1;  ///< owner of the part with y >= 0
    int lower_owner = -1;  ///< owner of the part with y < 0
  };
  std::map<std::pair<int, int>, std::vector<Piece>> lattice_pieces;
  std::vector<Vec2> inner_polygon;
  std::vector<Vec2> outer_polygon;
};

/// Centre of lattice hexagon (i, j) for flat-top hexagons of edge l.
Vec2 hex_center(int i, int j, double l);
std::array<Vec2, 6> hex_vertices(int i, int j, double l);

/// Tiles the annulus [r_i, r_e] with flat-top hexagons of edge l. Clipped
/// fragments below a quarter of a full hexagon merge into a neighbour.
CellGraph hex_tiling(const DomainSpec& spec);

enum class Region : std::uint8_t { Focal, Clearance, Cell, Exterior };

struct RegionTag {
  Region kind = Region::Exterior;
  int cell = -1;
  bool operator==(const RegionTag&) const = default;
};

std::string to_string(RegionTag tag);
RegionTag parse_region_tag(const std::string& text);

struct BoundaryEdge {
  int element = 0;
  int local_edge = 0;
  std::array<int, 3> nodes{};  ///< start, mid, end
};

using ElementNodes = std::array<int, p2::kNodes>;

struct Mesh {
  DomainSpec spec;
  int num_cells = 0;
  std::vector<Vec2> nodes;
  std::vector<ElementNodes> elements;
  std::vector<RegionTag> regions;
  /// Arc radius for each local edge of each element; zero for straight edges.
  std::vector<std::array<double, 3>> edge_radius;
  std::vector<BoundaryEdge> boundary;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  std::array<Vec2, p2::kNodes> element_coords(int e) const;
  double element_area(int e) const;
  /// Longest distance between any two of the element's corner or mid nodes.
  double element_diameter(int e) const;
  double region_area(Region kind) const;
  double total_area() const;
  /// Elements of each control cell.
  std::vector<std::vector<int>> cell_elements() const;
};

struct MeshStats {
  int elements = 0;
  int nodes = 0;
  double max_diameter = 0.0;
  double min_det_j = 0.0;
};

/// Conforming mesh of the disk of radius r_a. The upper half is triangulated
/// and mirrored, so the mesh is exactly symmetric about the x axis. An empty
/// cell graph omits the lens circles.
Mesh build_mesh(const DomainSpec& spec, const CellGraph& cells);

/// Splits every element into four, keeping curved edges on their arcs.
Mesh refine_uniform(const Mesh& mesh);

MeshStats mesh_stats(const Mesh& mesh);

/// Node index of the mirror image of every node.
std::vector<int> mirror_nodes(const Mesh& mesh);

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_cell_graph(std::ostream& out, const CellGraph& graph);

}  // namespace grinlens
