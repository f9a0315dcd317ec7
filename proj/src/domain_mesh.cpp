#include "grinlens/domain_mesh.hpp"

#include "triangulator.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace grinlens {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPoly = bg::model::polygon<BPoint, false, true>;
using BMulti = bg::model::multi_polygon<BPoly>;
using BLine = bg::model::linestring<BPoint>;
using BMultiLine = bg::model::multi_linestring<BLine>;

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kHalfSqrt3 = 0.8660254037844386;
// Hexagon vertex offsets in units of (l/2, l*sqrt(3)/2).
constexpr std::array<std::array<int, 2>, 6> kHexSteps = {{{2, 0}, {1, 1}, {-1, 1}, {-2, 0}, {-1, -1}, {1, -1}}};
// Lattice neighbour across the edge between vertices k and k+1.
constexpr std::array<std::array<int, 2>, 6> kNeighbour = {{{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

constexpr double kMergeFraction = 0.25;

double full_hex_area(double l) { return 1.5 * kSqrt3 * l * l; }

double lens_chord(const DomainSpec& s) { return std::min(s.h_target, 0.5 * s.l); }
double curved_chord(const DomainSpec& s) { return 0.95 * std::min(s.h_target, 0.5 * kPi * s.r_f); }

BPoly to_bpoly(std::span<const Vec2> loop) {
  BPoly p;
  for (const auto& v : loop) bg::append(p.outer(), BPoint(v.x, v.y));
  bg::append(p.outer(), BPoint(loop[0].x, loop[0].y));
  bg::correct(p);
  return p;
}

std::vector<Vec2> from_ring(const BPoly& p) {
  std::vector<Vec2> out;
  const auto& ring = p.outer();
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back({ring[i].x(), ring[i].y()});
  return out;
}

Vec2 loop_centroid(std::span<const Vec2> loop) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double c = cross(loop[j], loop[i]);
    a += c;
    cx += (loop[j].x + loop[i].x) * c;
    cy += (loop[j].y + loop[i].y) * c;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

std::vector<Vec2> mirrored_loop(std::span<const Vec2> loop) {
  std::vector<Vec2> out;
  out.reserve(loop.size());
  for (auto it = loop.rbegin(); it != loop.rend(); ++it) out.push_back(it->mirrored());
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct Fragment {
  std::pair<int, int> key;
  int piece = 0;
  std::vector<Vec2> loop;
  double area = 0.0;
  bool full = false;
  Vec2 centroid;
  int side = 0;  // sign of the hexagon centre's y
  int mirror = -1;
};

}  // namespace

void DomainSpec::validate() const {
  if (!(r_f > 0 && r_f < r_i && r_i < r_e && r_e < r_a))
    throw Error(fmt::format("domain spec: radii must satisfy 0 < r_f < r_i < r_e < r_a (got {}, {}, {}, {})", r_f,
                            r_i, r_e, r_a));
  if (!(l > 0)) throw Error("domain spec: hexagon edge must be positive");
  if (!(h_target > 0)) throw Error("domain spec: target mesh size must be positive");
}

int circle_polygon_size(double r, double max_chord) {
  const int n = static_cast<int>(std::ceil(2.0 * kPi * r / max_chord));
  return std::max(16, (n + 3) / 4 * 4);
}

std::vector<Vec2> circle_polygon(double r, int n) {
  std::vector<Vec2> out(n);
  for (int k = 0; k <= n / 2; ++k) {
    const double t = 2.0 * kPi * k / n;
    Vec2 p{r * std::cos(t), r * std::sin(t)};
    if (k == 0) p = {r, 0.0};
    if (2 * k == n) p = {-r, 0.0};
    if (4 * k == n) p = {0.0, r};
    out[k] = p;
    if (k > 0 && 2 * k < n) out[n - k] = p.mirrored();
  }
  return out;
}

Vec2 hex_center(int i, int j, double l) { return {0.5 * l * (3 * i), kHalfSqrt3 * l * (2 * j + i)}; }

std::array<Vec2, 6> hex_vertices(int i, int j, double l) {
  // integer multiples of l/2 and l*sqrt(3)/2, so mirrored vertices match bit for bit
  std::array<Vec2, 6> v;
  for (int k = 0; k < 6; ++k)
    v[k] = {0.5 * l * (3 * i + kHexSteps[k][0]), kHalfSqrt3 * l * (2 * j + i + kHexSteps[k][1])};
  return v;
}

std::pair<int, int> CellGraph::lattice_of(Vec2 p) const {
  const double l = edge_length;
  const double q = p.x / (1.5 * l);
  const double r = p.y / (kSqrt3 * l) - 0.5 * q;
  const int qi = static_cast<int>(std::lround(q));
  const int ri = static_cast<int>(std::lround(r));
  std::pair<int, int> best{qi, ri};
  double dbest = std::numeric_limits<double>::infinity();
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) {
      const double d = (hex_center(qi + di, ri + dj, l) - p).squaredNorm();
      if (d < dbest) {
        dbest = d;
        best = {qi + di, ri + dj};
      }
    }
  return best;
}

int CellGraph::cell_at(Vec2 p) const {
  if (cells.empty()) return -1;
  if (!point_in_polygon(p, outer_polygon) || point_in_polygon(p, inner_polygon)) return -1;
  const auto it = lattice_pieces.find(lattice_of(p));
  if (it == lattice_pieces.end() || it->second.empty()) return -1;
  const Piece* piece = &it->second.front();
  if (it->second.size() > 1) {
    for (const auto& pc : it->second)
      if (point_in_polygon(p, pc.loop)) piece = &pc;
  }
  return p.y >= 0.0 ? piece->upper_owner : piece->lower_owner;
}

CellGraph hex_tiling(const DomainSpec& spec) {
  spec.validate();
  const double l = spec.l;
  if (spec.r_e - spec.r_i < kHalfSqrt3 * l)
    throw Error(fmt::format("hex tiling: annulus too thin for any cell (width {} < apothem {})", spec.r_e - spec.r_i,
                            kHalfSqrt3 * l));

  const double chord = lens_chord(spec);
  CellGraph graph;
  graph.edge_length = l;
  graph.inner_polygon = circle_polygon(spec.r_i, circle_polygon_size(spec.r_i, chord));
  graph.outer_polygon = circle_polygon(spec.r_e, circle_polygon_size(spec.r_e, chord));

  BPoly annulus;
  for (const auto& v : graph.outer_polygon) bg::append(annulus.outer(), BPoint(v.x, v.y));
  bg::append(annulus.outer(), BPoint(graph.outer_polygon[0].x, graph.outer_polygon[0].y));
  annulus.inners().resize(1);
  for (auto it = graph.inner_polygon.rbegin(); it != graph.inner_polygon.rend(); ++it)
    bg::append(annulus.inners()[0], BPoint(it->x, it->y));
  bg::append(annulus.inners()[0], BPoint(graph.inner_polygon.back().x, graph.inner_polygon.back().y));
  bg::correct(annulus);

  const double full = full_hex_area(l);
  const int imax = static_cast<int>(std::ceil((spec.r_e + 2 * l) / (1.5 * l))) + 1;

  // Fragments of hexagons with centre y >= 0 are clipped; the rest are mirrored.
  std::vector<Fragment> frags;
  std::map<std::pair<int, int>, std::vector<int>> by_key;
  for (int i = -imax; i <= imax; ++i) {
    for (int j = -2 * imax; j <= 2 * imax; ++j) {
      const Vec2 c = hex_center(i, j, l);
      const double rc = c.norm();
      if (c.y < 0 || rc > spec.r_e + l || rc < spec.r_i - l) continue;
      const auto verts = hex_vertices(i, j, l);
      BPoly hex = to_bpoly(verts);
      BMulti clipped;
      bg::intersection(hex, annulus, clipped);
      std::vector<BPoly> pieces;
      for (auto& p : clipped)
        if (bg::area(p) > 1e-10 * full) pieces.push_back(p);
      int piece_id = 0;
      for (const auto& p : pieces) {
        Fragment f;
        f.key = {i, j};
        f.piece = piece_id++;
        f.area = bg::area(p);
        if (pieces.size() == 1 && std::abs(f.area - full) <= 1e-9 * full) {
          f.full = true;
          f.loop.assign(verts.begin(), verts.end());
          f.area = full;
          f.centroid = c;
        } else {
          f.loop = from_ring(p);
          f.centroid = loop_centroid(f.loop);
        }
        f.side = c.y > 0 ? 1 : 0;
        by_key[f.key].push_back(static_cast<int>(frags.size()));
        frags.push_back(std::move(f));
      }
    }
  }
  // Mirror the strictly upper fragments.
  const std::size_t n_upper = frags.size();
  for (std::size_t k = 0; k < n_upper; ++k) {
    if (frags[k].side == 0) {
      frags[k].mirror = static_cast<int>(k);
      continue;
    }
    Fragment m = frags[k];
    m.key = {frags[k].key.first, -frags[k].key.second - frags[k].key.first};
    m.loop = mirrored_loop(frags[k].loop);
    if (frags[k].full) {
      const auto hv = hex_vertices(m.key.first, m.key.second, l);
      m.loop.assign(hv.begin(), hv.end());
    }
    m.centroid = frags[k].centroid.mirrored();
    m.side = -1;
    m.mirror = static_cast<int>(k);
    frags[k].mirror = static_cast<int>(frags.size());
    by_key[m.key].push_back(static_cast<int>(frags.size()));
    frags.push_back(std::move(m));
  }
  if (frags.empty()) throw Error("hex tiling: annulus too thin for any cell");
  const int nf = static_cast<int>(frags.size());

  // Fragment adjacency through shared hexagon edges inside the annulus.
  auto owner_piece = [&](const std::vector<int>& ids, Vec2 m, Vec2 toward) {
    if (ids.size() == 1) return ids[0];
    const Vec2 probe = m + (toward - m) * 1e-6;
    for (int id : ids)
      if (point_in_polygon(probe, frags[id].loop)) return id;
    return ids[0];
  };
  std::vector<std::map<int, double>> shared(nf);
  for (const auto& [key, ids] : by_key) {
    const auto verts = hex_vertices(key.first, key.second, l);
    for (int k = 0; k < 3; ++k) {
      const std::pair<int, int> nkey{key.first + kNeighbour[k][0], key.second + kNeighbour[k][1]};
      const auto nit = by_key.find(nkey);
      if (nit == by_key.end()) continue;
      BLine edge;
      bg::append(edge, BPoint(verts[k].x, verts[k].y));
      bg::append(edge, BPoint(verts[(k + 1) % 6].x, verts[(k + 1) % 6].y));
      BMultiLine inside;
      bg::intersection(edge, annulus, inside);
      for (const auto& ls : inside) {
        const double len = bg::length(ls);
        if (len <= 1e-9 * l || ls.size() < 2) continue;
        const Vec2 a{ls.front().x(), ls.front().y()}, b{ls.back().x(), ls.back().y()};
        const Vec2 m = (a + b) * 0.5;
        const int fa = owner_piece(ids, m, hex_center(key.first, key.second, l));
        const int fb = owner_piece(nit->second, m, hex_center(nkey.first, nkey.second, l));
        shared[fa][fb] += len;
        shared[fb][fa] += len;
      }
    }
  }
  // Enforce mirror symmetry of the adjacency.
  for (int f = 0; f < nf; ++f)
    for (const auto& [g, len] : std::map<int, double>(shared[f])) {
      const int mf = frags[f].mirror, mg = frags[g].mirror;
      if (!shared[mf].count(mg)) shared[mf][mg] = len;
    }

  // Merge small fragments into their largest neighbour.
  UnionFind uf(nf);
  std::vector<double> group_area(nf);
  for (int f = 0; f < nf; ++f) group_area[f] = frags[f].area;
  std::vector<int> order;
  for (int f = 0; f < nf; ++f)
    if (!frags[f].full && frags[f].area < kMergeFraction * full && frags[f].side >= 0) order.push_back(f);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frags[a].area != frags[b].area) return frags[a].area < frags[b].area;
    return frags[a].key < frags[b].key;
  });
  std::map<int, std::pair<int, int>> axis_split;  // fragment -> (upper neighbour, lower neighbour)
  std::vector<std::string> merge_notes;
  for (int f : order) {
    if (uf.find(f) != f) continue;
    const int rf = uf.find(f);
    if (group_area[rf] >= kMergeFraction * full) continue;
    int best = -1;
    double best_area = -1.0;
    double best_len = -1.0;
    for (const auto& [g, len] : shared[f]) {
      const int rg = uf.find(g);
      if (rg == rf) continue;
      const double ga = group_area[rg];
      // mirror-invariant preference: area, shared length, then centroid x, upper side
      const bool better = best < 0 || ga > best_area * (1 + 1e-12) ||
                          (std::abs(ga - best_area) <= 1e-12 * ga &&
                           (len > best_len * (1 + 1e-12) ||
                            (std::abs(len - best_len) <= 1e-12 * len &&
                             (frags[g].centroid.x < frags[best].centroid.x ||
                              (frags[g].centroid.x == frags[best].centroid.x &&
                               frags[g].centroid.y > frags[best].centroid.y)))));
      if (better) {
        best = g;
        best_area = ga;
        best_len = len;
      }
    }
    if (best < 0) {
      merge_notes.push_back(fmt::format("fragment of hexagon ({}, {}) with area {:.3e} m^2 has no neighbour; kept",
                                        frags[f].key.first, frags[f].key.second, frags[f].area));
      continue;
    }
    const int mf = frags[f].mirror;
    const int mbest = frags[best].mirror;
    if (mf == f && uf.find(mbest) != uf.find(best)) {
      // Symmetric fragment between a mirror pair: split along the x axis.
      const int up = frags[best].centroid.y > 0 ? best : mbest;
      axis_split[f] = {up, frags[up].mirror};
      group_area[uf.find(up)] += 0.5 * frags[f].area;
      group_area[uf.find(frags[up].mirror)] += 0.5 * frags[f].area;
      merge_notes.push_back(fmt::format("fragment of hexagon ({}, {}) split along the x axis between two neighbours",
                                        frags[f].key.first, frags[f].key.second));
      continue;
    }
    const int rb = uf.find(best);
    const double merged = group_area[rf] + group_area[rb];
    uf.unite(f, best);
    group_area[uf.find(f)] = merged;
    merge_notes.push_back(fmt::format("fragment of hexagon ({}, {}) with area {:.3e} m^2 merged into hexagon ({}, {})",
                                      frags[f].key.first, frags[f].key.second, frags[f].area, frags[best].key.first,
                                      frags[best].key.second));
    if (mf != f) {
      const int rmf = uf.find(mf), rmb = uf.find(mbest);
      if (rmf != rmb) {
        const double m2 = group_area[rmf] + group_area[rmb];
        uf.unite(mf, mbest);
        group_area[uf.find(mf)] = m2;
      }
    }
  }

  // Groups become cells, ordered by their smallest member key.
  std::map<int, std::vector<int>> groups;
  for (int f = 0; f < nf; ++f)
    if (!axis_split.count(f)) groups[uf.find(f)].push_back(f);
  std::vector<std::vector<int>> members;
  for (auto& [root, list] : groups) members.push_back(list);
  auto min_key = [&](const std::vector<int>& list) {
    std::tuple<int, int, int> k{std::numeric_limits<int>::max(), 0, 0};
    for (int f : list) k = std::min(k, std::tuple<int, int, int>{frags[f].key.first, frags[f].key.second, frags[f].piece});
    return k;
  };
  std::sort(members.begin(), members.end(),
            [&](const auto& a, const auto& b) { return min_key(a) < min_key(b); });
  std::vector<int> cell_of(nf, -1);
  for (int c = 0; c < static_cast<int>(members.size()); ++c)
    for (int f : members[c]) cell_of[f] = c;

  // Half-plane boxes for axis-split fragments.
  const double big = 4.0 * spec.r_a;
  BPoly upper_box, lower_box;
  for (auto v : {Vec2{-big, 0}, Vec2{big, 0}, Vec2{big, big}, Vec2{-big, big}, Vec2{-big, 0}})
    bg::append(upper_box.outer(), BPoint(v.x, v.y));
  for (auto v : {Vec2{-big, -big}, Vec2{big, -big}, Vec2{big, 0}, Vec2{-big, 0}, Vec2{-big, -big}})
    bg::append(lower_box.outer(), BPoint(v.x, v.y));
  bg::correct(upper_box);
  bg::correct(lower_box);

  const int nc = static_cast<int>(members.size());
  std::vector<std::vector<BPoly>> cell_polys(nc);
  std::vector<std::vector<std::pair<std::vector<Vec2>, double>>> cell_parts(nc);
  for (int c = 0; c < nc; ++c)
    for (int f : members[c]) cell_parts[c].push_back({frags[f].loop, frags[f].area});
  for (const auto& [f, owners] : axis_split) {
    const BPoly poly = to_bpoly(frags[f].loop);
    for (int side = 0; side < 2; ++side) {
      BMulti half;
      bg::intersection(poly, side == 0 ? upper_box : lower_box, half);
      const int c = cell_of[side == 0 ? owners.first : owners.second];
      for (const auto& h : half) {
        const double a = bg::area(h);
        if (a > 0) cell_parts[c].push_back({from_ring(h), a});
      }
    }
  }

  graph.cells.resize(nc);
  for (int c = 0; c < nc; ++c) {
    HexCell& cell = graph.cells[c];
    cell.id = c;
    double area = 0.0;
    Vec2 m{};
    for (const auto& [loop, a] : cell_parts[c]) {
      area += a;
      m = m + loop_centroid(loop) * a;
    }
    cell.area = area;
    cell.centroid = m / area;
    cell.clipped = cell_parts[c].size() > 1 || !frags[members[c].front()].full;
    if (cell_parts[c].size() == 1) {
      cell.loop = cell_parts[c].front().first;
    } else {
      BMulti acc;
      acc.push_back(to_bpoly(cell_parts[c].front().first));
      for (std::size_t k = 1; k < cell_parts[c].size(); ++k) {
        BMulti next;
        bg::union_(acc, to_bpoly(cell_parts[c][k].first), next);
        acc = std::move(next);
      }
      const auto largest = std::max_element(acc.begin(), acc.end(), [](const BPoly& a, const BPoly& b) {
        return bg::area(a) < bg::area(b);
      });
      cell.loop = from_ring(*largest);
    }
  }

  graph.mirror.assign(nc, -1);
  for (int c = 0; c < nc; ++c) graph.mirror[c] = cell_of[frags[members[c].front()].mirror];

  std::vector<std::set<int>> adj(nc);
  auto link = [&](int a, int b) {
    if (a == b || a < 0 || b < 0) return;
    adj[a].insert(b);
    adj[b].insert(a);
  };
  auto owner_near = [&](int f, int other) {
    if (auto it = axis_split.find(f); it != axis_split.end())
      return cell_of[frags[other].centroid.y > 0 ? it->second.first : it->second.second];
    return cell_of[f];
  };
  for (int f = 0; f < nf; ++f)
    for (const auto& [g, len] : shared[f]) link(owner_near(f, g), owner_near(g, f));
  for (const auto& [f, owners] : axis_split) link(cell_of[owners.first], cell_of[owners.second]);
  graph.adjacency.resize(nc);
  for (int c = 0; c < nc; ++c) graph.adjacency[c].assign(adj[c].begin(), adj[c].end());

  for (int f = 0; f < nf; ++f) {
    CellGraph::Piece piece;
    piece.loop = frags[f].loop;
    if (auto it = axis_split.find(f); it != axis_split.end()) {
      piece.upper_owner = cell_of[it->second.first];
      piece.lower_owner = cell_of[it->second.second];
    } else {
      piece.upper_owner = piece.lower_owner = cell_of[f];
    }
    graph.lattice_pieces[frags[f].key].push_back(std::move(piece));
  }
  graph.merges = std::move(merge_notes);
  return graph;
}

// ---------------------------------------------------------------------------
// Regions and mesh utilities

std::string to_string(RegionTag tag) {
  switch (tag.kind) {
    case Region::Focal:
      return "focal";
    case Region::Clearance:
      return "clearance";
    case Region::Cell:
      return fmt::format("cell:{}", tag.cell);
    case Region::Exterior:
      return "exterior";
  }
  return "exterior";
}

RegionTag parse_region_tag(const std::string& text) {
  if (text == "focal") return {Region::Focal, -1};
  if (text == "clearance") return {Region::Clearance, -1};
  if (text == "exterior") return {Region::Exterior, -1};
  if (text.rfind("cell:", 0) == 0) return {Region::Cell, std::stoi(text.substr(5))};
  throw Error("unknown region tag '" + text + "'");
}

std::array<Vec2, p2::kNodes> Mesh::element_coords(int e) const {
  std::array<Vec2, p2::kNodes> x;
  for (int k = 0; k < p2::kNodes; ++k) x[k] = nodes[elements[e][k]];
  return x;
}

double Mesh::element_area(int e) const { return p2::element_area(element_coords(e)); }

double Mesh::element_diameter(int e) const {
  const auto x = element_coords(e);
  double d = 0.0;
  for (int a = 0; a < p2::kNodes; ++a)
    for (int b = a + 1; b < p2::kNodes; ++b) d = std::max(d, distance(x[a], x[b]));
  return d;
}

double Mesh::region_area(Region kind) const {
  double a = 0.0;
  for (int e = 0; e < num_elements(); ++e)
    if (regions[e].kind == kind) a += element_area(e);
  return a;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (int e = 0; e < num_elements(); ++e) a += element_area(e);
  return a;
}

std::vector<std::vector<int>> Mesh::cell_elements() const {
  std::vector<std::vector<int>> out(num_cells);
  for (int e = 0; e < num_elements(); ++e)
    if (regions[e].kind == Region::Cell) out[regions[e].cell].push_back(e);
  return out;
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.elements = mesh.num_elements();
  s.nodes = mesh.num_nodes();
  s.min_det_j = std::numeric_limits<double>::infinity();
  const auto& rule = p2::degree4_rule();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    s.max_diameter = std::max(s.max_diameter, mesh.element_diameter(e));
    const auto x = mesh.element_coords(e);
    for (const auto& q : rule.points) s.min_det_j = std::min(s.min_det_j, p2::map_point(x, q).det_j);
    for (const auto& q : {p2::RefPoint{0, 0}, p2::RefPoint{1, 0}, p2::RefPoint{0, 1}})
      s.min_det_j = std::min(s.min_det_j, p2::map_point(x, q).det_j);
  }
  return s;
}

namespace {

/// Merges points closer than a tolerance.
class PointRegistry {
public:
  explicit PointRegistry(double tol) : tol_(tol), cell_(4.0 * tol) {}

  int add(Vec2 p) {
    const long long gx = static_cast<long long>(std::floor(p.x / cell_));
    const long long gy = static_cast<long long>(std::floor(p.y / cell_));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        const auto it = grid_.find(key(gx + dx, gy + dy));
        if (it == grid_.end()) continue;
        for (int id : it->second)
          if (distance(points[id], p) <= tol_) return id;
      }
    const int id = static_cast<int>(points.size());
    points.push_back(p);
    grid_[key(gx, gy)].push_back(id);
    return id;
  }

  std::vector<Vec2> points;

private:
  static long long key(long long x, long long y) { return x * 1000003LL + y; }
  double tol_;
  double cell_;
  std::unordered_map<long long, std::vector<int>> grid_;
};

struct RawSegment {
  int a, b;
  int curve;
  bool splittable;
  bool hex;
};

constexpr int kCurveFocal = 0;
constexpr int kCurveBoundary = 3;

Mesh assemble_p2(const DomainSpec& spec, int num_cells, const std::vector<Vec2>& corners,
                 const std::vector<std::array<int, 3>>& tris, const std::vector<std::array<double, 3>>& radius,
                 const std::vector<RegionTag>& regions) {
  Mesh mesh;
  mesh.spec = spec;
  mesh.num_cells = num_cells;
  mesh.nodes = corners;
  mesh.regions = regions;
  mesh.edge_radius = radius;
  std::map<std::pair<int, int>, int> mid;
  for (std::size_t e = 0; e < tris.size(); ++e) {
    ElementNodes en{};
    for (int k = 0; k < 3; ++k) en[k] = tris[e][k];
    for (int k = 0; k < 3; ++k) {
      const int a = tris[e][k], b = tris[e][(k + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it == mid.end()) {
        const double r = radius[e][k];
        Vec2 m = (mesh.nodes[a] + mesh.nodes[b]) * 0.5;
        if (r > 0) {
          const Vec2 s = mesh.nodes[a] + mesh.nodes[b];
          m = s * (r / s.norm());
        }
        it = mid.emplace(key, static_cast<int>(mesh.nodes.size())).first;
        mesh.nodes.push_back(m);
      }
      en[3 + k] = it->second;
    }
    mesh.elements.push_back(en);
  }
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < 3; ++k)
      if (mesh.edge_radius[e][k] == spec.r_a) {
        const auto en = p2::edge_nodes(k);
        mesh.boundary.push_back({e, k, {mesh.elements[e][en[0]], mesh.elements[e][en[1]], mesh.elements[e][en[2]]}});
      }
  return mesh;
}

}  // namespace

Mesh build_mesh(const DomainSpec& spec, const CellGraph& graph) {
  spec.validate();
  const bool lens = !graph.empty();
  const double tol = 1e-9 * spec.r_a;
  PointRegistry reg(tol);
  std::vector<RawSegment> segs;
  std::vector<double> axis_x{0.0};

  struct Circle {
    std::vector<Vec2> poly;
    int curve;
    bool splittable;
  };
  std::vector<Circle> circles;
  const double cchord = curved_chord(spec);
  const auto focal_poly = circle_polygon(spec.r_f, circle_polygon_size(spec.r_f, cchord));
  circles.push_back({focal_poly, kCurveFocal, false});
  if (lens) {
    circles.push_back({graph.inner_polygon, -1, true});
    circles.push_back({graph.outer_polygon, -1, true});
  }
  circles.push_back({circle_polygon(spec.r_a, circle_polygon_size(spec.r_a, cchord)), kCurveBoundary, false});

  std::vector<RawSegment> chords;
  for (const auto& c : circles) {
    const int n = static_cast<int>(c.poly.size());
    for (int k = 0; k < n / 2; ++k) {
      const int a = reg.add(c.poly[k]);
      const int b = reg.add(c.poly[k + 1]);
      chords.push_back({a, b, c.curve, c.splittable, false});
    }
    axis_x.push_back(c.poly[0].x);
    axis_x.push_back(c.poly[n / 2].x);
  }

  // Upper-half hexagon edges.
  std::vector<RawSegment> hexes;
  if (lens) {
    std::set<std::pair<int, int>> seen;
    for (const auto& [key, pieces] : graph.lattice_pieces) {
      const auto v = hex_vertices(key.first, key.second, graph.edge_length);
      for (int k = 0; k < 6; ++k) {
        const Vec2 a = v[k], b = v[(k + 1) % 6];
        if (a.y < -tol || b.y < -tol) continue;
        if (std::abs(a.y) <= tol && std::abs(b.y) <= tol) {
          axis_x.push_back(a.x);
          axis_x.push_back(b.x);
          continue;
        }
        const int ia = reg.add(a), ib = reg.add(b);
        if (!seen.insert(std::minmax(ia, ib)).second) continue;
        hexes.push_back({ia, ib, -1, true, true});
        if (std::abs(a.y) <= tol) axis_x.push_back(a.x);
        if (std::abs(b.y) <= tol) axis_x.push_back(b.x);
      }
    }
  }

  // Split hexagon edges and lens chords at their mutual intersections.
  const auto& P = reg.points;
  std::vector<std::vector<std::pair<double, int>>> hex_splits(hexes.size()), chord_splits(chords.size());
  for (std::size_t h = 0; h < hexes.size(); ++h) {
    const Vec2 a = P[hexes[h].a], b = P[hexes[h].b];
    const double hx0 = std::min(a.x, b.x) - tol, hx1 = std::max(a.x, b.x) + tol;
    const double hy0 = std::min(a.y, b.y) - tol, hy1 = std::max(a.y, b.y) + tol;
    for (std::size_t c = 0; c < chords.size(); ++c) {
      if (!chords[c].splittable) continue;
      const Vec2 p = reg.points[chords[c].a], q = reg.points[chords[c].b];
      if (std::max(p.x, q.x) < hx0 || std::min(p.x, q.x) > hx1 || std::max(p.y, q.y) < hy0 ||
          std::min(p.y, q.y) > hy1)
        continue;
      const Vec2 d1 = b - a, d2 = q - p;
      const double den = cross(d1, d2);
      auto param = [](Vec2 x, Vec2 s, Vec2 e) { return dot(x - s, e - s) / (e - s).squaredNorm(); };
      // endpoint-on-segment contacts
      for (Vec2 x : {p, q}) {
        const double t = param(x, a, b);
        if (t > 1e-12 && t < 1 - 1e-12 && distance(closest_on_segment(x, a, b), x) <= tol)
          hex_splits[h].push_back({t, reg.add(x)});
      }
      for (Vec2 x : {a, b}) {
        const double t = param(x, p, q);
        if (t > 1e-12 && t < 1 - 1e-12 && distance(closest_on_segment(x, p, q), x) <= tol)
          chord_splits[c].push_back({t, reg.add(x)});
      }
      if (std::abs(den) < 1e-300) continue;
      const double t = cross(p - a, d2) / den;
      const double u = cross(p - a, d1) / den;
      if (t > 1e-12 && t < 1 - 1e-12 && u > 1e-12 && u < 1 - 1e-12) {
        const Vec2 x = a + d1 * t;
        const int id = reg.add(x);
        hex_splits[h].push_back({t, id});
        chord_splits[c].push_back({u, id});
      }
    }
  }

  auto emit = [&](const RawSegment& s, std::vector<std::pair<double, int>>& splits, bool filter) {
    std::sort(splits.begin(), splits.end());
    std::vector<int> chain{s.a};
    for (const auto& [t, id] : splits)
      if (id != chain.back()) chain.push_back(id);
    if (chain.back() != s.b) chain.push_back(s.b);
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      if (chain[k] == chain[k + 1]) continue;
      if (filter) {
        const Vec2 m = (reg.points[chain[k]] + reg.points[chain[k + 1]]) * 0.5;
        if (!point_in_polygon(m, graph.outer_polygon) || point_in_polygon(m, graph.inner_polygon)) continue;
        // a hexagon edge running along a circle chord is already represented
        bool on_chord = false;
        for (const Vec2 x : {reg.points[chain[k]], reg.points[chain[k + 1]]}) (void)x;
        const double rm = m.norm();
        if (std::abs(rm - spec.r_i) < 1e-12 * spec.r_i || std::abs(rm - spec.r_e) < 1e-12 * spec.r_e) on_chord = true;
        if (on_chord) continue;
      }
      segs.push_back({chain[k], chain[k + 1], s.curve, s.splittable, s.hex});
    }
  };
  for (std::size_t c = 0; c < chords.size(); ++c) emit(chords[c], chord_splits[c], false);
  for (std::size_t h = 0; h < hexes.size(); ++h) emit(hexes[h], hex_splits[h], true);

  // x axis from -r_a to r_a.
  std::sort(axis_x.begin(), axis_x.end());
  std::vector<int> axis_ids;
  for (double x : axis_x) {
    if (x < -spec.r_a - tol || x > spec.r_a + tol) continue;
    const int id = reg.add({x, 0.0});
    if (axis_ids.empty() || axis_ids.back() != id) axis_ids.push_back(id);
  }
  for (std::size_t k = 0; k + 1 < axis_ids.size(); ++k) segs.push_back({axis_ids[k], axis_ids[k + 1], -1, true, false});

  // Compact to the referenced points and deduplicate segments.
  detail::Pslg pslg;
  std::vector<int> remap(reg.points.size(), -1);
  std::set<std::pair<int, int>> unique;
  for (const auto& s : segs) {
    if (!unique.insert(std::minmax(s.a, s.b)).second) continue;
    for (int v : {s.a, s.b})
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(pslg.points.size());
        pslg.points.push_back(reg.points[v]);
      }
    pslg.segments.push_back({remap[s.a], remap[s.b], s.curve, s.splittable});
  }

  detail::RefineOptions opts;
  opts.max_edge = 0.98 * spec.h_target;
  opts.quality_min_edge = 0.1 * (lens ? std::min(spec.h_target, spec.l) : spec.h_target);
  detail::Triangulation tri;
  try {
    tri = detail::triangulate(pslg, opts);
  } catch (const Error& e) {
    throw Error(std::string("mesher failure: ") + e.what());
  }

  // Classify each connected region by a representative interior point.
  std::vector<RegionTag> comp_tag(tri.num_components);
  {
    std::vector<int> best(tri.num_components, -1);
    std::vector<double> best_area(tri.num_components, -1.0);
    for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
      const auto& T = tri.triangles[t];
      const double a = triangle_area(tri.points[T[0]], tri.points[T[1]], tri.points[T[2]]);
      const int c = tri.component[t];
      if (a > best_area[c]) {
        best_area[c] = a;
        best[c] = static_cast<int>(t);
      }
    }
    for (int c = 0; c < tri.num_components; ++c) {
      const auto& T = tri.triangles[best[c]];
      const Vec2 m = (tri.points[T[0]] + tri.points[T[1]] + tri.points[T[2]]) / 3.0;
      RegionTag tag{Region::Exterior, -1};
      if (point_in_polygon(m, focal_poly)) {
        tag.kind = Region::Focal;
      } else if (lens && point_in_polygon(m, graph.inner_polygon)) {
        tag.kind = Region::Clearance;
      } else if (lens && point_in_polygon(m, graph.outer_polygon)) {
        const int cell = graph.cell_at(m);
        if (cell < 0)
          throw Error(fmt::format("mesher failure: lens region near ({:.6g}, {:.6g}) has no owning cell", m.x, m.y));
        tag = {Region::Cell, cell};
      }
      comp_tag[c] = tag;
    }
  }

  // Mirror the half mesh.
  const int nu = static_cast<int>(tri.points.size());
  std::vector<Vec2> corners = tri.points;
  std::vector<int> lower(nu);
  for (int v = 0; v < nu; ++v) {
    if (tri.points[v].y == 0.0) {
      lower[v] = v;
    } else {
      if (tri.points[v].y < 0) throw Error("mesher failure: vertex below the symmetry axis");
      lower[v] = static_cast<int>(corners.size());
      corners.push_back(tri.points[v].mirrored());
    }
  }
  const double radius_of[] = {spec.r_f, spec.r_i, spec.r_e, spec.r_a};
  auto curve_radius = [&](int curve) { return curve >= 0 ? radius_of[curve] : 0.0; };
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<double, 3>> radius;
  std::vector<RegionTag> regions;
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto& T = tri.triangles[t];
    // triangulator edge i is opposite vertex i, i.e. local P2 edge (i + 1) % 3
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i) r[(i + 1) % 3] = curve_radius(tri.edge_curve[t][i]);
    tris.push_back(T);
    radius.push_back(r);
    regions.push_back(comp_tag[tri.component[t]]);
  }
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto& T = tri.triangles[t];
    tris.push_back({lower[T[0]], lower[T[2]], lower[T[1]]});
    const auto& r = radius[t];
    radius.push_back({r[2], r[1], r[0]});
    RegionTag tag = regions[t];
    if (tag.kind == Region::Cell) tag.cell = graph.mirror[tag.cell];
    regions.push_back(tag);
  }

  Mesh mesh = assemble_p2(spec, graph.size(), corners, tris, radius, regions);
  const MeshStats st = mesh_stats(mesh);
  if (!(st.min_det_j > 0)) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto x = mesh.element_coords(e);
      for (const auto& q : p2::degree4_rule().points)
        if (p2::map_point(x, q).det_j <= 0)
          throw Error(fmt::format("mesher failure: inverted element {} in region {}", e, to_string(mesh.regions[e])));
    }
  }
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<double, 3>> radius;
  std::vector<RegionTag> regions;
  tris.reserve(4 * mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& n = mesh.elements[e];
    const auto& r = mesh.edge_radius[e];
    tris.push_back({n[0], n[3], n[5]});
    radius.push_back({r[0], 0.0, r[2]});
    tris.push_back({n[3], n[1], n[4]});
    radius.push_back({r[0], r[1], 0.0});
    tris.push_back({n[5], n[4], n[2]});
    radius.push_back({0.0, r[1], r[2]});
    tris.push_back({n[3], n[4], n[5]});
    radius.push_back({0.0, 0.0, 0.0});
    for (int k = 0; k < 4; ++k) regions.push_back(mesh.regions[e]);
  }
  return assemble_p2(mesh.spec, mesh.num_cells, mesh.nodes, tris, radius, regions);
}

std::vector<int> mirror_nodes(const Mesh& mesh) {
  const double tol = 1e-9 * mesh.spec.r_a;
  PointRegistry reg(tol);
  for (const auto& p : mesh.nodes) reg.add(p);
  if (static_cast<int>(reg.points.size()) != mesh.num_nodes()) throw Error("mirror_nodes: coincident nodes");
  std::vector<int> out(mesh.num_nodes());
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const int id = reg.add(mesh.nodes[v].mirrored());
    if (id >= mesh.num_nodes()) throw Error("mirror_nodes: mesh is not symmetric about the x axis");
    out[v] = id;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto& s = mesh.spec;
  out << "# grinlens mesh v1\n";
  out << fmt::format("spec {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", s.r_f, s.r_i, s.r_e, s.r_a, s.l,
                     s.h_target);
  out << "cells " << mesh.num_cells << "\n";
  out << "nodes " << mesh.num_nodes() << "\n";
  for (int v = 0; v < mesh.num_nodes(); ++v)
    out << fmt::format("{} {:.17g} {:.17g}\n", v, mesh.nodes[v].x, mesh.nodes[v].y);
  out << "elements " << mesh.num_elements() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& n = mesh.elements[e];
    const auto& r = mesh.edge_radius[e];
    out << fmt::format("{} {} {} {} {} {} {} {} {:.17g} {:.17g} {:.17g}\n", e, n[0], n[1], n[2], n[3], n[4], n[5],
                       to_string(mesh.regions[e]), r[0], r[1], r[2]);
  }
  out << "boundary " << mesh.boundary.size() << "\n";
  for (std::size_t b = 0; b < mesh.boundary.size(); ++b) {
    const auto& be = mesh.boundary[b];
    out << fmt::format("{} {} {} {} {} {}\n", b, be.element, be.local_edge, be.nodes[0], be.nodes[1], be.nodes[2]);
  }
}

Mesh read_mesh(std::istream& in) {
  Mesh mesh;
  std::string line, word;
  auto expect = [&](const std::string& name) -> long {
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      long count = 0;
      ss >> word;
      if (word != name) throw Error("read_mesh: expected section '" + name + "', got '" + word + "'");
      if (name == "spec") {
        auto& s = mesh.spec;
        ss >> s.r_f >> s.r_i >> s.r_e >> s.r_a >> s.l >> s.h_target;
        return 0;
      }
      ss >> count;
      return count;
    }
    throw Error("read_mesh: missing section '" + name + "'");
  };
  expect("spec");
  mesh.num_cells = static_cast<int>(expect("cells"));
  const long nn = expect("nodes");
  mesh.nodes.resize(nn);
  for (long k = 0; k < nn; ++k) {
    long id;
    in >> id >> mesh.nodes[k].x >> mesh.nodes[k].y;
  }
  std::getline(in, line);
  const long ne = expect("elements");
  mesh.elements.resize(ne);
  mesh.regions.resize(ne);
  mesh.edge_radius.resize(ne);
  for (long e = 0; e < ne; ++e) {
    long id;
    std::string tag;
    in >> id;
    for (int k = 0; k < 6; ++k) in >> mesh.elements[e][k];
    in >> tag >> mesh.edge_radius[e][0] >> mesh.edge_radius[e][1] >> mesh.edge_radius[e][2];
    mesh.regions[e] = parse_region_tag(tag);
  }
  std::getline(in, line);
  const long nb = expect("boundary");
  mesh.boundary.resize(nb);
  for (long b = 0; b < nb; ++b) {
    long id;
    auto& be = mesh.boundary[b];
    in >> id >> be.element >> be.local_edge >> be.nodes[0] >> be.nodes[1] >> be.nodes[2];
  }
  if (!in) throw Error("read_mesh: truncated input");
  return mesh;
}

void write_cell_graph(std::ostream& out, const CellGraph& graph) {
  out << "# grinlens cell graph v1\n";
  out << "cells " << graph.size() << "\n";
  for (const auto& c : graph.cells)
    out << fmt::format("{} {:.17g} {:.17g} {:.17g}\n", c.id, c.centroid.x, c.centroid.y, c.area);
  std::size_t ne = 0;
  for (int i = 0; i < graph.size(); ++i)
    for (int j : graph.adjacency[i])
      if (i < j) ++ne;
  out << "edges " << ne << "\n";
  for (int i = 0; i < graph.size(); ++i)
    for (int j : graph.adjacency[i])
      if (i < j) out << i << " " << j << "\n";
}

}  // namespace grinlens
