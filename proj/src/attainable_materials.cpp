#include "grinlens/attainable_materials.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace grinlens {

ReferenceMedium ReferenceMedium::from_rho_kappa(double rho0, double kappa0) {
  ReferenceMedium m;
  m.rho0 = rho0;
  m.kappa0 = kappa0;
  m.c0 = std::sqrt(kappa0 / rho0);
  m.validate();
  return m;
}

ReferenceMedium ReferenceMedium::from_rho_c(double rho0, double c0) {
  ReferenceMedium m;
  m.rho0 = rho0;
  m.c0 = c0;
  m.kappa0 = rho0 * c0 * c0;
  m.validate();
  return m;
}

void ReferenceMedium::validate() const {
  if (!(rho0 > 0) || !(kappa0 > 0) || !(c0 > 0)) throw Error("reference medium: properties must be positive");
  const double c = std::sqrt(kappa0 / rho0);
  if (std::abs(c - c0) > 1e-12 * c0)
    throw Error(fmt::format("reference medium: c0 = {} inconsistent with sqrt(kappa0/rho0) = {}", c0, c));
}

ControlState ControlState::zeros(int n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }

std::vector<double> ControlState::flat() const {
  std::vector<double> x(v);
  x.insert(x.end(), u.begin(), u.end());
  return x;
}

ControlState ControlState::from_flat(const std::vector<double>& x) {
  if (x.size() % 2 != 0) throw Error("control vector must have even length");
  const auto n = static_cast<std::ptrdiff_t>(x.size() / 2);
  return {std::vector<double>(x.begin(), x.begin() + n), std::vector<double>(x.begin() + n, x.end())};
}

MaterialField material_field(const ControlState& ctrl, const ReferenceMedium& ref, int num_cells) {
  if (ctrl.size() != num_cells || static_cast<int>(ctrl.u.size()) != num_cells)
    throw Error(fmt::format("material_field: control length {}/{} does not match {} cells", ctrl.v.size(),
                            ctrl.u.size(), num_cells));
  MaterialField m;
  m.ref = ref;
  m.a_cell.resize(num_cells);
  m.b_cell.resize(num_cells);
  for (int j = 0; j < num_cells; ++j) {
    m.a_cell[j] = ref.a0() * std::exp(-ctrl.v[j]);
    m.b_cell[j] = ref.b0() * std::exp(-ctrl.u[j]);
  }
  return m;
}

MaterialField material_field(const ControlState& ctrl, const ReferenceMedium& ref, const CellGraph& cells) {
  return material_field(ctrl, ref, cells.size());
}

// ---------------------------------------------------------------------------

namespace {

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
  const int o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

double boundary_distance(Vec2 p, const std::vector<Vec2>& poly, Vec2* nearest) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = closest_on_segment(p, poly[i], poly[(i + 1) % n]);
    const double d = distance(p, q);
    if (d < best) {
      best = d;
      if (nearest) *nearest = q;
    }
  }
  return best;
}

void validate_polygon(const AttainableRegion::Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) throw Error("attainable region: polygon '" + poly.family + "' has fewer than three vertices");
  if (!(polygon_area(v) > 0)) throw Error("attainable region: polygon '" + poly.family + "' has no area");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
        throw Error("attainable region: polygon '" + poly.family + "' is self-intersecting");
    }
}

}  // namespace

AttainableRegion::AttainableRegion(std::vector<Polygon> polygons) : polygons_(std::move(polygons)) {
  for (auto& p : polygons_) {
    if (p.vertices.size() >= 3 && polygon_area(p.vertices) < 0) std::reverse(p.vertices.begin(), p.vertices.end());
    validate_polygon(p);
  }
  if (!polygons_.empty() && !contains({0.0, 0.0}, 1e-12))
    throw Error("attainable region: pure water (rho_hat = kappa_hat = 1) is not admissible");
}

AttainableRegion AttainableRegion::parse(std::istream& in) {
  std::vector<Polygon> polys;
  std::string line;
  int lineno = 0;
  bool open = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    if (word == "polygon") {
      if (open) throw Error(fmt::format("region file line {}: polygon not closed with 'end'", lineno));
      Polygon p;
      if (!(ss >> p.family)) throw Error(fmt::format("region file line {}: polygon needs a family name", lineno));
      polys.push_back(std::move(p));
      open = true;
    } else if (word == "end") {
      if (!open) throw Error(fmt::format("region file line {}: 'end' without polygon", lineno));
      open = false;
    } else {
      if (!open) throw Error(fmt::format("region file line {}: vertex outside a polygon block", lineno));
      std::istringstream vs(line);
      double rho_hat = 0, kappa_hat = 0;
      if (!(vs >> rho_hat >> kappa_hat) || !(rho_hat > 0) || !(kappa_hat > 0))
        throw Error(fmt::format("region file line {}: expected two positive numbers", lineno));
      polys.back().vertices.push_back({std::log(rho_hat), std::log(kappa_hat)});
    }
  }
  if (open) throw Error("region file: last polygon not closed with 'end'");
  if (polys.empty()) throw Error("region file: no polygons");
  return AttainableRegion(std::move(polys));
}

AttainableRegion AttainableRegion::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open region file '" + path + "'");
  return parse(in);
}

const char* AttainableRegion::builtin_text() {
  return R"(# Attainable normalized properties of the two cell families.
# Vertices are "rho_hat kappa_hat" pairs, joined by straight lines in
# (ln rho_hat, ln kappa_hat). Approximate outline, replaceable.
polygon crown
1.0 1.0
1.0 0.35
1.6 0.15
6.0 0.15
6.0 0.55
3.0 1.0
end
polygon star
1.0 1.0
0.55 0.45
0.3 0.12
0.45 0.06
0.9 0.12
1.0 0.35
end
)";
}

AttainableRegion AttainableRegion::builtin() {
  std::istringstream in(builtin_text());
  return parse(in);
}

bool AttainableRegion::contains(Vec2 vu, double tol) const {
  for (const auto& p : polygons_) {
    if (point_in_polygon(vu, p.vertices)) return true;
    if (boundary_distance(vu, p.vertices, nullptr) <= tol) return true;
  }
  return false;
}

Vec2 AttainableRegion::project(Vec2 vu) const {
  if (polygons_.empty()) throw Error("project: empty attainable region");
  if (contains(vu)) return vu;
  Vec2 best = vu;
  double best_d = std::numeric_limits<double>::infinity();
  bool best_crown = false;
  for (const auto& p : polygons_) {
    Vec2 q;
    const double d = boundary_distance(vu, p.vertices, &q);
    const bool crown = p.family == "crown";
    const bool tie = std::isfinite(best_d) && std::abs(d - best_d) <= 1e-12 * std::max(d, best_d);
    if (d < best_d && !tie) {
      best = q;
      best_d = d;
      best_crown = crown;
    } else if (tie && crown && !best_crown) {
      best = q;
      best_d = d;
      best_crown = true;
    }
  }
  return best;
}

void AttainableRegion::write(std::ostream& out) const {
  for (const auto& p : polygons_) {
    out << "polygon " << p.family << "\n";
    for (const auto& v : p.vertices) out << fmt::format("{:.17g} {:.17g}\n", std::exp(v.x), std::exp(v.y));
    out << "end\n";
  }
}

ControlState project_control(const ControlState& ctrl, const AttainableRegion& region) {
  if (region.empty()) throw Error("project_control: empty attainable region");
  ControlState out = ctrl;
  for (int j = 0; j < ctrl.size(); ++j) {
    const Vec2 p = region.project({ctrl.v[j], ctrl.u[j]});
    out.v[j] = p.x;
    out.u[j] = p.y;
  }
  return out;
}

bool is_admissible(const ControlState& ctrl, const AttainableRegion& region, double tol) {
  for (int j = 0; j < ctrl.size(); ++j)
    if (!region.contains({ctrl.v[j], ctrl.u[j]}, tol)) return false;
  return true;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd RegularizationMatrices::apply(const Eigen::VectorXd& x) const {
  return d.cwiseProduct(x) + h * x;
}

RegularizationMatrices regularization_matrices(const std::vector<double>& areas,
                                               const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(areas.size());
  if (static_cast<int>(adjacency.size()) != n) throw Error("regularization_matrices: size mismatch");
  RegularizationMatrices r;
  r.d = Eigen::Map<const Eigen::VectorXd>(areas.data(), n);
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, static_cast<double>(adjacency[i].size()));
    for (int j : adjacency[i]) trips.emplace_back(i, j, -1.0);
  }
  r.h.resize(n, n);
  r.h.setFromTriplets(trips.begin(), trips.end());
  return r;
}

RegularizationMatrices regularization_matrices(const CellGraph& cells) {
  std::vector<double> areas;
  for (const auto& c : cells.cells) areas.push_back(c.area);
  return regularization_matrices(areas, cells.adjacency);
}

double control_norm_sq(const ControlState& ctrl, const RegularizationMatrices& reg) {
  if (ctrl.size() != reg.size() || static_cast<int>(ctrl.u.size()) != reg.size())
    throw Error("control_norm_sq: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(ctrl.v.data(), ctrl.size()), u(ctrl.u.data(), ctrl.size());
  return v.dot(reg.apply(v)) + u.dot(reg.apply(u));
}

void write_control_csv(std::ostream& out, const ControlState& ctrl) {
  out << "cell,v,u,rho_hat,kappa_hat\n";
  for (int j = 0; j < ctrl.size(); ++j)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", j, ctrl.v[j], ctrl.u[j], std::exp(ctrl.v[j]),
                       std::exp(ctrl.u[j]));
}

ControlState read_control_csv(std::istream& in) {
  ControlState c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == 'c' || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    int id = 0;
    double v = 0, u = 0;
    if (!(ss >> id >> v >> u)) throw Error(fmt::format("control csv line {}: malformed row", lineno));
    if (id != c.size()) throw Error(fmt::format("control csv line {}: expected cell {}, got {}", lineno, c.size(), id));
    c.v.push_back(v);
    c.u.push_back(u);
  }
  return c;
}

}  // namespace grinlens
