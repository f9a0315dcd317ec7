#include "grinlens/helmholtz_solver.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

namespace grinlens {

namespace {
constexpr cplx kJ{0.0, 1.0};
constexpr int kN = p2::kNodes;
}  // namespace

DesignWave DesignWave::from_frequency(double frequency_hz, double theta_rad, double c0) {
  if (!(frequency_hz > 0)) throw Error(fmt::format("design wave: frequency must be positive (got {})", frequency_hz));
  DesignWave w;
  w.omega = 2.0 * kPi * frequency_hz;
  w.theta = theta_rad;
  const double k = w.omega / c0;
  w.k_vec = {k * std::cos(theta_rad), k * std::sin(theta_rad)};
  return w;
}

void DesignWave::validate(double c0) const {
  if (!(omega > 0)) throw Error("design wave: omega must be positive");
  if (std::abs(k() - omega / c0) > 1e-12 * (omega / c0)) throw Error("design wave: |k| differs from omega/c0");
}

IncidentSample incident_at(const DesignWave& wave, Vec2 x) {
  const cplx p = std::exp(-kJ * dot(wave.k_vec, x));
  return {p, {-kJ * wave.k_vec.x * p, -kJ * wave.k_vec.y * p}};
}

std::vector<IncidentSample> incident_field(const DesignWave& wave, std::span<const Vec2> points) {
  std::vector<IncidentSample> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(incident_at(wave, x));
  return out;
}

ElementCoefficients element_coefficients(const Mesh& mesh, const MaterialField& mat) {
  if (static_cast<int>(mat.a_cell.size()) != mesh.num_cells)
    throw Error(fmt::format("assemble: material has {} cells, mesh has {}", mat.a_cell.size(), mesh.num_cells));
  ElementCoefficients c;
  c.a.resize(mesh.num_elements());
  c.b.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    c.a[e] = mat.a(mesh.regions[e]);
    c.b[e] = mat.b(mesh.regions[e]);
  }
  return c;
}

CSparse assemble_operator(const FeSpace& space, const ElementCoefficients& coeffs, const ReferenceMedium& ref,
                          const DesignWave& wave) {
  const Mesh& mesh = space.mesh();
  if (static_cast<int>(coeffs.a.size()) != mesh.num_elements() || static_cast<int>(coeffs.b.size()) != mesh.num_elements())
    throw Error(fmt::format("assemble: {}/{} coefficients for {} elements", coeffs.a.size(), coeffs.b.size(),
                            mesh.num_elements()));
  const double w2 = wave.omega * wave.omega;
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_elements()) * kN * kN + mesh.boundary.size() * 9);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double a = coeffs.a[e], b = coeffs.b[e];
    if (!(a > 0) || !(b > 0)) throw Error(fmt::format("assemble: non-positive coefficient on element {}", e));
    const auto& d = space.element(e);
    const auto& n = mesh.elements[e];
    for (int i = 0; i < kN; ++i)
      for (int j = 0; j < kN; ++j)
        trips.emplace_back(n[i], n[j], a * d.stiffness[i * kN + j] - w2 * b * d.mass[i * kN + j]);
  }
  const cplx alpha = ref.a0() * (kJ * wave.k() + 1.0 / (2.0 * mesh.spec.r_a));
  for (std::size_t bi = 0; bi < mesh.boundary.size(); ++bi) {
    const auto& m = space.boundary_edge(static_cast<int>(bi)).mass;
    const auto& n = mesh.boundary[bi].nodes;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(n[i], n[j], alpha * m[i * 3 + j]);
  }
  CSparse k(space.num_dofs(), space.num_dofs());
  k.setFromTriplets(trips.begin(), trips.end());
  k.makeCompressed();
  return k;
}

SystemMatrices assemble(const FeSpace& space, const ElementCoefficients& coeffs, const ReferenceMedium& ref,
                        const DesignWave& wave) {
  const Mesh& mesh = space.mesh();
  SystemMatrices sys;
  sys.wave = wave;
  sys.k = assemble_operator(space, coeffs, ref, wave);
  sys.f = CVector::Zero(space.num_dofs());
  const double w2 = wave.omega * wave.omega;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double da = coeffs.a[e] - ref.a0(), db = coeffs.b[e] - ref.b0();
    if (da == 0.0 && db == 0.0) continue;
    const auto& n = mesh.elements[e];
    for (const auto& q : space.element(e).quad) {
      const IncidentSample pi = incident_at(wave, q.x);
      for (int i = 0; i < kN; ++i) {
        const cplx gradterm = pi.grad[0] * q.grad[i].x + pi.grad[1] * q.grad[i].y;
        sys.f[n[i]] += q.weight * (w2 * db * pi.value * q.value[i] - da * gradterm);
      }
    }
  }
  return sys;
}

SystemMatrices assemble(const FeSpace& space, const MaterialField& mat, const DesignWave& wave) {
  return assemble(space, element_coefficients(space.mesh(), mat), mat.ref, wave);
}

void add_boundary_load(const FeSpace& space, const std::function<cplx(Vec2)>& g, CVector& f) {
  const Mesh& mesh = space.mesh();
  for (std::size_t bi = 0; bi < mesh.boundary.size(); ++bi) {
    const auto& n = mesh.boundary[bi].nodes;
    for (const auto& q : space.boundary_edge(static_cast<int>(bi)).quad) {
      const cplx gv = g(q.x);
      for (int i = 0; i < 3; ++i) f[n[i]] += q.weight * gv * q.value[i];
    }
  }
}

LinearSolver::LinearSolver(const CSparse& k) : k_(k) {
  lu_.analyzePattern(k_);
  lu_.factorize(k_);
  if (lu_.info() != Eigen::Success) throw Error("linear solver: factorization failed (" + lu_.lastErrorMessage() + ")");
}

CVector LinearSolver::solve(const CVector& b) const {
  CVector x = lu_.solve(b);
  if (lu_.info() != Eigen::Success || !x.allFinite()) throw Error("linear solver: solve failed");
  return x;
}

CVector LinearSolver::solve_adjoint(const CVector& b) const {
  // K^H x = b  <=>  K conj(x) = conj(b) for symmetric K
  return solve(b.conjugate()).conjugate();
}

double relative_residual(const CSparse& k, const CVector& x, const CVector& b) {
  const double nb = b.norm();
  const double nr = (k * x - b).norm();
  return nb > 0 ? nr / nb : nr;
}

FieldSolution solve_scattered(const SystemMatrices& sys) {
  FieldSolution sol;
  sol.wave = sys.wave;
  auto solver = std::make_shared<LinearSolver>(sys.k);
  sol.coeffs = solver->solve(sys.f);
  sol.residual = relative_residual(sys.k, sol.coeffs, sys.f);
  if (!(sol.residual < 1e-8)) throw Error(fmt::format("solve_scattered: residual {:.3e} too large", sol.residual));
  sol.solver = std::move(solver);
  return sol;
}

FieldSample evaluate(const FeSpace& space, const CVector& coeffs, int e, const QuadPoint& q) {
  const auto& n = space.mesh().elements[e];
  FieldSample s{0.0, {0.0, 0.0}};
  for (int i = 0; i < kN; ++i) {
    const cplx c = coeffs[n[i]];
    s.value += c * q.value[i];
    s.grad[0] += c * q.grad[i].x;
    s.grad[1] += c * q.grad[i].y;
  }
  return s;
}

cplx focal_mean(const FieldSolution& sol, const FeSpace& space) {
  if (space.focal_elements().empty()) throw Error("focal_mean: no focal elements");
  cplx sum = 0.0;
  for (int e : space.focal_elements())
    for (const auto& q : space.element(e).quad)
      sum += q.weight * (evaluate(space, sol.coeffs, e, q).value + incident_at(sol.wave, q.x).value);
  return sum / space.focal_area();
}

void write_field_csv(std::ostream& out, const Mesh& mesh, const CVector& coeffs) {
  out << "node,x,y,re_ps,im_ps\n";
  for (int v = 0; v < mesh.num_nodes(); ++v)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", v, mesh.nodes[v].x, mesh.nodes[v].y, coeffs[v].real(),
                       coeffs[v].imag());
}

}  // namespace grinlens
