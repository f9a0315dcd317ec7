#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace grinlens;

namespace {

struct Fixture {
  CellGraph cells;
  Mesh mesh;
  FeSpace space;
  std::vector<int> node_mirror;
  ReferenceMedium ref;

  Fixture()
      : cells(hex_tiling(test::small_domain())),
        mesh(build_mesh(test::small_domain(), cells)),
        space(mesh),
        node_mirror(mirror_nodes(mesh)) {}
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

ElementCoefficients coefficients(const Fixture& f, const ControlState& c) {
  return element_coefficients(f.mesh, material_field(c, f.ref, f.cells));
}

}  // namespace

TEST_SUITE("helmholtz_solver") {

TEST_CASE("design wave from frequency") {
  const auto w = DesignWave::from_frequency(10000.0, 0.3, 1485.0);
  CHECK(w.omega == doctest::Approx(2 * kPi * 10000.0));
  CHECK(w.k() == doctest::Approx(2 * kPi * 10000.0 / 1485.0).epsilon(1e-14));
  CHECK(w.k_vec.y / w.k_vec.x == doctest::Approx(std::tan(0.3)));
  CHECK(w.frequency() == doctest::Approx(10000.0));
  CHECK_NOTHROW(w.validate(1485.0));
  CHECK_THROWS_AS(DesignWave::from_frequency(-1.0, 0.0, 1485.0), Error);
  CHECK_THROWS_AS(w.validate(1500.0), Error);
}

TEST_CASE("incident wave value and gradient") {
  const auto w = DesignWave::from_frequency(12000.0, -0.7, 1485.0);
  const Vec2 x{0.013, -0.021};
  const auto s = incident_at(w, x);
  CHECK(std::abs(s.value) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::arg(s.value) == doctest::Approx(std::remainder(-dot(w.k_vec, x), 2 * kPi)).epsilon(1e-13));
  const double h = 1e-7;
  const auto sx = incident_at(w, {x.x + h, x.y}), mx = incident_at(w, {x.x - h, x.y});
  const auto sy = incident_at(w, {x.x, x.y + h}), my = incident_at(w, {x.x, x.y - h});
  CHECK(std::abs((sx.value - mx.value) / (2 * h) - s.grad[0]) < 1e-6 * w.k());
  CHECK(std::abs((sy.value - my.value) / (2 * h) - s.grad[1]) < 1e-6 * w.k());
  const std::vector<Vec2> pts{x, {0, 0}};
  const auto all = incident_field(w, pts);
  CHECK(all[0].value == s.value);
  CHECK(all[1].value == cplx(1.0, 0.0));
}

TEST_CASE("water has zero load and zero scattered field") {
  const auto& f = fixture();
  const auto wave = DesignWave::from_frequency(10000.0, 0.4, f.ref.c0);
  const auto sys = assemble(f.space, material_field(ControlState::zeros(f.cells.size()), f.ref, f.cells), wave);
  CHECK(sys.f.norm() == 0.0);
  const auto sol = solve_scattered(sys);
  CHECK(sol.coeffs.norm() == 0.0);
  CHECK(sol.residual == 0.0);
}

TEST_CASE("system operator is complex symmetric") {
  const auto& f = fixture();
  std::mt19937 rng(1);
  const auto co = coefficients(f, test::random_control(f.cells.size(), rng));
  const auto wave = DesignWave::from_frequency(9000.0, 0.0, f.ref.c0);
  const CSparse k = assemble_operator(f.space, co, f.ref, wave);
  const CSparse kt = k.transpose();
  CHECK((k - kt).norm() <= 1e-14 * k.norm());
  CVector x = CVector::Random(k.rows()), y = CVector::Random(k.rows());
  const cplx xy = x.transpose() * (k * y), yx = y.transpose() * (k * x);
  CHECK(std::abs(xy - yx) <= 1e-12 * std::abs(xy));
}

TEST_CASE("operator frequency dependence") {
  // K(w) = S + a0/(2 r_a) M_b - w^2 M + j w a0/c0 M_b: imaginary part linear,
  // real part quadratic in w.
  const auto& f = fixture();
  std::mt19937 rng(2);
  const auto co = coefficients(f, test::random_control(f.cells.size(), rng));
  auto op = [&](double freq) {
    return Eigen::MatrixXcd(assemble_operator(f.space, co, f.ref, DesignWave::from_frequency(freq, 0.0, f.ref.c0)));
  };
  const auto k1 = op(5000.0), k2 = op(10000.0), k3 = op(15000.0);
  CHECK((k2.imag() - 2.0 * k1.imag()).norm() <= 1e-12 * k2.imag().norm());
  const Eigen::MatrixXd d2 = k2.real() - k1.real(), d3 = k3.real() - k1.real();
  CHECK((d3 - (8.0 / 3.0) * d2).norm() <= 1e-10 * d3.norm());
}

TEST_CASE("load is linear in the contrast") {
  const auto& f = fixture();
  std::mt19937 rng(4);
  const auto c = test::random_control(f.cells.size(), rng);
  const auto wave = DesignWave::from_frequency(10000.0, 0.2, f.ref.c0);
  const auto co = coefficients(f, c);
  const auto sys = assemble(f.space, co, f.ref, wave);
  ElementCoefficients half = co;
  for (int e = 0; e < f.mesh.num_elements(); ++e) {
    half.a[e] = 0.5 * (co.a[e] + f.ref.a0());
    half.b[e] = 0.5 * (co.b[e] + f.ref.b0());
  }
  const auto sys_half = assemble(f.space, half, f.ref, wave);
  CHECK((sys.f - 2.0 * sys_half.f).norm() <= 1e-12 * sys.f.norm());
}

TEST_CASE("solution satisfies the assembled system") {
  const auto& f = fixture();
  std::mt19937 rng(6);
  const auto wave = DesignWave::from_frequency(11000.0, 0.5, f.ref.c0);
  const auto sys = assemble(f.space, coefficients(f, test::random_control(f.cells.size(), rng)), f.ref, wave);
  const auto sol = solve_scattered(sys);
  CHECK(sol.residual < 1e-10);
  CHECK(relative_residual(sys.k, sol.coeffs, sys.f) == doctest::Approx(sol.residual).epsilon(1e-6).scale(1e-14));
  const CVector b = CVector::Random(sys.k.rows());
  const CVector x = sol.solver->solve_adjoint(b);
  CHECK((CSparse(sys.k.adjoint()) * x - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("mirror symmetric lens: opposite angles give mirrored fields") {
  const auto& f = fixture();
  std::mt19937 rng(8);
  const auto c = test::symmetrize(test::random_control(f.cells.size(), rng), f.cells.mirror);
  const auto co = coefficients(f, c);
  const auto up = solve_scattered(assemble(f.space, co, f.ref, DesignWave::from_frequency(10000.0, 0.35, f.ref.c0)));
  const auto dn = solve_scattered(assemble(f.space, co, f.ref, DesignWave::from_frequency(10000.0, -0.35, f.ref.c0)));
  double worst = 0.0;
  for (int v = 0; v < f.mesh.num_nodes(); ++v)
    worst = std::max(worst, std::abs(up.coeffs[v] - dn.coeffs[f.node_mirror[v]]));
  CHECK(worst <= 1e-9 * up.coeffs.cwiseAbs().maxCoeff());
  CHECK(std::abs(focal_mean(up, f.space) - focal_mean(dn, f.space)) < 1e-10);
}

TEST_CASE("empty lens focal mean equals the disk average of the plane wave") {
  const auto& f = fixture();
  const auto wave = DesignWave::from_frequency(10000.0, 0.0, f.ref.c0);
  const auto sol =
      solve_scattered(assemble(f.space, material_field(ControlState::zeros(f.cells.size()), f.ref, f.cells), wave));
  const cplx m = focal_mean(sol, f.space);
  // 2 J1(kr)/(kr) at 10 kHz, r = 1 cm, c0 = 1485 m/s
  CHECK(m.real() == doctest::Approx(0.97778852850866263).epsilon(1e-6));
  CHECK(std::abs(m.imag()) < 1e-8);
}

TEST_CASE("penetrable cylinder with exact boundary data") {
  // Cylinder of radius r_f in a lens-free disk; the series solution supplies
  // the Robin data, so only discretization error remains.
  const ReferenceMedium ref;
  const double R = 0.02, ka = 2.0, k = ka / R;
  const CylinderSpec cyl{R, 2.0 * ref.rho0, 0.5 * ref.kappa0, ref.rho0, ref.kappa0, 0};
  const DomainSpec dom{R, 0.03, 0.035, 0.04, 0.005, (2 * kPi / k) / 8};
  const Mesh mesh = build_mesh(dom, CellGraph{});
  const FeSpace space(mesh);
  ElementCoefficients co;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const bool in = mesh.regions[e].kind == Region::Focal;
    co.a.push_back(in ? 1.0 / cyl.rho_in : ref.a0());
    co.b.push_back(in ? 1.0 / cyl.kappa_in : ref.b0());
  }
  const auto wave = DesignWave::from_frequency(k * ref.c0 / (2 * kPi), 0.0, ref.c0);
  auto sys = assemble(space, co, ref, wave);
  const cplx alpha = ref.a0() * (cplx(0, 1) * k + 1.0 / (2.0 * dom.r_a));
  add_boundary_load(
      space,
      [&](Vec2 x) {
        const double h = 1e-6 * x.norm();
        const Vec2 n = x * (1.0 / x.norm());
        const std::array<Vec2, 3> p{x, x + n * h, x - n * h};
        const auto v = cylinder_scattering(cyl, wave.omega, 0.0, p);
        return ref.a0() * (v[1] - v[2]) / (2 * h) + alpha * v[0];
      },
      sys.f);
  const auto sol = solve_scattered(sys);
  const auto exact = cylinder_scattering(cyl, wave.omega, 0.0, mesh.nodes);
  double num = 0, den = 0;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    num += std::norm(sol.coeffs[v] - exact[v]);
    den += std::norm(exact[v]);
  }
  CHECK(std::sqrt(num / den) < 1e-2);
}

TEST_CASE("coefficient and load errors") {
  const auto& f = fixture();
  CHECK_THROWS_AS(element_coefficients(f.mesh, material_field(ControlState::zeros(3), f.ref, 3)), Error);
  const auto wave = DesignWave::from_frequency(10000.0, 0.0, f.ref.c0);
  ElementCoefficients bad = coefficients(f, ControlState::zeros(f.cells.size()));
  bad.a.pop_back();
  CHECK_THROWS_AS(assemble(f.space, bad, f.ref, wave), Error);
}

TEST_CASE("field CSV") {
  const auto& f = fixture();
  CVector x = CVector::Zero(f.mesh.num_nodes());
  x[0] = cplx(1.5, -2.0);
  std::ostringstream out;
  write_field_csv(out, f.mesh, x);
  const auto s = out.str();
  CHECK(s.rfind("node,x,y,re_ps,im_ps\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == f.mesh.num_nodes() + 1);
}

}
