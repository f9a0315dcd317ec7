#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace grinlens;

namespace {

struct Lens {
  CellGraph cells;
  Mesh mesh;
  FeSpace space;
  RegularizationMatrices reg;
  ReferenceMedium ref;

  Lens()
      : cells(hex_tiling(test::small_domain())),
        mesh(build_mesh(test::small_domain(), cells)),
        space(mesh),
        reg(regularization_matrices(cells)) {}
};

const Lens& lens() {
  static const Lens l;
  return l;
}

// J = 1/2 |x - target|^2 over the flat control vector.
class Quadratic final : public Objective {
public:
  Quadratic(std::vector<double> target) : target_(std::move(target)) {}
  int num_cells() const override { return static_cast<int>(target_.size() / 2); }
  CostBreakdown cost(const ControlState& c) const override {
    GradientPair g;
    return cost_and_gradient(c, g);
  }
  CostBreakdown cost_and_gradient(const ControlState& c, GradientPair& g) const override {
    const auto x = c.flat();
    const int n = num_cells();
    CostBreakdown b;
    g.g_v.assign(n, 0.0);
    g.g_u.assign(n, 0.0);
    for (int i = 0; i < 2 * n; ++i) {
      const double d = x[i] - target_[i];
      b.J += 0.5 * d * d;
      (i < n ? g.g_v[i] : g.g_u[i - n]) = d;
    }
    return b;
  }

private:
  std::vector<double> target_;
};

AttainableRegion unit_box() { return AttainableRegion({{"box", {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}}}); }

}  // namespace

TEST_SUITE("adjoint_optimizer") {

TEST_CASE("gain of the bare incident wave is the focal area") {
  const auto& l = lens();
  SingleWaveProblem p(l.space, l.ref, l.reg, DesignWave::from_frequency(10000.0, 0.3, l.ref.c0), 1.0);
  const auto sol = p.solve_state(ControlState::zeros(l.cells.size()));
  const double r_f = l.mesh.spec.r_f;
  CHECK(intensity_gain(sol, l.space) == doctest::Approx(l.space.focal_area()).epsilon(1e-13));
  CHECK(l.space.focal_area() == doctest::Approx(kPi * r_f * r_f).epsilon(1e-4));
  const auto c = p.cost(ControlState::zeros(l.cells.size()));
  CHECK(c.reg_term == 0.0);
  CHECK(c.J == doctest::Approx(-0.5 * l.space.focal_area()).epsilon(1e-13));
  CHECK(c.gain_term == doctest::Approx(0.5 * c.gain));
}

TEST_CASE("gain agrees with a finer quadrature") {
  const auto& l = lens();
  std::mt19937 rng(3);
  const auto ctrl = test::random_control(l.cells.size(), rng);
  SingleWaveProblem p(l.space, l.ref, l.reg, DesignWave::from_frequency(10000.0, 0.0, l.ref.c0), 1.0);
  const auto sol = p.solve_state(ctrl);
  const auto rule = p2::collapsed_gauss_rule(8);
  double fine = 0.0;
  for (int e : l.space.focal_elements()) {
    std::array<Vec2, p2::kNodes> x;
    for (int k = 0; k < p2::kNodes; ++k) x[k] = l.mesh.nodes[l.mesh.elements[e][k]];
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
      const auto n = p2::shape(rule.points[i]);
      const auto dn = p2::shape_grad(rule.points[i]);
      Vec2 pos, dxi, deta;
      cplx ps = 0.0;
      for (int k = 0; k < p2::kNodes; ++k) {
        pos = pos + x[k] * n[k];
        dxi = dxi + x[k] * dn[k][0];
        deta = deta + x[k] * dn[k][1];
        ps += sol.coeffs[l.mesh.elements[e][k]] * n[k];
      }
      const double det = std::abs(cross(dxi, deta));
      fine += rule.weights[i] * det * std::norm(ps + incident_at(sol.wave, pos).value);
    }
  }
  CHECK(intensity_gain(sol, l.space) == doctest::Approx(fine).epsilon(1e-8));
}

TEST_CASE("adjoint identity") {
  const auto& l = lens();
  std::mt19937 rng(5);
  const auto ctrl = test::random_control(l.cells.size(), rng);
  SingleWaveProblem p(l.space, l.ref, l.reg, DesignWave::from_frequency(9500.0, 0.2, l.ref.c0), 1.0);
  const auto state = p.solve_state(ctrl);
  const CVector load = CVector::Random(l.space.num_dofs());
  const auto adj = solve_adjoint(state, load);
  const CVector delta = CVector::Random(l.space.num_dofs());
  const cplx lhs = adj.coeffs.dot(state.solver->matrix() * delta);
  const cplx rhs = load.dot(delta);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
}

TEST_CASE("gain load pairs with the state perturbation") {
  // dG = 2 Re g^H dp_s for a perturbation of the scattered field
  const auto& l = lens();
  std::mt19937 rng(7);
  SingleWaveProblem p(l.space, l.ref, l.reg, DesignWave::from_frequency(10000.0, 0.0, l.ref.c0), 1.0);
  FieldSolution sol = p.solve_state(test::random_control(l.cells.size(), rng));
  const CVector g = gain_load(sol, l.space);
  const CVector d = CVector::Random(l.space.num_dofs());
  const double h = 1e-6;
  FieldSolution plus = sol, minus = sol;
  plus.coeffs += h * d;
  minus.coeffs -= h * d;
  const double fd = (intensity_gain(plus, l.space) - intensity_gain(minus, l.space)) / (2 * h);
  CHECK(fd == doctest::Approx(2.0 * g.dot(d).real()).epsilon(1e-7));
}

TEST_CASE("regularization term") {
  const auto& l = lens();
  const int n = l.cells.size();
  CHECK(regularization_term(ControlState::zeros(n), l.reg, 3.0) == 0.0);
  ControlState c = ControlState::zeros(n);
  for (int j = 0; j < n; ++j) {
    c.v[j] = 0.4;
    c.u[j] = -0.2;
  }
  const double area = l.reg.d.sum();
  CHECK(regularization_term(c, l.reg, 2.0) == doctest::Approx(area * (0.16 + 0.04)).epsilon(1e-12));
}

TEST_CASE("reduced gradient matches finite differences") {
  const auto& l = lens();
  std::mt19937 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    const double theta = (trial - 1.5) * 0.3;
    SingleWaveProblem p(l.space, l.ref, l.reg, DesignWave::from_frequency(8000.0 + 1000.0 * trial, theta, l.ref.c0),
                        trial == 0 ? 0.0 : 1e-2);
    const auto ctrl = test::random_control(l.cells.size(), rng);
    GradientPair g;
    p.cost_and_gradient(ctrl, g);
    const auto x = ctrl.flat();
    const auto rep = fd_gradient_check([&](const std::vector<double>& y) { return p.cost(ControlState::from_flat(y)).J; },
                                       x, g.flat(), {test::random_direction(2 * l.cells.size(), rng)},
                                       {1e-4, 1e-5, 1e-6});
    CHECK(rep.worst_best_error < 1e-6);
  }
}

TEST_CASE("optimizer reaches the projected minimizer of a convex problem") {
  Quadratic q({2.0, 0.3, -0.5, -3.0});
  OptimizerConfig cfg;
  cfg.step0 = 0.5;
  const auto res = optimize(q, ControlState::zeros(2), unit_box(), cfg);
  CHECK(res.control.v[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.control.v[1] == doctest::Approx(0.3).epsilon(1e-5));
  CHECK(res.control.u[0] == doctest::Approx(-0.5).epsilon(1e-5));
  CHECK(res.control.u[1] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(res.termination != "max_iterations");
  CHECK(res.history.front().iter == 0);
  for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i].cost.J <= res.history[i - 1].cost.J);
}

TEST_CASE("optimizer stops at a stationary initial point") {
  Quadratic q({0.2, 0.1});
  const auto res = optimize(q, ControlState::from_flat({0.2, 0.1}), unit_box(), OptimizerConfig{});
  CHECK(res.termination == "gradient_tolerance");
  CHECK(res.iterations == 0);
  CHECK(res.history.size() == 1);
}

TEST_CASE("iteration limit and callback") {
  Quadratic q({5.0, 5.0});
  OptimizerConfig cfg;
  cfg.max_iters = 0;
  int calls = 0;
  const auto res = optimize(q, ControlState::zeros(1), unit_box(), cfg, [&](const IterationRecord&, const ControlState&) {
    ++calls;
  });
  CHECK(res.termination == "max_iterations");
  CHECK(calls == 1);
  CHECK(!format_iteration(res.history[0]).empty());
}

TEST_CASE("lens design iterations decrease the cost and stay admissible and symmetric") {
  const auto& l = lens();
  const auto region = AttainableRegion::builtin();
  SingleWaveProblem p(l.space, l.ref, l.reg, DesignWave::from_frequency(10000.0, 0.0, l.ref.c0),
                      1.0 * kPi * 0.01 * 0.01);
  OptimizerConfig cfg;
  cfg.max_iters = 4;
  const auto res = optimize(p, ControlState::zeros(l.cells.size()), region, cfg);
  REQUIRE(res.history.size() >= 2);
  for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i].cost.J < res.history[i - 1].cost.J);
  CHECK(res.history.back().cost.gain > res.history.front().cost.gain);
  CHECK(is_admissible(res.control, region));
  for (int j = 0; j < l.cells.size(); ++j) {
    CHECK(res.control.v[j] == doctest::Approx(res.control.v[l.cells.mirror[j]]).scale(1.0).epsilon(1e-8));
    CHECK(res.control.u[j] == doctest::Approx(res.control.u[l.cells.mirror[j]]).scale(1.0).epsilon(1e-8));
  }
}

TEST_CASE("optimizer configuration validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.armijo_c1 = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.backtrack_factor = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.step0 = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.sigma = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.max_backtracks = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  Quadratic q({0.0, 0.0});
  CHECK_THROWS_AS(optimize(q, ControlState::zeros(2), unit_box(), OptimizerConfig{}), Error);
}

}
