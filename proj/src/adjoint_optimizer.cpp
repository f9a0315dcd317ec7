#include "grinlens/adjoint_optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace grinlens {

std::vector<double> GradientPair::flat() const {
  std::vector<double> x(g_v);
  x.insert(x.end(), g_u.begin(), g_u.end());
  return x;
}

double GradientPair::norm_inf() const {
  double m = 0.0;
  for (double g : g_v) m = std::max(m, std::abs(g));
  for (double g : g_u) m = std::max(m, std::abs(g));
  return m;
}

void OptimizerConfig::validate() const {
  if (!(sigma >= 0)) throw Error("optimizer: sigma must be non-negative");
  if (!(armijo_c1 > 0 && armijo_c1 < 1)) throw Error("optimizer: armijo_c1 must lie in (0, 1)");
  if (!(backtrack_factor > 0 && backtrack_factor < 1)) throw Error("optimizer: backtrack_factor must lie in (0, 1)");
  if (!(step0 > 0)) throw Error("optimizer: step0 must be positive");
  if (!(tol_step > 0) || !(tol_grad > 0)) throw Error("optimizer: tolerances must be positive");
  if (max_iters < 0 || max_backtracks < 1) throw Error("optimizer: invalid iteration limits");
}

double intensity_gain(const FieldSolution& sol, const FeSpace& space) {
  double g = 0.0;
  for (int e : space.focal_elements())
    for (const auto& q : space.element(e).quad)
      g += q.weight * std::norm(evaluate(space, sol.coeffs, e, q).value + incident_at(sol.wave, q.x).value);
  return g;
}

CVector gain_load(const FieldSolution& sol, const FeSpace& space) {
  const Mesh& mesh = space.mesh();
  CVector g = CVector::Zero(space.num_dofs());
  for (int e : space.focal_elements()) {
    const auto& n = mesh.elements[e];
    for (const auto& q : space.element(e).quad) {
      const cplx p = evaluate(space, sol.coeffs, e, q).value + incident_at(sol.wave, q.x).value;
      for (int i = 0; i < p2::kNodes; ++i) g[n[i]] += q.weight * q.value[i] * p;
    }
  }
  return g;
}

FieldSolution solve_adjoint(const FieldSolution& state, const CVector& load) {
  if (!state.solver) throw Error("solve_adjoint: state has no factorization");
  FieldSolution adj;
  adj.wave = state.wave;
  adj.solver = state.solver;
  adj.coeffs = state.solver->solve_adjoint(load);
  adj.residual = relative_residual(state.solver->matrix().adjoint(), adj.coeffs, load);
  return adj;
}

FieldSolution solve_adjoint(const SystemMatrices& sys, const FieldSolution& state, const FeSpace& space) {
  (void)sys;
  return solve_adjoint(state, -gain_load(state, space));
}

CellSensitivity cell_sensitivity(const FeSpace& space, const ElementCoefficients& coeffs, const FieldSolution& state,
                                 const FieldSolution& adjoint) {
  const auto& cells = space.cell_elements();
  const double w2 = state.wave.omega * state.wave.omega;
  CellSensitivity s;
  s.s_v.assign(cells.size(), 0.0);
  s.s_u.assign(cells.size(), 0.0);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    for (int e : cells[j]) {
      double sv = 0.0, su = 0.0;
      for (const auto& q : space.element(e).quad) {
        const FieldSample ps = evaluate(space, state.coeffs, e, q);
        const IncidentSample pi = incident_at(state.wave, q.x);
        const FieldSample lam = evaluate(space, adjoint.coeffs, e, q);
        const cplx gx = ps.grad[0] + pi.grad[0], gy = ps.grad[1] + pi.grad[1];
        sv += q.weight * (gx * std::conj(lam.grad[0]) + gy * std::conj(lam.grad[1])).real();
        su += q.weight * ((ps.value + pi.value) * std::conj(lam.value)).real();
      }
      s.s_v[j] += coeffs.a[e] * sv;
      s.s_u[j] -= coeffs.b[e] * w2 * su;
    }
  }
  return s;
}

double regularization_term(const ControlState& ctrl, const RegularizationMatrices& reg, double sigma) {
  return 0.5 * sigma * control_norm_sq(ctrl, reg);
}

GradientPair add_regularization(const ControlState& ctrl, const RegularizationMatrices& reg, double sigma,
                                const CellSensitivity& sens) {
  const int n = reg.size();
  if (ctrl.size() != n || static_cast<int>(sens.s_v.size()) != n || static_cast<int>(sens.s_u.size()) != n)
    throw Error("reduced_gradient: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(ctrl.v.data(), n), u(ctrl.u.data(), n);
  const Eigen::VectorXd rv = reg.apply(v), ru = reg.apply(u);
  GradientPair g;
  g.g_v.resize(n);
  g.g_u.resize(n);
  for (int j = 0; j < n; ++j) {
    g.g_v[j] = sigma * rv[j] + sens.s_v[j];
    g.g_u[j] = sigma * ru[j] + sens.s_u[j];
  }
  return g;
}

GradientPair reduced_gradient(const ControlState& ctrl, const FieldSolution& state, const FieldSolution& adjoint,
                              const RegularizationMatrices& reg, const FeSpace& space, const ElementCoefficients& coeffs,
                              double sigma) {
  return add_regularization(ctrl, reg, sigma, cell_sensitivity(space, coeffs, state, adjoint));
}

// ---------------------------------------------------------------------------

SingleWaveProblem::SingleWaveProblem(const FeSpace& space, ReferenceMedium ref, RegularizationMatrices reg,
                                     DesignWave wave, double sigma)
    : space_(&space), ref_(ref), reg_(std::move(reg)), wave_(wave), sigma_(sigma) {
  if (reg_.size() != space.mesh().num_cells) throw Error("single-wave problem: regularization size mismatch");
  if (space.focal_elements().empty()) throw Error("single-wave problem: mesh has no focal region");
}

FieldSolution SingleWaveProblem::solve_state(const ControlState& ctrl) const {
  const auto coeffs = element_coefficients(space_->mesh(), material_field(ctrl, ref_, num_cells()));
  return solve_scattered(assemble(*space_, coeffs, ref_, wave_));
}

CostBreakdown SingleWaveProblem::cost(const ControlState& ctrl) const {
  const FieldSolution sol = solve_state(ctrl);
  CostBreakdown c;
  c.sigma = sigma_;
  c.gain = intensity_gain(sol, *space_);
  c.gains = {c.gain};
  c.gain_term = 0.5 * c.gain;
  c.reg_term = regularization_term(ctrl, reg_, sigma_);
  c.J = c.reg_term - c.gain_term;
  return c;
}

CostBreakdown SingleWaveProblem::cost_and_gradient(const ControlState& ctrl, GradientPair& grad) const {
  const auto coeffs = element_coefficients(space_->mesh(), material_field(ctrl, ref_, num_cells()));
  const FieldSolution sol = solve_scattered(assemble(*space_, coeffs, ref_, wave_));
  const FieldSolution adj = solve_adjoint(sol, -gain_load(sol, *space_));
  grad = reduced_gradient(ctrl, sol, adj, reg_, *space_, coeffs, sigma_);
  CostBreakdown c;
  c.sigma = sigma_;
  c.gain = intensity_gain(sol, *space_);
  c.gains = {c.gain};
  c.gain_term = 0.5 * c.gain;
  c.reg_term = regularization_term(ctrl, reg_, sigma_);
  c.J = c.reg_term - c.gain_term;
  return c;
}

// ---------------------------------------------------------------------------

namespace {

double projected_gradient_norm(const ControlState& x, const GradientPair& g, const AttainableRegion& region) {
  ControlState t = x;
  for (int j = 0; j < x.size(); ++j) {
    t.v[j] -= g.g_v[j];
    t.u[j] -= g.g_u[j];
  }
  t = project_control(t, region);
  double s = 0.0;
  for (int j = 0; j < x.size(); ++j) s += std::pow(x.v[j] - t.v[j], 2) + std::pow(x.u[j] - t.u[j], 2);
  return std::sqrt(s);
}

}  // namespace

OptimizationResult optimize(const Objective& problem, const ControlState& initial, const AttainableRegion& region,
                            const OptimizerConfig& cfg, const IterationCallback& on_iterate) {
  cfg.validate();
  if (initial.size() != problem.num_cells()) throw Error("optimize: initial control has the wrong length");
  OptimizationResult res;
  res.control = project_control(initial, region);
  GradientPair g;
  CostBreakdown cost = problem.cost_and_gradient(res.control, g);

  IterationRecord rec;
  rec.cost = cost;
  rec.grad_norm = projected_gradient_norm(res.control, g, region);
  res.history.push_back(rec);
  if (on_iterate) on_iterate(rec, res.control);

  const double tol_step = cfg.tol_step * cfg.step0;
  const double tol_grad = cfg.tol_grad * rec.grad_norm;
  double s_prev = cfg.step0;
  res.termination = "max_iterations";
  const int n = res.control.size();

  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (rec.grad_norm == 0.0 || rec.grad_norm < tol_grad) {
      res.termination = "gradient_tolerance";
      break;
    }
    const double gmax = g.norm_inf();
    double s = std::min(cfg.step0, 2.0 * s_prev);
    bool accepted = false, too_small = false;
    int backtracks = 0;
    ControlState trial;
    CostBreakdown trial_cost;
    GradientPair trial_g;
    for (;; ++backtracks) {
      if (backtracks > cfg.max_backtracks)
        throw Error(fmt::format("optimize: no descent within {} backtracks at iteration {}", cfg.max_backtracks, it));
      trial = res.control;
      for (int j = 0; j < n; ++j) {
        trial.v[j] -= s * g.g_v[j] / gmax;
        trial.u[j] -= s * g.g_u[j] / gmax;
      }
      trial = project_control(trial, region);
      double disp = 0.0, slope = 0.0;
      for (int j = 0; j < n; ++j) {
        const double dv = trial.v[j] - res.control.v[j], du = trial.u[j] - res.control.u[j];
        disp = std::max({disp, std::abs(dv), std::abs(du)});
        slope += g.g_v[j] * dv + g.g_u[j] * du;
      }
      if (disp < tol_step) {
        too_small = true;
        break;
      }
      trial_cost = problem.cost_and_gradient(trial, trial_g);
      if (trial_cost.J <= cost.J + cfg.armijo_c1 * slope) {
        accepted = true;
        break;
      }
      s *= cfg.backtrack_factor;
    }
    if (too_small || !accepted) {
      res.termination = "step_tolerance";
      break;
    }
    res.control = std::move(trial);
    cost = trial_cost;
    g = std::move(trial_g);
    s_prev = s;
    rec.iter = it;
    rec.cost = cost;
    rec.step = s;
    rec.backtracks = backtracks;
    rec.grad_norm = projected_gradient_norm(res.control, g, region);
    res.history.push_back(rec);
    res.iterations = it;
    if (on_iterate) on_iterate(rec, res.control);
    if (s < tol_step) {
      res.termination = "step_tolerance";
      break;
    }
  }
  if (res.termination == "max_iterations" && rec.grad_norm < tol_grad) res.termination = "gradient_tolerance";
  return res;
}

std::string format_iteration(const IterationRecord& r) {
  return fmt::format("iter={} J={:.10e} reg_term={:.6e} gain_term={:.6e} step={:.4e} grad_norm={:.4e} backtracks={}",
                     r.iter, r.cost.J, r.cost.reg_term, r.cost.gain_term, r.step, r.grad_norm, r.backtracks);
}

}  // namespace grinlens
