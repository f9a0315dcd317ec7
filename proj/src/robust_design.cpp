#include "grinlens/robust_design.hpp"

#include "grinlens/parallel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>
#include <ostream>

namespace grinlens {

int DesignSet::mirror_of(int n) const {
  const auto& w = waves.at(n);
  for (int m = 0; m < size(); ++m)
    if (waves[m].omega == w.omega && std::abs(waves[m].theta + w.theta) <= 1e-12) return m;
  return -1;
}

DesignSet build_design_set(double center_hz, const std::vector<double>& offsets_hz,
                           const std::vector<double>& angles_deg, double c0) {
  if (offsets_hz.empty() || angles_deg.empty()) throw Error("design set: offsets and angles must be non-empty");
  DesignSet set;
  set.center_freq = center_hz;
  set.freq_offsets = offsets_hz;
  for (double a : angles_deg) set.angles.push_back(a * kPi / 180.0);
  for (double df : offsets_hz) {
    const double f = center_hz + df;
    if (!(f > 0)) throw Error(fmt::format("design set: frequency {} Hz is not positive", f));
    for (double th : set.angles) set.waves.push_back(DesignWave::from_frequency(f, th, c0));
  }
  return set;
}

void write_design_set_csv(std::ostream& out, const DesignSet& set) {
  out << "index,frequency_hz,angle_deg\n";
  for (int n = 0; n < set.size(); ++n)
    out << fmt::format("{},{:.17g},{:.17g}\n", n, set.waves[n].frequency(), set.waves[n].theta * 180.0 / kPi);
}

double geometric_mean(const std::vector<double>& gains) {
  if (gains.empty()) throw Error("geometric mean of an empty set");
  const double inv_n = 1.0 / static_cast<double>(gains.size());
  double gm = 1.0;
  for (double g : gains) {
    if (!(g > 0) || !std::isfinite(g)) throw Error(fmt::format("geometric mean: degenerate intensity {}", g));
    gm *= std::pow(g, inv_n);
  }
  return gm;
}

double arithmetic_mean(const std::vector<double>& gains) {
  if (gains.empty()) throw Error("arithmetic mean of an empty set");
  return std::accumulate(gains.begin(), gains.end(), 0.0) / static_cast<double>(gains.size());
}

std::vector<double> robust_weights(const std::vector<double>& gains) {
  const double gm = geometric_mean(gains);
  const double n = static_cast<double>(gains.size());
  std::vector<double> w;
  w.reserve(gains.size());
  for (double g : gains) w.push_back(gm / (n * g));
  return w;
}

CostBreakdown robust_cost(const ControlState& ctrl, const std::vector<double>& gains, const RegularizationMatrices& reg,
                          double sigma) {
  CostBreakdown c;
  c.sigma = sigma;
  c.gains = gains;
  c.gain = geometric_mean(gains);
  const double am = arithmetic_mean(gains);
  if (c.gain > am * (1.0 + 1e-12)) throw Error("robust cost: geometric mean exceeds arithmetic mean");
  c.gain_term = 0.5 * c.gain;
  c.reg_term = regularization_term(ctrl, reg, sigma);
  c.J = c.reg_term - c.gain_term;
  return c;
}

CostBreakdown robust_cost(const ControlState& ctrl, const std::vector<FieldSolution>& solutions, const FeSpace& space,
                          const RegularizationMatrices& reg, double sigma) {
  std::vector<double> gains;
  for (const auto& s : solutions) gains.push_back(intensity_gain(s, space));
  return robust_cost(ctrl, gains, reg, sigma);
}

std::vector<CVector> robust_adjoint_loads(const std::vector<FieldSolution>& solutions, const FeSpace& space) {
  std::vector<double> gains;
  for (const auto& s : solutions) gains.push_back(intensity_gain(s, space));
  const auto w = robust_weights(gains);
  std::vector<CVector> loads;
  for (std::size_t n = 0; n < solutions.size(); ++n) loads.push_back(-w[n] * gain_load(solutions[n], space));
  return loads;
}

GradientPair robust_gradient(const ControlState& ctrl, const std::vector<FieldSolution>& solutions,
                             const std::vector<FieldSolution>& adjoints, const RegularizationMatrices& reg,
                             const FeSpace& space, const ElementCoefficients& coeffs, double sigma, int workers) {
  if (solutions.size() != adjoints.size() || solutions.empty())
    throw Error("robust_gradient: states and adjoints do not match");
  const int n = static_cast<int>(solutions.size());
  std::vector<CellSensitivity> per(n);
  parallel_for(n, workers, [&](int i) { per[i] = cell_sensitivity(space, coeffs, solutions[i], adjoints[i]); });
  CellSensitivity total;
  total.s_v.assign(reg.size(), 0.0);
  total.s_u.assign(reg.size(), 0.0);
  for (const auto& s : per) {
    if (static_cast<int>(s.s_v.size()) != reg.size()) throw Error("robust_gradient: dimension mismatch");
    for (int j = 0; j < reg.size(); ++j) {
      total.s_v[j] += s.s_v[j];
      total.s_u[j] += s.s_u[j];
    }
  }
  return add_regularization(ctrl, reg, sigma, total);
}

// ---------------------------------------------------------------------------

RobustProblem::RobustProblem(const FeSpace& space, ReferenceMedium ref, RegularizationMatrices reg, DesignSet set,
                             double sigma, int workers)
    : space_(&space), ref_(ref), reg_(std::move(reg)), set_(std::move(set)), sigma_(sigma), workers_(workers) {
  if (set_.waves.empty()) throw Error("robust problem: empty design set");
  if (reg_.size() != space.mesh().num_cells) throw Error("robust problem: regularization size mismatch");
  if (space.focal_elements().empty()) throw Error("robust problem: mesh has no focal region");
}

std::vector<FieldSolution> RobustProblem::solve_states(const ControlState& ctrl) const {
  const auto coeffs = element_coefficients(space_->mesh(), material_field(ctrl, ref_, num_cells()));
  std::vector<FieldSolution> sols(set_.size());
  parallel_for(set_.size(), workers_,
               [&](int n) {
                 sols[n] = solve_scattered(assemble(*space_, coeffs, ref_, set_.waves[n]));
                 sols[n].solver.reset();
               });
  return sols;
}

CostBreakdown RobustProblem::cost(const ControlState& ctrl) const {
  return robust_cost(ctrl, solve_states(ctrl), *space_, reg_, sigma_);
}

CostBreakdown RobustProblem::cost_and_gradient(const ControlState& ctrl, GradientPair& grad) const {
  // The sensitivities are linear in the adjoint, so each wave is solved with
  // the unweighted load -g_n and scaled by w_n once all gains are known. This
  // releases every factorization inside its own task.
  const auto coeffs = element_coefficients(space_->mesh(), material_field(ctrl, ref_, num_cells()));
  std::vector<double> gains(set_.size());
  std::vector<CellSensitivity> sens(set_.size());
  parallel_for(set_.size(), workers_, [&](int n) {
    const FieldSolution sol = solve_scattered(assemble(*space_, coeffs, ref_, set_.waves[n]));
    gains[n] = intensity_gain(sol, *space_);
    const FieldSolution adj = solve_adjoint(sol, -gain_load(sol, *space_));
    sens[n] = cell_sensitivity(*space_, coeffs, sol, adj);
  });
  const CostBreakdown c = robust_cost(ctrl, gains, reg_, sigma_);
  const auto w = robust_weights(gains);
  CellSensitivity total;
  total.s_v.assign(num_cells(), 0.0);
  total.s_u.assign(num_cells(), 0.0);
  for (int n = 0; n < set_.size(); ++n)
    for (int j = 0; j < num_cells(); ++j) {
      total.s_v[j] += w[n] * sens[n].s_v[j];
      total.s_u[j] += w[n] * sens[n].s_u[j];
    }
  grad = add_regularization(ctrl, reg_, sigma_, total);
  return c;
}

}  // namespace grinlens
