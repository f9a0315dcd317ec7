#pragma once

// Single-wave lens cost, its discrete adjoint and reduced gradient, and a
// projected steepest-descent driver with Armijo backtracking.
//
//   J(v, u) = sigma/2 (v'(D+H)v + u'(D+H)u) - G/2,   G = int_focal |p_s + p_i|^2
//
// The adjoint is defined on the assembled system: with g_k = int_focal N_k p
// and K^H lambda = -g, the derivative of -G/2 along a coefficient change is
// Re lambda^H (df - dK p_s).

#include "grinlens/attainable_materials.hpp"
#include "grinlens/helmholtz_solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace grinlens {

struct CostBreakdown {
  double J = 0.0;
  double reg_term = 0.0;
  double gain_term = 0.0;  ///< gain / 2
  double sigma = 0.0;
  double gain = 0.0;       ///< G, or the geometric mean of the G_n
  std::vector<double> gains;  ///< per design wave
};

struct GradientPair {
  std::vector<double> g_v;
  std::vector<double> g_u;

  std::vector<double> flat() const;
  double norm_inf() const;
};

struct OptimizerConfig {
  double sigma = 1.0;
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  double step0 = 1.0;          ///< largest change of any control in one step
  double tol_step = 1e-8;      ///< relative to step0
  double tol_grad = 1e-6;      ///< relative to the initial projected-gradient norm
  int max_iters = 500;
  int max_backtracks = 60;

  void validate() const;
};

/// G = int_focal |p_s + p_i|^2.
double intensity_gain(const FieldSolution& sol, const FeSpace& space);

/// g_k = int_focal N_k (p_s + p_i), so that dG = 2 Re g^H dp_s.
CVector gain_load(const FieldSolution& sol, const FeSpace& space);

/// Solves K^H lambda = load with the state's factorization.
FieldSolution solve_adjoint(const FieldSolution& state, const CVector& load);

/// Adjoint of the single-wave cost: load -g.
FieldSolution solve_adjoint(const SystemMatrices& sys, const FieldSolution& state, const FeSpace& space);

/// Per-cell integrals int Re{a grad p . conj(grad lambda)} and
/// -int Re{b w^2 p conj(lambda)}, p = p_s + p_i.
struct CellSensitivity {
  std::vector<double> s_v;
  std::vector<double> s_u;
};
CellSensitivity cell_sensitivity(const FeSpace& space, const ElementCoefficients& coeffs, const FieldSolution& state,
                                 const FieldSolution& adjoint);

/// sigma (D+H) v + s_v and sigma (D+H) u + s_u.
GradientPair reduced_gradient(const ControlState& ctrl, const FieldSolution& state, const FieldSolution& adjoint,
                              const RegularizationMatrices& reg, const FeSpace& space, const ElementCoefficients& coeffs,
                              double sigma);
GradientPair add_regularization(const ControlState& ctrl, const RegularizationMatrices& reg, double sigma,
                                const CellSensitivity& sens);

/// (sigma/2) (v'(D+H)v + u'(D+H)u).
double regularization_term(const ControlState& ctrl, const RegularizationMatrices& reg, double sigma);

/// Cost functional over the control cells.
class Objective {
public:
  virtual ~Objective() = default;
  virtual int num_cells() const = 0;
  virtual CostBreakdown cost(const ControlState& ctrl) const = 0;
  virtual CostBreakdown cost_and_gradient(const ControlState& ctrl, GradientPair& grad) const = 0;
};

/// Lens driven by one design wave.
class SingleWaveProblem final : public Objective {
public:
  SingleWaveProblem(const FeSpace& space, ReferenceMedium ref, RegularizationMatrices reg, DesignWave wave,
                    double sigma);

  int num_cells() const override { return reg_.size(); }
  CostBreakdown cost(const ControlState& ctrl) const override;
  CostBreakdown cost_and_gradient(const ControlState& ctrl, GradientPair& grad) const override;

  FieldSolution solve_state(const ControlState& ctrl) const;
  const DesignWave& wave() const { return wave_; }

private:
  const FeSpace* space_;
  ReferenceMedium ref_;
  RegularizationMatrices reg_;
  DesignWave wave_;
  double sigma_;
};

struct IterationRecord {
  int iter = 0;
  CostBreakdown cost;
  double step = 0.0;       ///< accepted step parameter (0 for the initial point)
  double grad_norm = 0.0;  ///< ||x - P(x - g)||_2
  int backtracks = 0;
};

struct OptimizationResult {
  ControlState control;
  std::vector<IterationRecord> history;  ///< initial point first
  std::string termination;               ///< step_tolerance, gradient_tolerance or max_iterations
  int iterations = 0;
};

using IterationCallback = std::function<void(const IterationRecord&, const ControlState&)>;

/// Projected steepest descent: trial x_t = P(x - s g / ||g||_inf), accepted
/// when J(x_t) <= J(x) + c1 g'(x_t - x). Each iteration starts from
/// min(step0, 2 s_prev) and backtracks by backtrack_factor.
OptimizationResult optimize(const Objective& problem, const ControlState& initial, const AttainableRegion& region,
                            const OptimizerConfig& cfg, const IterationCallback& on_iterate = {});

/// Structured log line for one iteration.
std::string format_iteration(const IterationRecord& rec);

}  // namespace grinlens
