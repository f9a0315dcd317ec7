#pragma once

// Multi-wave lens cost built on the geometric mean of the focal intensities:
//
//   J_N = sigma/2 ||(v, u)||^2 - 1/2 prod_n G_n^(1/N)
//
// Its derivative with respect to wave n's state is w_n dG_n with
// w_n = GM / (N G_n), so each wave gets the single-wave adjoint load scaled
// by w_n.

#include "grinlens/adjoint_optimizer.hpp"

#include <iosfwd>
#include <vector>

namespace grinlens {

struct DesignSet {
  std::vector<DesignWave> waves;
  double center_freq = 0.0;           ///< Hz
  std::vector<double> freq_offsets;   ///< Hz
  std::vector<double> angles;         ///< rad

  int size() const { return static_cast<int>(waves.size()); }
  /// Index of the wave with the same frequency and opposite angle, or -1.
  int mirror_of(int n) const;
};

/// Cartesian product, frequency-major. Angles are given in degrees.
DesignSet build_design_set(double center_hz, const std::vector<double>& offsets_hz,
                           const std::vector<double>& angles_deg, double c0);

/// CSV: index, frequency Hz, angle deg.
void write_design_set_csv(std::ostream& out, const DesignSet& set);

/// prod G_n^(1/N); throws if any G_n is not positive.
double geometric_mean(const std::vector<double>& gains);
double arithmetic_mean(const std::vector<double>& gains);

/// w_n = GM / (N G_n).
std::vector<double> robust_weights(const std::vector<double>& gains);

/// Cost with gain_term = GM / 2. Checks GM <= arithmetic mean.
CostBreakdown robust_cost(const ControlState& ctrl, const std::vector<double>& gains, const RegularizationMatrices& reg,
                          double sigma);
CostBreakdown robust_cost(const ControlState& ctrl, const std::vector<FieldSolution>& solutions, const FeSpace& space,
                          const RegularizationMatrices& reg, double sigma);

/// Per-wave adjoint loads -w_n g_n.
std::vector<CVector> robust_adjoint_loads(const std::vector<FieldSolution>& solutions, const FeSpace& space);

/// sigma (D+H)(v, u) plus the sum over waves of the single-wave sensitivities,
/// accumulated in wave order.
GradientPair robust_gradient(const ControlState& ctrl, const std::vector<FieldSolution>& solutions,
                             const std::vector<FieldSolution>& adjoints, const RegularizationMatrices& reg,
                             const FeSpace& space, const ElementCoefficients& coeffs, double sigma, int workers = 0);

class RobustProblem final : public Objective {
public:
  RobustProblem(const FeSpace& space, ReferenceMedium ref, RegularizationMatrices reg, DesignSet set, double sigma,
                int workers = 0);

  int num_cells() const override { return reg_.size(); }
  CostBreakdown cost(const ControlState& ctrl) const override;
  CostBreakdown cost_and_gradient(const ControlState& ctrl, GradientPair& grad) const override;

  /// States of every wave; factorizations are released.
  std::vector<FieldSolution> solve_states(const ControlState& ctrl) const;
  const DesignSet& design_set() const { return set_; }

private:
  const FeSpace* space_;
  ReferenceMedium ref_;
  RegularizationMatrices reg_;
  DesignSet set_;
  double sigma_;
  int workers_;
};

}  // namespace grinlens
