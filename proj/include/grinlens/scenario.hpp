#pragma once

// Scenario configuration (INI text with sections) and the runners behind the
// command line verbs. Every runner writes its resolved configuration next to
// its outputs; data files carry no timestamps.

#include "grinlens/adjoint_optimizer.hpp"
#include "grinlens/analytic_oracles.hpp"
#include "grinlens/domain_mesh.hpp"
#include "grinlens/response_analysis.hpp"
#include "grinlens/robust_design.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace grinlens {

enum class ScenarioKind { Mesh, SizeSweep, Design, RobustDesign, Analyze, GradientCheck, OracleCompare };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& text);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Design;
  std::string output_dir;  ///< empty: nothing is written
  int workers = 0;
  std::string lens_file;   ///< control CSV for analyze

  ReferenceMedium medium;

  DomainSpec domain;
  double mesh_factor = 10.0;  ///< h = shortest wavelength / mesh_factor
  bool h_override = false;    ///< domain.h_target given explicitly

  // single design wave
  double wave_frequency = 10000.0;
  double wave_angle_deg = 0.0;

  // band of the robust design and of the analysis grid
  double band_center = 10000.0;
  std::vector<double> band_offsets{-833.0, -500.0, -167.0, 167.0, 500.0, 833.0};
  std::vector<double> band_angles_deg{-50.0, -30.0, -10.0, 10.0, 30.0, 50.0};

  OptimizerConfig optimizer;
  bool sigma_focal_area = true;  ///< effective weight is sigma * pi r_f^2
  bool checkpoint = false;

  std::string region_file;  ///< empty: built-in polygons

  std::vector<double> sweep_ratios{0.25, 0.5, 1.0, 2.0};  ///< r_e / lambda
  double sweep_margin = 1.0;  ///< r_a = r_e + margin * lambda

  int analysis_frequencies = 25;
  double analysis_angle_min = -50.0, analysis_angle_max = 50.0;
  int analysis_angles = 11;
  double polar_frequency = 0.0;  ///< 0: band centre
  double polar_resolution = 5.0;
  double polar_floor_db = -5.0;

  int check_directions = 20;
  unsigned check_seed = 1;
  double check_amplitude = 0.3;
  bool check_robust = false;

  double oracle_radius = 0.02;
  double oracle_rho_hat = 2.0, oracle_kappa_hat = 0.5;
  double oracle_ka = 2.0;
  double oracle_domain_ratio = 5.0;       ///< r_a / radius with the absorbing boundary
  double oracle_convergence_ratio = 2.0;  ///< r_a / radius of the refinement study
  int oracle_refinements = 3;

  /// Effective regularization weight used by the cost.
  double effective_sigma() const;
  /// Highest frequency the scenario solves.
  double max_frequency() const;
  /// Mesh size: explicit h_target or shortest wavelength / mesh_factor.
  double mesh_size() const;
  double reduced_frequency() const { return max_frequency() * domain.l / medium.c0; }
  void validate() const;
};

/// Parses INI text. Unknown sections or keys are errors. Defaults that
/// depend on the scenario kind (sigma) are filled after parsing; `kind`
/// replaces scenario.kind when given. Without `validate` the caller must
/// call ScenarioConfig::validate after applying its overrides.
ScenarioConfig parse_config(std::istream& in, std::optional<ScenarioKind> kind = std::nullopt, bool validate = true);
ScenarioConfig load_config(const std::string& path, std::optional<ScenarioKind> kind = std::nullopt);
/// Fully resolved configuration in the same format.
void write_config(std::ostream& out, const ScenarioConfig& cfg);

/// Structured run log: every line goes to the sink and, when an output
/// directory is set, to run.log.
class RunLog {
public:
  explicit RunLog(const std::string& output_dir = "", int verbosity = 1);
  ~RunLog();
  RunLog(const RunLog&) = delete;
  RunLog& operator=(const RunLog&) = delete;
  void info(const std::string& line);
  void detail(const std::string& line);
  void warn(const std::string& line);
  const std::vector<std::string>& warnings() const { return warnings_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int verbosity_;
  std::vector<std::string> warnings_;
};

/// Tiling, mesh and FE space of one domain.
struct LensSetup {
  DomainSpec domain;
  CellGraph cells;
  std::unique_ptr<Mesh> mesh;
  std::unique_ptr<FeSpace> space;
  RegularizationMatrices reg;

  static LensSetup build(const DomainSpec& domain);
};

AttainableRegion load_region(const ScenarioConfig& cfg);

struct MeshResult {
  int cells = 0;
  MeshStats stats;
};
MeshResult run_mesh(const ScenarioConfig& cfg, RunLog& log);

struct DesignResult {
  OptimizationResult opt;
  double water_gain = 0.0;     ///< G for v = u = 0
  double final_gain = 0.0;
  double water_gain_db = 0.0;  ///< 20 log10 |<p>_focal|
  double final_gain_db = 0.0;
  int cells = 0;
  int elements = 0;
};
DesignResult run_single_design(const ScenarioConfig& cfg, RunLog& log);

struct SweepPoint {
  double ratio = 0.0;
  double r_e = 0.0;
  double r_a = 0.0;
  int cells = 0;
  double J = 0.0;
  double gain_db = 0.0;
  double water_gain_db = 0.0;
  double quadratic_reference_db = 0.0;  ///< 20 log10 (r_e / r_f)
  int iterations = 0;
  std::string termination;
  std::string error;  ///< non-empty when the point failed
};
std::vector<SweepPoint> run_sizing_sweep(const ScenarioConfig& cfg, RunLog& log);

struct RobustResult {
  OptimizationResult opt;
  DesignSet set;
  std::vector<double> gains;     ///< G_n of the final lens
  std::vector<double> gains_db;  ///< 20 log10 |<p>_focal| per wave
  TransferFunctionTable tf;
  std::vector<int> cell_mirror;
};
RobustResult run_robust_design(const ScenarioConfig& cfg, RunLog& log);

struct AnalysisResult {
  TransferFunctionTable tf;
  DelayFit fit;
  PolarTable polar;
};
AnalysisResult run_response_analysis(const ScenarioConfig& cfg, RunLog& log);

struct GradientCheckResult {
  FdReport report;
  int cells = 0;
  int waves = 0;
};
GradientCheckResult run_gradient_check(const ScenarioConfig& cfg, RunLog& log);

struct OracleCompareResult {
  double robin_l2_error = 0.0;    ///< relative L2 error of p_s with the absorbing boundary, base mesh
  std::vector<int> elements;
  std::vector<double> l2_errors;  ///< same with exact boundary data, per refinement level
  double order = 0.0;             ///< least-squares slope of log error vs log h
  double focal_mean_error = 0.0;  ///< empty lens, |<p>| vs 2 J1(k r_f) / (k r_f)
};
OracleCompareResult run_oracle_compare(const ScenarioConfig& cfg, RunLog& log);

/// Dispatches on cfg.kind.
int run_scenario(const ScenarioConfig& cfg, RunLog& log);

}  // namespace grinlens
