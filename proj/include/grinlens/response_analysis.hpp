#pragma once

// Frequency/angle response of a fixed lens: focal transfer function,
// directivity, and the linear-phase (time delay) fit of the transfer function.

#include "grinlens/attainable_materials.hpp"
#include "grinlens/fe_space.hpp"
#include "grinlens/helmholtz_solver.hpp"

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace grinlens {

/// TF(f, theta) = <p_i + p_s>_focal / p_i(0) on a rectangular grid, stored
/// frequency-major.
struct TransferFunctionTable {
  std::string lens_id;
  std::vector<double> frequencies;  ///< Hz, increasing
  std::vector<double> angles;       ///< rad, increasing
  std::vector<std::complex<double>> values;
  std::vector<std::string> failures;  ///< empty, or the error message per grid point

  int num_frequencies() const { return static_cast<int>(frequencies.size()); }
  int num_angles() const { return static_cast<int>(angles.size()); }
  int index(int fi, int ai) const { return fi * num_angles() + ai; }
  std::complex<double> at(int fi, int ai) const { return values[index(fi, ai)]; }
  bool failed(int fi, int ai) const { return !failures[index(fi, ai)].empty(); }
  void validate() const;
};

/// Lens to analyse: the mesh it lives on and its controls.
struct LensModel {
  const FeSpace* space = nullptr;
  ReferenceMedium ref;
  ControlState control;
  std::string id;
};

/// `count` equally spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, int count);

/// Solves every grid point; failures are recorded and the sweep continues.
TransferFunctionTable transfer_function(const LensModel& lens, const std::vector<double>& frequencies_hz,
                                        const std::vector<double>& angles_rad, int workers = 0);

struct PolarTable {
  double frequency = 0.0;
  std::vector<double> angles_deg;  ///< -180 .. 180
  std::vector<double> gain_db;     ///< 20 log10 |TF|
};

/// Focal gain over the full circle with the given resolution in degrees.
PolarTable directivity(const LensModel& lens, double frequency_hz, double resolution_deg, int workers = 0);

struct DelayFit {
  double delta_t = 0.0;         ///< s
  double intercept_deg = 0.0;   ///< in (-180, 180]
  std::vector<double> unwrapped_phase_deg;  ///< per grid point, frequency-major
  std::vector<double> residual_phase_deg;   ///< unwrapped + w delta_t
  double fit_rms = 0.0;         ///< rms of the angle-averaged residual about the intercept, deg
  std::vector<std::string> flags;  ///< unwrap ambiguities (jumps above 120 deg)
};

/// Unwraps the phase along frequency per angle, averages over angles and fits
/// intercept - w delta_t by least squares.
DelayFit fit_time_delay(const TransferFunctionTable& tf);

double to_db(double amplitude_ratio);
double from_db(double db);

/// CSV: frequency_hz, angle_deg, tf_db, phase_deg, residual_phase_deg.
void write_tf_csv(std::ostream& out, const TransferFunctionTable& tf, const std::optional<DelayFit>& fit);
/// CSV: angle_deg, gain_db. Values below floor_db are clamped when given.
void write_polar_csv(std::ostream& out, const PolarTable& polar, std::optional<double> floor_db = std::nullopt);
void write_delay_fit(std::ostream& out, const DelayFit& fit);

}  // namespace grinlens
