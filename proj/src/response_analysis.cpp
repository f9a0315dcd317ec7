#include "grinlens/response_analysis.hpp"

#include "grinlens/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace grinlens {

namespace {
constexpr double kDeg = 180.0 / kPi;
}

void TransferFunctionTable::validate() const {
  if (frequencies.empty() || angles.empty()) throw Error("transfer function: empty grid");
  if (!std::is_sorted(frequencies.begin(), frequencies.end()) || !std::is_sorted(angles.begin(), angles.end()))
    throw Error("transfer function: grid is not sorted");
  const std::size_t n = frequencies.size() * angles.size();
  if (values.size() != n || failures.size() != n) throw Error("transfer function: grid is not rectangular");
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 1) throw Error("linear_grid: count must be positive");
  if (count == 1) return {lo};
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  g.back() = hi;
  return g;
}

TransferFunctionTable transfer_function(const LensModel& lens, const std::vector<double>& frequencies_hz,
                                        const std::vector<double>& angles_rad, int workers) {
  if (!lens.space) throw Error("transfer function: lens has no mesh");
  TransferFunctionTable tf;
  tf.lens_id = lens.id;
  tf.frequencies = frequencies_hz;
  tf.angles = angles_rad;
  const std::size_t n = frequencies_hz.size() * angles_rad.size();
  tf.values.assign(n, 0.0);
  tf.failures.assign(n, "");
  tf.validate();
  const FeSpace& space = *lens.space;
  const auto coeffs =
      element_coefficients(space.mesh(), material_field(lens.control, lens.ref, space.mesh().num_cells));
  parallel_for(static_cast<int>(n), workers, [&](int i) {
    const int fi = i / tf.num_angles(), ai = i % tf.num_angles();
    try {
      const auto wave = DesignWave::from_frequency(tf.frequencies[fi], tf.angles[ai], lens.ref.c0);
      const FieldSolution sol = solve_scattered(assemble(space, coeffs, lens.ref, wave));
      tf.values[i] = focal_mean(sol, space) / incident_at(wave, {0.0, 0.0}).value;
    } catch (const std::exception& e) {
      tf.values[i] = std::numeric_limits<double>::quiet_NaN();
      tf.failures[i] = e.what();
    }
  });
  return tf;
}

PolarTable directivity(const LensModel& lens, double frequency_hz, double resolution_deg, int workers) {
  if (!(resolution_deg > 0) || resolution_deg > 360) throw Error("directivity: invalid angular resolution");
  const int count = static_cast<int>(std::lround(360.0 / resolution_deg)) + 1;
  const auto deg = linear_grid(-180.0, 180.0, count);
  std::vector<double> rad;
  for (double d : deg) rad.push_back(d / kDeg);
  const auto tf = transfer_function(lens, {frequency_hz}, rad, workers);
  PolarTable p;
  p.frequency = frequency_hz;
  p.angles_deg = deg;
  for (int a = 0; a < tf.num_angles(); ++a) {
    if (tf.failed(0, a)) throw Error("directivity: solve failed at " + fmt::format("{} deg", deg[a]));
    p.gain_db.push_back(to_db(std::abs(tf.at(0, a))));
  }
  return p;
}

DelayFit fit_time_delay(const TransferFunctionTable& tf) {
  tf.validate();
  const int nf = tf.num_frequencies(), na = tf.num_angles();
  if (nf < 2) throw Error("fit_time_delay: at least two frequencies are required");
  DelayFit fit;
  fit.unwrapped_phase_deg.assign(static_cast<std::size_t>(nf) * na, 0.0);
  std::vector<double> mean(nf, 0.0);
  for (int a = 0; a < na; ++a) {
    double prev = 0.0;
    for (int f = 0; f < nf; ++f) {
      if (tf.failed(f, a)) throw Error("fit_time_delay: grid contains failed points");
      double ph = std::arg(tf.at(f, a));
      if (f > 0) {
        ph += 2.0 * kPi * std::round((prev - ph) / (2.0 * kPi));
        if (std::abs(ph - prev) > 120.0 / kDeg)
          fit.flags.push_back(fmt::format("angle {:.3f} deg: phase jump of {:.1f} deg between {:.1f} and {:.1f} Hz",
                                          tf.angles[a] * kDeg, (ph - prev) * kDeg, tf.frequencies[f - 1],
                                          tf.frequencies[f]));
      }
      fit.unwrapped_phase_deg[tf.index(f, a)] = ph * kDeg;
      mean[f] += ph / na;
      prev = ph;
    }
  }

  // Least squares: mean(w) = c - w dt.
  double sw = 0, sy = 0, sww = 0, swy = 0;
  for (int f = 0; f < nf; ++f) {
    const double w = 2.0 * kPi * tf.frequencies[f];
    sw += w;
    sy += mean[f];
    sww += w * w;
    swy += w * mean[f];
  }
  const double det = nf * sww - sw * sw;
  if (!(det > 0)) throw Error("fit_time_delay: frequencies are not distinct");
  const double slope = (nf * swy - sw * sy) / det;
  double c = (sy - slope * sw) / nf;
  fit.delta_t = -slope;

  // Move the whole unwrapped phase by a multiple of 360 deg so the intercept
  // lies in (-180, 180].
  const double shift = 2.0 * kPi * std::ceil((c - kPi) / (2.0 * kPi));
  c -= shift;
  fit.intercept_deg = c * kDeg;
  for (auto& p : fit.unwrapped_phase_deg) p -= shift * kDeg;

  fit.residual_phase_deg.resize(fit.unwrapped_phase_deg.size());
  for (int f = 0; f < nf; ++f)
    for (int a = 0; a < na; ++a) {
      const int i = tf.index(f, a);
      fit.residual_phase_deg[i] = fit.unwrapped_phase_deg[i] + 2.0 * kPi * tf.frequencies[f] * fit.delta_t * kDeg;
    }
  double ss = 0.0;
  for (int f = 0; f < nf; ++f) {
    const double r = (mean[f] - shift + 2.0 * kPi * tf.frequencies[f] * fit.delta_t - c) * kDeg;
    ss += r * r;
  }
  fit.fit_rms = std::sqrt(ss / nf);
  return fit;
}

double to_db(double amplitude_ratio) { return 20.0 * std::log10(amplitude_ratio); }
double from_db(double db) { return std::pow(10.0, db / 20.0); }

void write_tf_csv(std::ostream& out, const TransferFunctionTable& tf, const std::optional<DelayFit>& fit) {
  out << "frequency_hz,angle_deg,tf_db,phase_deg,residual_phase_deg\n";
  for (int f = 0; f < tf.num_frequencies(); ++f)
    for (int a = 0; a < tf.num_angles(); ++a) {
      const int i = tf.index(f, a);
      const auto v = tf.values[i];
      const double phase = fit ? fit->unwrapped_phase_deg[i] : std::arg(v) * kDeg;
      const double resid = fit ? fit->residual_phase_deg[i] : std::numeric_limits<double>::quiet_NaN();
      out << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", tf.frequencies[f], tf.angles[a] * kDeg,
                         to_db(std::abs(v)), phase, resid);
    }
}

void write_polar_csv(std::ostream& out, const PolarTable& polar, std::optional<double> floor_db) {
  out << "angle_deg,gain_db\n";
  for (std::size_t i = 0; i < polar.angles_deg.size(); ++i) {
    const double g = floor_db ? std::max(*floor_db, polar.gain_db[i]) : polar.gain_db[i];
    out << fmt::format("{:.10g},{:.10g}\n", polar.angles_deg[i], g);
  }
}

void write_delay_fit(std::ostream& out, const DelayFit& fit) {
  out << fmt::format("delta_t_s = {:.12g}\nintercept_deg = {:.10g}\nfit_rms_deg = {:.10g}\n", fit.delta_t,
                     fit.intercept_deg, fit.fit_rms);
  if (!fit.residual_phase_deg.empty()) {
    const auto [lo, hi] = std::minmax_element(fit.residual_phase_deg.begin(), fit.residual_phase_deg.end());
    out << fmt::format("residual_min_deg = {:.10g}\nresidual_max_deg = {:.10g}\n", *lo, *hi);
  }
  out << fmt::format("unwrap_flags = {}\n", fit.flags.size());
  for (const auto& f : fit.flags) out << "# " << f << "\n";
}

}  // namespace grinlens
