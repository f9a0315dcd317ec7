#include "grinlens/scenario.hpp"

#include "grinlens/parallel.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace grinlens {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

constexpr double kDeg = kPi / 180.0;

const std::map<std::string, ScenarioKind>& kind_names() {
  static const std::map<std::string, ScenarioKind> names{
      {"mesh", ScenarioKind::Mesh},
      {"size-sweep", ScenarioKind::SizeSweep},
      {"design", ScenarioKind::Design},
      {"robust-design", ScenarioKind::RobustDesign},
      {"analyze", ScenarioKind::Analyze},
      {"gradient-check", ScenarioKind::GradientCheck},
      {"oracle-compare", ScenarioKind::OracleCompare},
  };
  return names;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"scenario", {"kind", "output_dir", "workers", "lens_file"}},
      {"medium", {"rho0", "c0", "kappa0"}},
      {"domain", {"r_f", "r_i", "r_e", "r_a", "l", "mesh_factor", "h_target"}},
      {"wave", {"frequency_hz", "angle_deg"}},
      {"band", {"center_hz", "offsets_hz", "angles_deg"}},
      {"optimizer",
       {"sigma", "sigma_reference", "armijo_c1", "backtrack_factor", "step0", "tol_step", "tol_grad", "max_iters",
        "max_backtracks", "checkpoint"}},
      {"region", {"file"}},
      {"sweep", {"r_e_over_lambda", "r_a_margin"}},
      {"analysis",
       {"frequencies", "angle_min_deg", "angle_max_deg", "angles", "polar_frequency_hz", "polar_resolution_deg",
        "polar_floor_db"}},
      {"gradient_check", {"directions", "seed", "amplitude", "robust"}},
      {"oracle", {"radius", "rho_hat", "kappa_hat", "ka", "domain_ratio", "convergence_domain_ratio", "refinements"}},
  };
  return keys;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item.substr(b), &used));
      if (item.find_first_not_of(" \t", b + used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(fmt::format("config: '{}' is not a list of numbers", key));
    }
  }
  if (out.empty()) throw Error(fmt::format("config: '{}' is an empty list", key));
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt::format("{}", v[i]);
  return s;
}

template <class T>
T get(const pt::ptree& tree, const std::string& path, T fallback) {
  const auto node = tree.get_optional<std::string>(path);
  if (!node) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    return *node;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (*node == "true" || *node == "1" || *node == "yes") return true;
    if (*node == "false" || *node == "0" || *node == "no") return false;
    throw Error(fmt::format("config: '{}' must be true or false", path));
  } else {
    try {
      std::size_t used = 0;
      T value{};
      if constexpr (std::is_integral_v<T>)
        value = static_cast<T>(std::stol(*node, &used));
      else
        value = static_cast<T>(std::stod(*node, &used));
      if (node->find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(*node);
      return value;
    } catch (const std::exception&) {
      throw Error(fmt::format("config: '{}' has invalid value '{}'", path, *node));
    }
  }
}

double band_max(const ScenarioConfig& c) {
  return c.band_center + *std::max_element(c.band_offsets.begin(), c.band_offsets.end());
}
double band_min(const ScenarioConfig& c) {
  return c.band_center + *std::min_element(c.band_offsets.begin(), c.band_offsets.end());
}

fs::path out_path(const ScenarioConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

template <class F>
void write_file(const ScenarioConfig& cfg, const std::string& name, F&& body) {
  if (cfg.output_dir.empty()) return;
  std::ofstream out(out_path(cfg, name));
  if (!out) throw Error("cannot write " + out_path(cfg, name).string());
  body(out);
  if (!out) throw Error("write failed for " + out_path(cfg, name).string());
}

void prepare_output(const ScenarioConfig& cfg) {
  if (cfg.output_dir.empty()) return;
  fs::create_directories(cfg.output_dir);
  write_file(cfg, "resolved_config.ini", [&](std::ostream& o) { write_config(o, cfg); });
}

DomainSpec sized_domain(const ScenarioConfig& cfg) {
  DomainSpec d = cfg.domain;
  d.h_target = cfg.mesh_size();
  return d;
}

void reduced_frequency_guard(const ScenarioConfig& cfg, RunLog& log) {
  const double fhat = cfg.reduced_frequency();
  if (fhat >= 0.09)
    log.warn(fmt::format("reduced frequency f*l/c0 = {:.4f} >= 0.09 at {} Hz: cell homogenization is questionable",
                         fhat, cfg.max_frequency()));
}

void log_mesh(RunLog& log, const LensSetup& s) {
  const auto st = mesh_stats(*s.mesh);
  log.info(fmt::format("mesh cells={} elements={} nodes={} h_max={:.6g} h_target={:.6g}", s.cells.size(), st.elements,
                       st.nodes, st.max_diameter, s.domain.h_target));
}

void write_history(std::ostream& out, const OptimizationResult& r) {
  out << "iter,J,reg_term,gain_term,gain,step,grad_norm,backtracks\n";
  for (const auto& h : r.history)
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", h.iter, h.cost.J, h.cost.reg_term,
                       h.cost.gain_term, h.cost.gain, h.step, h.grad_norm, h.backtracks);
}

IterationCallback iteration_logger(const ScenarioConfig& cfg, RunLog& log) {
  return [&cfg, &log](const IterationRecord& rec, const ControlState& ctrl) {
    log.detail(format_iteration(rec));
    if (cfg.checkpoint)
      write_file(cfg, fmt::format("control_iter_{:04d}.csv", rec.iter),
                 [&](std::ostream& o) { write_control_csv(o, ctrl); });
  };
}

double focal_gain_db(const LensSetup& s, const ReferenceMedium& ref, const ControlState& ctrl, const DesignWave& w) {
  const auto coeffs = element_coefficients(*s.mesh, material_field(ctrl, ref, s.cells.size()));
  const auto sol = solve_scattered(assemble(*s.space, coeffs, ref, w));
  return to_db(std::abs(focal_mean(sol, *s.space)));
}

DesignResult design_on(const ScenarioConfig& cfg, const DomainSpec& domain, RunLog& log) {
  const LensSetup s = LensSetup::build(domain);
  log_mesh(log, s);
  const auto region = load_region(cfg);
  const auto wave = DesignWave::from_frequency(cfg.wave_frequency, cfg.wave_angle_deg * kDeg, cfg.medium.c0);
  SingleWaveProblem problem(*s.space, cfg.medium, s.reg, wave, cfg.effective_sigma());
  DesignResult r;
  r.cells = s.cells.size();
  r.elements = s.mesh->num_elements();
  const ControlState water = ControlState::zeros(s.cells.size());
  r.opt = optimize(problem, water, region, cfg.optimizer, iteration_logger(cfg, log));
  r.water_gain = r.opt.history.front().cost.gain;
  r.final_gain = r.opt.history.back().cost.gain;
  r.water_gain_db = focal_gain_db(s, cfg.medium, water, wave);
  r.final_gain_db = focal_gain_db(s, cfg.medium, r.opt.control, wave);
  log.info(fmt::format("design done termination={} iterations={} G_water={:.6e} G_final={:.6e} gain_db={:.4f}",
                       r.opt.termination, r.opt.iterations, r.water_gain, r.final_gain, r.final_gain_db));
  return r;
}

// Scattered field of the penetrable cylinder, solved on a lens-free mesh
// whose focal disk is the cylinder.
struct CylinderCase {
  CylinderSpec spec;
  ReferenceMedium ref;
  double omega = 0.0;
  DesignWave wave;
  DomainSpec domain;
};

CylinderCase cylinder_case(const ScenarioConfig& cfg, double domain_ratio) {
  CylinderCase c;
  c.ref = cfg.medium;
  const double R = cfg.oracle_radius;
  c.spec = {R, cfg.oracle_rho_hat * c.ref.rho0, cfg.oracle_kappa_hat * c.ref.kappa0, c.ref.rho0, c.ref.kappa0, 0};
  const double k = cfg.oracle_ka / R;
  c.omega = k * c.ref.c0;
  c.wave = DesignWave::from_frequency(c.omega / (2.0 * kPi), 0.0, c.ref.c0);
  const double lambda = 2.0 * kPi / k;
  const double r_a = domain_ratio * R;
  c.domain = {R, 0.5 * (R + r_a), 0.75 * r_a + 0.25 * R, r_a, cfg.domain.l, lambda / cfg.mesh_factor};
  return c;
}

double cylinder_l2_error(const CylinderCase& c, const Mesh& mesh, bool exact_boundary_data) {
  const FeSpace space(mesh);
  ElementCoefficients co;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const bool in = mesh.regions[e].kind == Region::Focal;
    co.a.push_back(in ? 1.0 / c.spec.rho_in : c.ref.a0());
    co.b.push_back(in ? 1.0 / c.spec.kappa_in : c.ref.b0());
  }
  auto sys = assemble(space, co, c.ref, c.wave);
  if (exact_boundary_data) {
    // g = a0 dp/dn + alpha p of the series solution, so the discrete problem
    // has the series as its exact solution.
    const cplx alpha = c.ref.a0() * (cplx(0.0, 1.0) * c.wave.k() + 1.0 / (2.0 * c.domain.r_a));
    add_boundary_load(
        space,
        [&](Vec2 x) {
          const double r = x.norm(), h = 1e-6 * r;
          const Vec2 u = x * (1.0 / r);
          const std::array<Vec2, 3> pts{x, x + u * h, x - u * h};
          const auto v = cylinder_scattering(c.spec, c.omega, 0.0, pts);
          return c.ref.a0() * (v[1] - v[2]) / (2.0 * h) + alpha * v[0];
        },
        sys.f);
  }
  const auto sol = solve_scattered(sys);
  double num = 0.0, den = 0.0;
  std::vector<Vec2> pts;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    pts.clear();
    for (const auto& q : space.element(e).quad) pts.push_back(q.x);
    const auto ex = cylinder_scattering(c.spec, c.omega, 0.0, pts);
    std::size_t i = 0;
    for (const auto& q : space.element(e).quad) {
      const cplx ph = evaluate(space, sol.coeffs, e, q).value;
      num += q.weight * std::norm(ph - ex[i]);
      den += q.weight * std::norm(ex[i]);
      ++i;
    }
  }
  return std::sqrt(num / den);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ScenarioKind kind) {
  for (const auto& [name, k] : kind_names())
    if (k == kind) return name;
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& text) {
  const auto it = kind_names().find(text);
  if (it == kind_names().end()) throw Error("unknown scenario kind '" + text + "'");
  return it->second;
}

double ScenarioConfig::effective_sigma() const {
  return sigma_focal_area ? optimizer.sigma * kPi * domain.r_f * domain.r_f : optimizer.sigma;
}

double ScenarioConfig::max_frequency() const {
  switch (kind) {
    case ScenarioKind::Design:
    case ScenarioKind::SizeSweep:
      return wave_frequency;
    case ScenarioKind::GradientCheck:
      return check_robust ? band_max(*this) : wave_frequency;
    case ScenarioKind::OracleCompare:
      return oracle_ka / oracle_radius * medium.c0 / (2.0 * kPi);
    default:
      return band_max(*this);
  }
}

double ScenarioConfig::mesh_size() const {
  return h_override ? domain.h_target : medium.c0 / max_frequency() / mesh_factor;
}

void ScenarioConfig::validate() const {
  medium.validate();
  if (kind != ScenarioKind::SizeSweep && kind != ScenarioKind::OracleCompare) domain.validate();
  if (!(mesh_factor > 0)) throw Error("config: mesh_factor must be positive");
  if (h_override && !(domain.h_target > 0)) throw Error("config: h_target must be positive");
  if (!(wave_frequency > 0)) throw Error("config: wave frequency must be positive");
  if (!(band_center > 0) || band_offsets.empty() || band_angles_deg.empty())
    throw Error("config: band needs a positive centre, offsets and angles");
  if (!(band_min(*this) > 0)) throw Error("config: band contains a non-positive frequency");
  optimizer.validate();
  if (workers < 0) throw Error("config: workers must be non-negative");
  if (!region_file.empty() && !fs::exists(region_file))
    throw Error("config: region file '" + region_file + "' does not exist");
  if (kind == ScenarioKind::Analyze) {
    if (lens_file.empty()) throw Error("config: analyze needs scenario.lens_file");
    if (!fs::exists(lens_file)) throw Error("config: lens file '" + lens_file + "' does not exist");
  }
  for (double r : sweep_ratios)
    if (!(r > 0)) throw Error("config: sweep ratios must be positive");
  if (!(sweep_margin > 0)) throw Error("config: sweep r_a_margin must be positive");
  if (analysis_frequencies < 2 || analysis_angles < 1) throw Error("config: analysis grid too small");
  if (!(analysis_angle_max >= analysis_angle_min)) throw Error("config: analysis angle range is reversed");
  if (!(polar_resolution > 0)) throw Error("config: polar resolution must be positive");
  if (check_directions < 1 || !(check_amplitude > 0)) throw Error("config: invalid gradient check settings");
  if (!(oracle_radius > 0) || !(oracle_rho_hat > 0) || !(oracle_kappa_hat > 0) || !(oracle_ka > 0) ||
      !(oracle_domain_ratio > 1) || !(oracle_convergence_ratio > 1) || oracle_refinements < 0)
    throw Error("config: invalid oracle settings");
}

ScenarioConfig parse_config(std::istream& in, std::optional<ScenarioKind> kind, bool validate) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw Error("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw Error(fmt::format("config: unknown key '{}' in [{}]", key, section));
  }

  ScenarioConfig c;
  c.kind = kind ? *kind : parse_scenario_kind(get<std::string>(tree, "scenario.kind", to_string(c.kind)));
  c.output_dir = get<std::string>(tree, "scenario.output_dir", c.output_dir);
  c.workers = get<int>(tree, "scenario.workers", c.workers);
  c.lens_file = get<std::string>(tree, "scenario.lens_file", c.lens_file);

  const double rho0 = get<double>(tree, "medium.rho0", ReferenceMedium{}.rho0);
  const auto c0 = tree.get_optional<std::string>("medium.c0");
  const auto kappa0 = tree.get_optional<std::string>("medium.kappa0");
  if (kappa0) {
    c.medium = ReferenceMedium::from_rho_kappa(rho0, get<double>(tree, "medium.kappa0", 0.0));
    if (c0) {
      const double given = get<double>(tree, "medium.c0", 0.0);
      if (std::abs(given - c.medium.c0) > 0.005 * c.medium.c0)
        throw Error(fmt::format("config: c0 = {} differs from sqrt(kappa0/rho0) = {} by more than 0.5%", given,
                                c.medium.c0));
    }
  } else {
    c.medium = ReferenceMedium::from_rho_c(rho0, get<double>(tree, "medium.c0", ReferenceMedium{}.c0));
  }

  auto& d = c.domain;
  d.r_f = get(tree, "domain.r_f", d.r_f);
  d.r_i = get(tree, "domain.r_i", d.r_i);
  d.r_e = get(tree, "domain.r_e", d.r_e);
  d.r_a = get(tree, "domain.r_a", d.r_a);
  d.l = get(tree, "domain.l", d.l);
  c.mesh_factor = get(tree, "domain.mesh_factor", c.mesh_factor);
  if (tree.get_optional<std::string>("domain.h_target")) {
    c.h_override = true;
    d.h_target = get(tree, "domain.h_target", 0.0);
  }

  c.wave_frequency = get(tree, "wave.frequency_hz", c.wave_frequency);
  c.wave_angle_deg = get(tree, "wave.angle_deg", c.wave_angle_deg);

  c.band_center = get(tree, "band.center_hz", c.band_center);
  if (auto v = tree.get_optional<std::string>("band.offsets_hz")) c.band_offsets = parse_list("band.offsets_hz", *v);
  if (auto v = tree.get_optional<std::string>("band.angles_deg")) c.band_angles_deg = parse_list("band.angles_deg", *v);

  auto& o = c.optimizer;
  o.sigma = c.kind == ScenarioKind::RobustDesign ? 1e-3 : 1.0;
  o.sigma = get(tree, "optimizer.sigma", o.sigma);
  const auto sref = get<std::string>(tree, "optimizer.sigma_reference", "focal_area");
  if (sref != "focal_area" && sref != "absolute")
    throw Error("config: optimizer.sigma_reference must be focal_area or absolute");
  c.sigma_focal_area = sref == "focal_area";
  o.armijo_c1 = get(tree, "optimizer.armijo_c1", o.armijo_c1);
  o.backtrack_factor = get(tree, "optimizer.backtrack_factor", o.backtrack_factor);
  o.step0 = get(tree, "optimizer.step0", o.step0);
  o.tol_step = get(tree, "optimizer.tol_step", o.tol_step);
  o.tol_grad = get(tree, "optimizer.tol_grad", o.tol_grad);
  o.max_iters = get(tree, "optimizer.max_iters", o.max_iters);
  o.max_backtracks = get(tree, "optimizer.max_backtracks", o.max_backtracks);
  c.checkpoint = get(tree, "optimizer.checkpoint", c.checkpoint);

  c.region_file = get<std::string>(tree, "region.file", c.region_file);

  if (auto v = tree.get_optional<std::string>("sweep.r_e_over_lambda"))
    c.sweep_ratios = parse_list("sweep.r_e_over_lambda", *v);
  c.sweep_margin = get(tree, "sweep.r_a_margin", c.sweep_margin);

  c.analysis_frequencies = get(tree, "analysis.frequencies", c.analysis_frequencies);
  c.analysis_angle_min = get(tree, "analysis.angle_min_deg", c.analysis_angle_min);
  c.analysis_angle_max = get(tree, "analysis.angle_max_deg", c.analysis_angle_max);
  c.analysis_angles = get(tree, "analysis.angles", c.analysis_angles);
  c.polar_frequency = get(tree, "analysis.polar_frequency_hz", c.polar_frequency);
  c.polar_resolution = get(tree, "analysis.polar_resolution_deg", c.polar_resolution);
  c.polar_floor_db = get(tree, "analysis.polar_floor_db", c.polar_floor_db);

  c.check_directions = get(tree, "gradient_check.directions", c.check_directions);
  c.check_seed = get(tree, "gradient_check.seed", c.check_seed);
  c.check_amplitude = get(tree, "gradient_check.amplitude", c.check_amplitude);
  c.check_robust = get(tree, "gradient_check.robust", c.check_robust);

  c.oracle_radius = get(tree, "oracle.radius", c.oracle_radius);
  c.oracle_rho_hat = get(tree, "oracle.rho_hat", c.oracle_rho_hat);
  c.oracle_kappa_hat = get(tree, "oracle.kappa_hat", c.oracle_kappa_hat);
  c.oracle_ka = get(tree, "oracle.ka", c.oracle_ka);
  c.oracle_domain_ratio = get(tree, "oracle.domain_ratio", c.oracle_domain_ratio);
  c.oracle_convergence_ratio = get(tree, "oracle.convergence_domain_ratio", c.oracle_convergence_ratio);
  c.oracle_refinements = get(tree, "oracle.refinements", c.oracle_refinements);

  if (c.polar_frequency == 0.0) c.polar_frequency = c.band_center;
  if (validate) c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path, std::optional<ScenarioKind> kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_config(in, kind);
}

void write_config(std::ostream& out, const ScenarioConfig& c) {
  out << "[scenario]\n";
  out << fmt::format("kind = {}\n", to_string(c.kind));
  if (!c.output_dir.empty()) out << fmt::format("output_dir = {}\n", c.output_dir);
  out << fmt::format("workers = {}\n", c.workers);
  if (!c.lens_file.empty()) out << fmt::format("lens_file = {}\n", c.lens_file);
  out << fmt::format("\n[medium]\nrho0 = {}\nkappa0 = {}\nc0 = {}\n", c.medium.rho0, c.medium.kappa0, c.medium.c0);
  out << fmt::format("\n[domain]\nr_f = {}\nr_i = {}\nr_e = {}\nr_a = {}\nl = {}\nmesh_factor = {}\nh_target = {}\n",
                     c.domain.r_f, c.domain.r_i, c.domain.r_e, c.domain.r_a, c.domain.l, c.mesh_factor, c.mesh_size());
  out << fmt::format("\n[wave]\nfrequency_hz = {}\nangle_deg = {}\n", c.wave_frequency, c.wave_angle_deg);
  out << fmt::format("\n[band]\ncenter_hz = {}\noffsets_hz = {}\nangles_deg = {}\n", c.band_center,
                     format_list(c.band_offsets), format_list(c.band_angles_deg));
  const auto& o = c.optimizer;
  out << fmt::format(
      "\n[optimizer]\nsigma = {}\nsigma_reference = {}\narmijo_c1 = {}\nbacktrack_factor = {}\nstep0 = {}\n"
      "tol_step = {}\ntol_grad = {}\nmax_iters = {}\nmax_backtracks = {}\ncheckpoint = {}\n",
      o.sigma, c.sigma_focal_area ? "focal_area" : "absolute", o.armijo_c1, o.backtrack_factor, o.step0, o.tol_step,
      o.tol_grad, o.max_iters, o.max_backtracks, c.checkpoint);
  out << "\n[region]\n";
  if (!c.region_file.empty()) out << fmt::format("file = {}\n", c.region_file);
  out << fmt::format("\n[sweep]\nr_e_over_lambda = {}\nr_a_margin = {}\n", format_list(c.sweep_ratios),
                     c.sweep_margin);
  out << fmt::format(
      "\n[analysis]\nfrequencies = {}\nangle_min_deg = {}\nangle_max_deg = {}\nangles = {}\npolar_frequency_hz = {}\n"
      "polar_resolution_deg = {}\npolar_floor_db = {}\n",
      c.analysis_frequencies, c.analysis_angle_min, c.analysis_angle_max, c.analysis_angles, c.polar_frequency,
      c.polar_resolution, c.polar_floor_db);
  out << fmt::format("\n[gradient_check]\ndirections = {}\nseed = {}\namplitude = {}\nrobust = {}\n",
                     c.check_directions, c.check_seed, c.check_amplitude, c.check_robust);
  out << fmt::format(
      "\n[oracle]\nradius = {}\nrho_hat = {}\nkappa_hat = {}\nka = {}\ndomain_ratio = {}\n"
      "convergence_domain_ratio = {}\nrefinements = {}\n",
      c.oracle_radius, c.oracle_rho_hat, c.oracle_kappa_hat, c.oracle_ka, c.oracle_domain_ratio,
      c.oracle_convergence_ratio, c.oracle_refinements);
}

// ---------------------------------------------------------------------------

struct RunLog::Impl {
  std::ofstream file;
};

RunLog::RunLog(const std::string& output_dir, int verbosity) : impl_(std::make_unique<Impl>()), verbosity_(verbosity) {
  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    impl_->file.open(fs::path(output_dir) / "run.log");
    if (!impl_->file) throw Error("cannot write run.log in " + output_dir);
  }
}

RunLog::~RunLog() = default;

void RunLog::info(const std::string& line) {
  if (verbosity_ >= 1) std::cerr << line << "\n";
  if (impl_->file) impl_->file << line << "\n" << std::flush;
}

void RunLog::detail(const std::string& line) {
  if (verbosity_ >= 2) std::cerr << line << "\n";
  if (impl_->file) impl_->file << line << "\n" << std::flush;
}

void RunLog::warn(const std::string& line) {
  warnings_.push_back(line);
  std::cerr << "warning: " << line << "\n";
  if (impl_->file) impl_->file << "warning: " << line << "\n" << std::flush;
}

LensSetup LensSetup::build(const DomainSpec& domain) {
  LensSetup s;
  s.domain = domain;
  s.cells = hex_tiling(domain);
  s.mesh = std::make_unique<Mesh>(build_mesh(domain, s.cells));
  s.space = std::make_unique<FeSpace>(*s.mesh);
  s.reg = regularization_matrices(s.cells);
  return s;
}

AttainableRegion load_region(const ScenarioConfig& cfg) {
  return cfg.region_file.empty() ? AttainableRegion::builtin() : AttainableRegion::load(cfg.region_file);
}

MeshResult run_mesh(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  reduced_frequency_guard(cfg, log);
  const LensSetup s = LensSetup::build(sized_domain(cfg));
  log_mesh(log, s);
  for (const auto& m : s.cells.merges) log.detail("merge " + m);
  MeshResult r{s.cells.size(), mesh_stats(*s.mesh)};
  write_file(cfg, "mesh.txt", [&](std::ostream& o) { write_mesh(o, *s.mesh); });
  write_file(cfg, "cells.txt", [&](std::ostream& o) { write_cell_graph(o, s.cells); });
  write_file(cfg, "mesh_stats.txt", [&](std::ostream& o) {
    o << fmt::format("cells = {}\nelements = {}\nnodes = {}\nmax_diameter = {:.10g}\nmin_det_j = {:.10g}\n", r.cells,
                     r.stats.elements, r.stats.nodes, r.stats.max_diameter, r.stats.min_det_j);
  });
  return r;
}

DesignResult run_single_design(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  reduced_frequency_guard(cfg, log);
  DesignResult r = design_on(cfg, sized_domain(cfg), log);
  write_file(cfg, "control.csv", [&](std::ostream& o) { write_control_csv(o, r.opt.control); });
  write_file(cfg, "history.csv", [&](std::ostream& o) { write_history(o, r.opt); });
  write_file(cfg, "summary.txt", [&](std::ostream& o) {
    o << fmt::format(
        "termination = {}\niterations = {}\ncells = {}\nelements = {}\nwater_gain = {:.12g}\nfinal_gain = {:.12g}\n"
        "water_gain_db = {:.10g}\nfinal_gain_db = {:.10g}\n",
        r.opt.termination, r.opt.iterations, r.cells, r.elements, r.water_gain, r.final_gain, r.water_gain_db,
        r.final_gain_db);
  });
  return r;
}

std::vector<SweepPoint> run_sizing_sweep(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  reduced_frequency_guard(cfg, log);
  const double lambda = cfg.medium.c0 / cfg.wave_frequency;
  std::vector<SweepPoint> pts;
  for (double ratio : cfg.sweep_ratios) {
    SweepPoint p;
    p.ratio = ratio;
    p.r_e = ratio * lambda;
    p.r_a = p.r_e + cfg.sweep_margin * lambda;
    p.quadratic_reference_db = 20.0 * std::log10(p.r_e / cfg.domain.r_f);
    log.info(fmt::format("sweep point r_e/lambda={} r_e={:.6g} r_a={:.6g}", ratio, p.r_e, p.r_a));
    try {
      DomainSpec d = sized_domain(cfg);
      d.r_e = p.r_e;
      d.r_a = p.r_a;
      const DesignResult r = design_on(cfg, d, log);
      p.cells = r.cells;
      p.J = r.opt.history.back().cost.J;
      p.gain_db = r.final_gain_db;
      p.water_gain_db = r.water_gain_db;
      p.iterations = r.opt.iterations;
      p.termination = r.opt.termination;
    } catch (const std::exception& e) {
      p.error = e.what();
      log.warn(fmt::format("sweep point r_e/lambda={} failed: {}", ratio, p.error));
    }
    pts.push_back(p);
  }
  write_file(cfg, "sweep.csv", [&](std::ostream& o) {
    o << "r_e_over_lambda,r_e,r_a,cells,J,gain_db,water_gain_db,quadratic_reference_db,iterations,termination,error\n";
    for (const auto& p : pts)
      o << fmt::format("{:.10g},{:.10g},{:.10g},{},{:.12g},{:.10g},{:.10g},{:.10g},{},{},\"{}\"\n", p.ratio, p.r_e,
                       p.r_a, p.cells, p.J, p.gain_db, p.water_gain_db, p.quadratic_reference_db, p.iterations,
                       p.termination, p.error);
  });
  return pts;
}

RobustResult run_robust_design(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  reduced_frequency_guard(cfg, log);
  const LensSetup s = LensSetup::build(sized_domain(cfg));
  log_mesh(log, s);
  const auto region = load_region(cfg);
  RobustResult r;
  r.set = build_design_set(cfg.band_center, cfg.band_offsets, cfg.band_angles_deg, cfg.medium.c0);
  r.cell_mirror = s.cells.mirror;
  log.info(fmt::format("design set waves={}", r.set.size()));
  RobustProblem problem(*s.space, cfg.medium, s.reg, r.set, cfg.effective_sigma(), cfg.workers);
  r.opt = optimize(problem, ControlState::zeros(s.cells.size()), region, cfg.optimizer,
                   [&](const IterationRecord& rec, const ControlState& ctrl) {
                     iteration_logger(cfg, log)(rec, ctrl);
                     std::string g;
                     for (double x : rec.cost.gains) g += fmt::format(" {:.4e}", x);
                     log.detail(fmt::format("iter={} gains:{}", rec.iter, g));
                   });
  log.info(fmt::format("robust design done termination={} iterations={} GM={:.6e}", r.opt.termination,
                       r.opt.iterations, r.opt.history.back().cost.gain));

  LensModel lens{s.space.get(), cfg.medium, r.opt.control, "robust"};
  const auto sols = problem.solve_states(r.opt.control);
  for (int n = 0; n < r.set.size(); ++n) {
    r.gains.push_back(intensity_gain(sols[n], *s.space));
    r.gains_db.push_back(to_db(std::abs(focal_mean(sols[n], *s.space))));
  }
  std::vector<double> angles;
  for (double a : linear_grid(cfg.analysis_angle_min, cfg.analysis_angle_max, cfg.analysis_angles))
    angles.push_back(a * kDeg);
  r.tf = transfer_function(lens, linear_grid(band_min(cfg), band_max(cfg), cfg.analysis_frequencies), angles,
                           cfg.workers);

  write_file(cfg, "control.csv", [&](std::ostream& o) { write_control_csv(o, r.opt.control); });
  write_file(cfg, "history.csv", [&](std::ostream& o) { write_history(o, r.opt); });
  write_file(cfg, "design_set.csv", [&](std::ostream& o) { write_design_set_csv(o, r.set); });
  write_file(cfg, "wave_gains.csv", [&](std::ostream& o) {
    o << "index,frequency_hz,angle_deg,G,gain_db\n";
    for (int n = 0; n < r.set.size(); ++n)
      o << fmt::format("{},{:.10g},{:.10g},{:.12g},{:.10g}\n", n, r.set.waves[n].frequency(),
                       r.set.waves[n].theta / kDeg, r.gains[n], r.gains_db[n]);
  });
  write_file(cfg, "transfer_function.csv", [&](std::ostream& o) {
    std::optional<DelayFit> fit;
    try {
      fit = fit_time_delay(r.tf);
    } catch (const Error&) {
    }
    write_tf_csv(o, r.tf, fit);
  });
  return r;
}

AnalysisResult run_response_analysis(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  reduced_frequency_guard(cfg, log);
  const LensSetup s = LensSetup::build(sized_domain(cfg));
  log_mesh(log, s);
  std::ifstream in(cfg.lens_file);
  if (!in) throw Error("cannot open lens file '" + cfg.lens_file + "'");
  const ControlState ctrl = read_control_csv(in);
  if (ctrl.size() != s.cells.size())
    throw Error(fmt::format("lens file has {} cells, the cell graph has {}", ctrl.size(), s.cells.size()));
  if (!is_admissible(ctrl, load_region(cfg), 1e-9)) log.warn("lens controls lie outside the attainable region");

  LensModel lens{s.space.get(), cfg.medium, ctrl, fs::path(cfg.lens_file).stem().string()};
  AnalysisResult r;
  std::vector<double> angles;
  for (double a : linear_grid(cfg.analysis_angle_min, cfg.analysis_angle_max, cfg.analysis_angles))
    angles.push_back(a * kDeg);
  r.tf = transfer_function(lens, linear_grid(band_min(cfg), band_max(cfg), cfg.analysis_frequencies), angles,
                           cfg.workers);
  for (std::size_t i = 0; i < r.tf.failures.size(); ++i)
    if (!r.tf.failures[i].empty()) log.warn("transfer function point " + std::to_string(i) + ": " + r.tf.failures[i]);
  r.fit = fit_time_delay(r.tf);
  for (const auto& f : r.fit.flags) log.warn("phase unwrap: " + f);
  r.polar = directivity(lens, cfg.polar_frequency, cfg.polar_resolution, cfg.workers);
  log.info(fmt::format("analysis done delta_t={:.6e} s intercept={:.3f} deg", r.fit.delta_t, r.fit.intercept_deg));

  write_file(cfg, "transfer_function.csv", [&](std::ostream& o) { write_tf_csv(o, r.tf, r.fit); });
  write_file(cfg, "delay_fit.txt", [&](std::ostream& o) { write_delay_fit(o, r.fit); });
  write_file(cfg, "polar_raw.csv", [&](std::ostream& o) { write_polar_csv(o, r.polar); });
  write_file(cfg, "polar_plot.csv", [&](std::ostream& o) { write_polar_csv(o, r.polar, cfg.polar_floor_db); });
  return r;
}

GradientCheckResult run_gradient_check(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  const LensSetup s = LensSetup::build(sized_domain(cfg));
  log_mesh(log, s);
  std::unique_ptr<Objective> problem;
  GradientCheckResult r;
  r.cells = s.cells.size();
  if (cfg.check_robust) {
    auto set = build_design_set(cfg.band_center, cfg.band_offsets, cfg.band_angles_deg, cfg.medium.c0);
    r.waves = set.size();
    problem = std::make_unique<RobustProblem>(*s.space, cfg.medium, s.reg, std::move(set), cfg.effective_sigma(),
                                              cfg.workers);
  } else {
    r.waves = 1;
    problem = std::make_unique<SingleWaveProblem>(
        *s.space, cfg.medium, s.reg,
        DesignWave::from_frequency(cfg.wave_frequency, cfg.wave_angle_deg * kDeg, cfg.medium.c0),
        cfg.effective_sigma());
  }
  std::mt19937 rng(cfg.check_seed);
  std::uniform_real_distribution<double> uni(-cfg.check_amplitude, cfg.check_amplitude);
  ControlState ctrl = ControlState::zeros(r.cells);
  for (auto& x : ctrl.v) x = uni(rng);
  for (auto& x : ctrl.u) x = uni(rng);
  std::vector<std::vector<double>> dirs(cfg.check_directions, std::vector<double>(2 * r.cells));
  std::normal_distribution<double> normal;
  for (auto& d : dirs)
    for (auto& x : d) x = normal(rng);
  GradientPair g;
  problem->cost_and_gradient(ctrl, g);
  r.report = fd_gradient_check([&](const std::vector<double>& x) { return problem->cost(ControlState::from_flat(x)).J; },
                               ctrl.flat(), g.flat(), dirs, {1e-3, 1e-4, 1e-5, 1e-6, 1e-7});
  log.info(fmt::format("gradient check cells={} waves={} directions={} worst_best_error={:.3e}", r.cells, r.waves,
                       dirs.size(), r.report.worst_best_error));
  write_file(cfg, "gradient_check.csv", [&](std::ostream& o) {
    o << "direction,step,fd,analytic,rel_error\n";
    for (std::size_t i = 0; i < r.report.directions.size(); ++i) {
      const auto& d = r.report.directions[i];
      for (std::size_t k = 0; k < d.steps.size(); ++k)
        o << fmt::format("{},{:.3g},{:.17g},{:.17g},{:.6e}\n", i, d.steps[k], d.fd[k], d.analytic, d.rel_error[k]);
    }
  });
  return r;
}

OracleCompareResult run_oracle_compare(const ScenarioConfig& cfg, RunLog& log) {
  prepare_output(cfg);
  OracleCompareResult r;
  const CylinderCase robin = cylinder_case(cfg, cfg.oracle_domain_ratio);
  const Mesh robin_mesh = build_mesh(robin.domain, CellGraph{});
  const double robin_error = cylinder_l2_error(robin, robin_mesh, false);
  log.info(fmt::format("cylinder ka={} r_a={:.6g} elements={} l2_error_robin={:.4e}", cfg.oracle_ka,
                       robin.domain.r_a, robin_mesh.num_elements(), robin_error));

  // With exact boundary data the truncation radius does not matter, so the
  // refinement study runs on a smaller disk.
  const CylinderCase c = cylinder_case(cfg, cfg.oracle_convergence_ratio);
  Mesh mesh = build_mesh(c.domain, CellGraph{});
  std::vector<double> hs;
  double h = c.domain.h_target;
  for (int lev = 0; lev <= cfg.oracle_refinements; ++lev) {
    const double err = cylinder_l2_error(c, mesh, true);
    r.elements.push_back(mesh.num_elements());
    r.l2_errors.push_back(err);
    hs.push_back(h);
    log.info(fmt::format("cylinder level={} elements={} l2_error_exact_boundary={:.4e}", lev, mesh.num_elements(), err));
    if (lev < cfg.oracle_refinements) {
      mesh = refine_uniform(mesh);
      h *= 0.5;
    }
  }
  if (hs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double x = std::log(hs[i]), y = std::log(r.l2_errors[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    r.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  r.robin_l2_error = robin_error;

  // Empty lens focal mean at the band centre.
  ScenarioConfig water = cfg;
  water.kind = ScenarioKind::RobustDesign;
  const LensSetup s = LensSetup::build(sized_domain(water));
  const auto wave = DesignWave::from_frequency(cfg.band_center, 0.0, cfg.medium.c0);
  const auto sol = solve_scattered(
      assemble(*s.space, material_field(ControlState::zeros(s.cells.size()), cfg.medium, s.cells), wave));
  const double expected = disk_average_plane_wave(wave.k(), cfg.domain.r_f);
  r.focal_mean_error = std::abs(std::abs(focal_mean(sol, *s.space)) - expected) / expected;
  log.info(fmt::format("cylinder order={:.3f} focal_mean_rel_error={:.3e}", r.order, r.focal_mean_error));

  write_file(cfg, "oracle_compare.csv", [&](std::ostream& o) {
    o << "case,elements,l2_error\n";
    o << fmt::format("robin,{},{:.6e}\n", robin_mesh.num_elements(), r.robin_l2_error);
    for (std::size_t i = 0; i < r.l2_errors.size(); ++i)
      o << fmt::format("exact_boundary_level_{},{},{:.6e}\n", i, r.elements[i], r.l2_errors[i]);
    o << fmt::format("order,,{:.6f}\nfocal_mean_rel_error,,{:.6e}\n", r.order, r.focal_mean_error);
  });
  return r;
}

int run_scenario(const ScenarioConfig& cfg, RunLog& log) {
  if (cfg.workers > 0) set_default_workers(cfg.workers);
  log.info(fmt::format("scenario kind={}", to_string(cfg.kind)));
  switch (cfg.kind) {
    case ScenarioKind::Mesh:
      run_mesh(cfg, log);
      break;
    case ScenarioKind::SizeSweep: {
      const auto pts = run_sizing_sweep(cfg, log);
      for (const auto& p : pts)
        if (!p.error.empty()) return 1;
      break;
    }
    case ScenarioKind::Design:
      run_single_design(cfg, log);
      break;
    case ScenarioKind::RobustDesign:
      run_robust_design(cfg, log);
      break;
    case ScenarioKind::Analyze:
      run_response_analysis(cfg, log);
      break;
    case ScenarioKind::GradientCheck:
      run_gradient_check(cfg, log);
      break;
    case ScenarioKind::OracleCompare:
      run_oracle_compare(cfg, log);
      break;
  }
  return 0;
}

}  // namespace grinlens
