#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace grinlens;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
  const fs::path p = fs::path(GRINLENS_TEST_TMP) / name;
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig parse(const std::string& text, std::optional<ScenarioKind> kind = std::nullopt) {
  std::istringstream in(text);
  return parse_config(in, kind);
}

const char* kSmall = R"(
[domain]
r_f = 0.01
r_i = 0.02
r_e = 0.045
r_a = 0.09
l = 0.008
h_target = 0.02475
)";

std::string small_config(const std::string& kind, const std::string& extra = "") {
  return "[scenario]\nkind = " + kind + "\n" + kSmall + extra;
}

}  // namespace

TEST_SUITE("scenario_cli") {

TEST_CASE("defaults") {
  const auto c = parse("");
  CHECK(c.kind == ScenarioKind::Design);
  CHECK(c.medium.rho0 == 998.0);
  CHECK(c.medium.c0 == 1485.0);
  CHECK(c.optimizer.sigma == 1.0);
  CHECK(c.sigma_focal_area);
  CHECK(c.effective_sigma() == doctest::Approx(kPi * 1e-4));
  CHECK(c.band_offsets.size() == 6);
  CHECK(c.band_angles_deg.size() == 6);
  CHECK(c.polar_frequency == c.band_center);
  CHECK(c.mesh_size() == doctest::Approx(1485.0 / 10000.0 / 10.0));
  const auto r = parse("", ScenarioKind::RobustDesign);
  CHECK(r.optimizer.sigma == 1e-3);
  CHECK(r.max_frequency() == doctest::Approx(10833.0));
  CHECK(parse("[optimizer]\nsigma = 0.5\n", ScenarioKind::RobustDesign).optimizer.sigma == 0.5);
  CHECK(parse("[optimizer]\nsigma_reference = absolute\n").effective_sigma() == 1.0);
}

TEST_CASE("scenario kinds") {
  for (auto k : {ScenarioKind::Mesh, ScenarioKind::SizeSweep, ScenarioKind::Design, ScenarioKind::RobustDesign,
                 ScenarioKind::Analyze, ScenarioKind::GradientCheck, ScenarioKind::OracleCompare})
    CHECK(parse_scenario_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_scenario_kind("optimize"), Error);
  CHECK(parse("[scenario]\nkind = mesh\n").kind == ScenarioKind::Mesh);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse("[nonsense]\na = 1\n"), Error);
  CHECK_THROWS_AS(parse("[domain]\nradius = 1\n"), Error);
  CHECK_THROWS_AS(parse("[domain]\nr_f = abc\n"), Error);
  CHECK_THROWS_AS(parse("[domain]\nr_f = 0.01x\n"), Error);
  CHECK_THROWS_AS(parse("[band]\noffsets_hz = 1, two\n"), Error);
  CHECK_THROWS_AS(parse("[band]\noffsets_hz = -20000\n"), Error);
  CHECK_THROWS_AS(parse("[domain]\nr_i = 0.005\n"), Error);
  CHECK_THROWS_AS(parse("[optimizer]\nsigma_reference = area\n"), Error);
  CHECK_THROWS_AS(parse("[optimizer]\ncheckpoint = maybe\n"), Error);
  CHECK_THROWS_AS(parse("[region]\nfile = /nonexistent/region.txt\n"), Error);
  CHECK_THROWS_AS(parse("[scenario]\nkind = analyze\n"), Error);
  CHECK_THROWS_AS(parse("[scenario\n"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), Error);
}

TEST_CASE("medium given by bulk modulus") {
  const auto a = parse("[medium]\nrho0 = 1000\nkappa0 = 2.25e9\n");
  CHECK(a.medium.c0 == doctest::Approx(1500.0).epsilon(1e-14));
  const auto b = parse("[medium]\nrho0 = 1000\nkappa0 = 2.25e9\nc0 = 1505\n");
  CHECK(b.medium.c0 == doctest::Approx(1500.0).epsilon(1e-14));
  CHECK_THROWS_AS(parse("[medium]\nrho0 = 1000\nkappa0 = 2.25e9\nc0 = 1510\n"), Error);
}

TEST_CASE("resolved configuration roundtrip") {
  const auto c = parse(small_config("robust-design", "[band]\noffsets_hz = -100, 100\nangles_deg = 0\n"));
  std::ostringstream first;
  write_config(first, c);
  const auto back = parse(first.str());
  std::ostringstream second;
  write_config(second, back);
  CHECK(first.str() == second.str());
  CHECK(back.band_offsets == c.band_offsets);
  CHECK(back.optimizer.sigma == c.optimizer.sigma);
  CHECK(back.h_override);
}

TEST_CASE("reduced frequency guard") {
  auto c = parse(small_config("mesh", "[band]\ncenter_hz = 40000\noffsets_hz = 0\n"));
  c.domain.l = 0.005;
  c.domain.h_target = 0.02;
  CHECK(c.reduced_frequency() == doctest::Approx(40000.0 * 0.005 / 1485.0));
  RunLog log;
  run_mesh(c, log);
  REQUIRE(log.warnings().size() == 1);
  CHECK(log.warnings()[0].find("0.1347") != std::string::npos);

  auto ok = parse(small_config("mesh"));
  RunLog quiet;
  run_mesh(ok, quiet);
  CHECK(quiet.warnings().empty());
}

TEST_CASE("mesh runs are reproducible byte for byte") {
  auto c = parse(small_config("mesh"));
  c.output_dir = tmp_dir("mesh_a");
  const std::string dir_a = c.output_dir;
  RunLog la(c.output_dir, 0);
  const auto ra = run_mesh(c, la);
  c.output_dir = tmp_dir("mesh_b");
  RunLog lb(c.output_dir, 0);
  run_mesh(c, lb);
  for (const char* f : {"mesh.txt", "cells.txt", "mesh_stats.txt"}) {
    const auto a = slurp(fs::path(dir_a) / f);
    CHECK(!a.empty());
    CHECK(a == slurp(fs::path(c.output_dir) / f));
  }
  CHECK(ra.cells == 30);
  const auto echo = load_config((fs::path(c.output_dir) / "resolved_config.ini").string());
  CHECK(echo.kind == ScenarioKind::Mesh);
  CHECK(echo.domain.r_e == c.domain.r_e);
  CHECK(fs::exists(fs::path(c.output_dir) / "run.log"));
}

TEST_CASE("short designs are reproducible and monotone") {
  auto c = parse(small_config("design", "[optimizer]\nmax_iters = 3\n"));
  c.output_dir = tmp_dir("design_a");
  RunLog la(c.output_dir, 0);
  const auto a = run_single_design(c, la);
  const std::string dir_a = c.output_dir;
  c.output_dir = tmp_dir("design_b");
  RunLog lb(c.output_dir, 0);
  const auto b = run_single_design(c, lb);
  CHECK(a.opt.history.size() == b.opt.history.size());
  for (const char* f : {"control.csv", "history.csv", "summary.txt"})
    CHECK(slurp(fs::path(dir_a) / f) == slurp(fs::path(c.output_dir) / f));
  CHECK(a.final_gain > a.water_gain);
  CHECK(a.final_gain_db > a.water_gain_db);
  for (std::size_t i = 1; i < a.opt.history.size(); ++i) CHECK(a.opt.history[i].cost.J < a.opt.history[i - 1].cost.J);
  CHECK(a.cells == 30);
}

TEST_CASE("a one-point sweep reproduces the single design") {
  auto c = parse(small_config("design", "[optimizer]\nmax_iters = 2\n"));
  RunLog log(std::string(), 0);
  const auto single = run_single_design(c, log);
  auto s = c;
  s.kind = ScenarioKind::SizeSweep;
  const double lambda = c.medium.c0 / c.wave_frequency;
  s.sweep_ratios = {c.domain.r_e / lambda};
  s.sweep_margin = (c.domain.r_a - c.domain.r_e) / lambda;
  const auto pts = run_sizing_sweep(s, log);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].error.empty());
  CHECK(pts[0].cells == single.cells);
  CHECK(pts[0].gain_db == doctest::Approx(single.final_gain_db).epsilon(1e-9));
  CHECK(pts[0].J == doctest::Approx(single.opt.history.back().cost.J).epsilon(1e-9));
  CHECK(pts[0].quadratic_reference_db == doctest::Approx(20 * std::log10(0.045 / 0.01)).epsilon(1e-9));
}

TEST_CASE("sweep records failing points and continues") {
  auto s = parse(small_config("size-sweep", "[optimizer]\nmax_iters = 1\n"));
  // r_e below r_i is an invalid domain
  s.sweep_ratios = {0.05, 0.35};
  RunLog log(std::string(), 0);
  const auto pts = run_sizing_sweep(s, log);
  REQUIRE(pts.size() == 2);
  CHECK_FALSE(pts[0].error.empty());
  CHECK(pts[1].error.empty());
  CHECK(log.warnings().size() == 1);
}

TEST_CASE("analysis of the empty lens") {
  const std::string dir = tmp_dir("analyze");
  fs::create_directories(dir);
  const std::string lens = dir + "/water.csv";
  {
    std::ofstream out(lens);
    write_control_csv(out, ControlState::zeros(30));
  }
  auto c = parse("[scenario]\nkind = analyze\nlens_file = " + lens + "\n" + kSmall +
                 "[analysis]\nfrequencies = 3\nangles = 2\npolar_resolution_deg = 90\n");
  c.output_dir = dir + "/out";
  RunLog log(c.output_dir, 0);
  const auto r = run_response_analysis(c, log);
  for (int f = 0; f < r.tf.num_frequencies(); ++f) {
    const double expect = disk_average_plane_wave(2 * kPi * r.tf.frequencies[f] / c.medium.c0, c.domain.r_f);
    for (int a = 0; a < r.tf.num_angles(); ++a) CHECK(std::abs(std::abs(r.tf.at(f, a)) - expect) < 0.01 * expect);
  }
  CHECK(std::abs(r.fit.delta_t) < 1e-9);
  CHECK(r.polar.angles_deg.size() == 5);
  for (const char* f : {"transfer_function.csv", "delay_fit.txt", "polar_raw.csv", "polar_plot.csv"})
    CHECK(fs::exists(fs::path(c.output_dir) / f));

  {
    std::ofstream out(lens);
    write_control_csv(out, ControlState::zeros(12));
  }
  CHECK_THROWS_AS(run_response_analysis(c, log), Error);
}

TEST_CASE("gradient check runner") {
  auto c = parse(small_config("gradient-check", "[gradient_check]\ndirections = 2\n"));
  RunLog log(std::string(), 0);
  const auto r = run_gradient_check(c, log);
  CHECK(r.cells == 30);
  CHECK(r.waves == 1);
  CHECK(r.report.directions.size() == 2);
  CHECK(r.report.worst_best_error < 1e-6);
}

TEST_CASE("shipped presets parse") {
  const fs::path root(GRINLENS_SOURCE_DIR);
  const fs::path old = fs::current_path();
  fs::current_path(root);
  for (const auto& entry : fs::directory_iterator(root / "configs")) {
    CAPTURE(entry.path().string());
    std::ifstream in(entry.path());
    const auto c = parse_config(in, std::nullopt, false);
    CHECK(entry.path().stem().string() == (c.kind == ScenarioKind::RobustDesign ? "robust-low-band" : to_string(c.kind)));
    if (c.kind != ScenarioKind::Analyze) {
      std::ifstream again(entry.path());
      CHECK_NOTHROW(parse_config(again));
    }
  }
  CHECK(slurp(root / "data" / "attainable_region.txt") == AttainableRegion::builtin_text());
  fs::current_path(old);
}

}
