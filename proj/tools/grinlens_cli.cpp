#include "grinlens/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace grinlens;

int main(int argc, char** argv) {
  CLI::App app{"Gradient-index acoustic lens design: meshing, adjoint optimization and response analysis"};
  app.require_subcommand(1);

  std::string config_path, output_dir, lens_file;
  int workers = -1;
  int verbosity = 1;

  struct Verb {
    const char* name;
    const char* help;
    ScenarioKind kind;
  };
  const Verb verbs[] = {
      {"mesh", "Build the cell tiling and the mesh", ScenarioKind::Mesh},
      {"size-sweep", "Optimize single-wave lenses over a range of outer radii", ScenarioKind::SizeSweep},
      {"design", "Optimize a lens for one design wave", ScenarioKind::Design},
      {"robust-design", "Optimize a lens for a band of frequencies and angles", ScenarioKind::RobustDesign},
      {"analyze", "Transfer function, directivity and delay fit of a lens", ScenarioKind::Analyze},
      {"gradient-check", "Compare adjoint gradients with finite differences", ScenarioKind::GradientCheck},
      {"oracle-compare", "Compare the solver with analytic solutions", ScenarioKind::OracleCompare},
  };
  std::vector<std::pair<CLI::App*, ScenarioKind>> subs;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    sub->add_option("-c,--config", config_path, "Scenario configuration (INI)")->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output_dir, "Output directory (overrides scenario.output_dir)");
    sub->add_option("-j,--workers", workers, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    sub->add_flag("-v,--verbose", [&](std::int64_t n) { verbosity = 1 + static_cast<int>(n); }, "Log every iteration");
    sub->add_flag("-q,--quiet", [&](std::int64_t) { verbosity = 0; }, "Only warnings on stderr");
    if (v.kind == ScenarioKind::Analyze)
      sub->add_option("-l,--lens", lens_file, "Lens control CSV (overrides scenario.lens_file)");
    subs.emplace_back(sub, v.kind);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    ScenarioKind kind{};
    for (const auto& [sub, k] : subs)
      if (sub->parsed()) kind = k;

    std::ostringstream text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      text << in.rdbuf() << "\n";
    }
    std::istringstream in(text.str());
    ScenarioConfig cfg = parse_config(in, kind, false);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (workers >= 0) cfg.workers = workers;
    if (!lens_file.empty()) cfg.lens_file = lens_file;
    cfg.validate();

    RunLog log(cfg.output_dir, verbosity);
    return run_scenario(cfg, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
