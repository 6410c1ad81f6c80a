#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gridfuse/experiment.hpp"

int main(int argc, char** argv) {
  using namespace gridfuse;
  CLI::App app{"Occupancy-grid fusion benchmark"};
  std::string kind_name;
  std::string config_path;
  std::string seeds;
  std::string out_dir;
  bool desk = false;
  bool full = false;
  std::vector<std::string> kinds;
  for (const auto& [k, name] : kExperimentKinds) kinds.emplace_back(name);
  app.add_option("kind", kind_name, "experiment kind")->required()->check(CLI::IsMember(kinds));
  app.add_option("--config", config_path, "YAML experiment config")->required();
  auto* desk_flag = app.add_flag("--desk-scale", desk, "reduced-size protocol");
  app.add_flag("--full-scale", full, "full-size protocol")->excludes(desk_flag);
  app.add_option("--seeds", seeds, "seed range A..B (inclusive)");
  app.add_option("--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path);
    const ExperimentKind kind = *parse_kind(kind_name);
    if (cfg.kind && *cfg.kind != kind) {
      throw ConfigError({fmt::format("kind: config declares '{}' but the command line asks for '{}'",
                                     to_string(*cfg.kind), kind_name)});
    }
    if (desk) cfg.desk_scale = true;
    if (full) cfg.desk_scale = false;
    if (!seeds.empty()) {
      auto parsed = parse_seed_range(seeds);
      if (!parsed) throw ConfigError({"--seeds: expected A..B with A <= B"});
      cfg.seeds = std::move(parsed);
    }
    if (!out_dir.empty()) cfg.out = out_dir;

    const auto seed_list = resolve_seeds(cfg, kind);
    const ExperimentOutput out = run_experiment(cfg, kind);
    write_outputs(cfg.out, out, cfg, seed_list);
    fmt::print("{}: {} runs written to {}\n", kind_name, out.runs.size(), cfg.out);
    return 0;
  } catch (const ConfigError& e) {
    for (const auto& d : e.diagnostics()) fmt::print(stderr, "config error: {}\n", d);
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
