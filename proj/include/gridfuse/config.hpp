#pragma once

// Experiment configuration: a YAML document validated against a fixed
// schema. Every field is optional; presets fill whatever is left unset.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "gridfuse/error.hpp"
#include "gridfuse/fusion.hpp"
#include "gridfuse/metrics.hpp"

namespace gridfuse {

enum class ExperimentKind {
  SingleAgent,
  MultiRobot,
  Mechanism,
  AblateLmax,
  AblateYager,
  AblateRegularization,
  SensorSensitivity,
  RealData,
  PlanEval,
  StatsOnly,
};

inline constexpr std::array<std::pair<ExperimentKind, std::string_view>, 10> kExperimentKinds{{
    {ExperimentKind::SingleAgent, "single-agent"},
    {ExperimentKind::MultiRobot, "multi-robot"},
    {ExperimentKind::Mechanism, "mechanism"},
    {ExperimentKind::AblateLmax, "ablate-lmax"},
    {ExperimentKind::AblateYager, "ablate-yager"},
    {ExperimentKind::AblateRegularization, "ablate-regularization"},
    {ExperimentKind::SensorSensitivity, "sensor-sensitivity"},
    {ExperimentKind::RealData, "realdata"},
    {ExperimentKind::PlanEval, "plan-eval"},
    {ExperimentKind::StatsOnly, "stats-only"},
}};

[[nodiscard]] inline std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kExperimentKinds) {
    if (kind == k) return name;
  }
  return "?";
}

[[nodiscard]] inline std::optional<ExperimentKind> parse_kind(std::string_view s) {
  for (const auto& [kind, name] : kExperimentKinds) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

// "A..B" (inclusive) or a single integer.
[[nodiscard]] inline std::optional<std::vector<std::uint64_t>> parse_seed_range(std::string_view s) {
  auto number = [](std::string_view t) -> std::optional<std::uint64_t> {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
  };
  const auto dots = s.find("..");
  if (dots == std::string_view::npos) {
    if (auto v = number(s)) return std::vector<std::uint64_t>{*v};
    return std::nullopt;
  }
  const auto a = number(s.substr(0, dots));
  const auto b = number(s.substr(dots + 2));
  if (!a || !b || *a > *b || *b - *a > 100000) return std::nullopt;
  std::vector<std::uint64_t> out;
  for (std::uint64_t v = *a; v <= *b; ++v) out.push_back(v);
  return out;
}

struct FusionOverrides {
  std::optional<double> l_occ;
  std::optional<double> l_free;
  std::optional<LogOddsLimit> l_max;
  std::optional<double> mof_floor;
  std::optional<Matching> matching;
};

struct LidarOverrides {
  std::optional<int> num_rays;
  std::optional<double> fov_deg;
  std::optional<double> max_range;
  std::optional<double> range_noise_sigma;
};

struct DecayOverrides {
  std::optional<bool> enabled;
  std::optional<double> lambda_d;
  std::optional<double> lambda_alpha;
};

struct EnvOverrides {
  std::optional<double> width;
  std::optional<double> height;
  std::optional<int> rooms;
  std::optional<int> corridors;
  std::optional<int> static_obstacles;
  std::optional<int> dynamic_obstacles;
  std::optional<double> dynamic_speed;
  std::optional<double> interior_margin;
};

struct TrajectoryOverrides {
  std::optional<int> steps;
  std::optional<double> inset;
};

struct MultiRobotOverrides {
  std::optional<int> robots;
  std::optional<double> odom_sigma_trans;
  std::optional<double> odom_sigma_rot;
  std::optional<double> rendezvous_distance;
  std::optional<double> noisy_range_sigma;
};

struct MechanismOverrides {
  std::optional<std::vector<int>> robot_counts;
  std::optional<int> total_steps;
};

struct RealDataOptions {
  std::vector<std::string> logs;
  double max_range = 8.0;
  double fov_deg = 180.0;
  double split_ratio = 0.8;
  std::vector<int> scan_splits{1, 2, 4};
};

struct PlanEvalOptions {
  int queries = 500;
  std::uint64_t seed = 0;
  double obstacle_threshold = 0.5;
};

struct StatsOptions {
  double alpha = 0.05;
  std::map<Metric, double> margins{{Metric::CellAccuracy, 0.02},
                                   {Metric::BoundarySharpness, 0.03},
                                   {Metric::Brier, 0.01},
                                   {Metric::Entropy, 0.02}};
  int bootstrap_block = 10;
  int bootstrap_iterations = 10000;
  std::uint64_t bootstrap_seed = 0;
  std::string input;  // runs.csv for stats-only
};

struct ExperimentConfig {
  std::optional<ExperimentKind> kind;
  bool desk_scale = true;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::vector<FusionRule>> arms;
  std::optional<double> resolution;
  std::string out = "results";
  FusionOverrides fusion;
  LidarOverrides lidar;
  DecayOverrides decay;
  EnvOverrides env;
  TrajectoryOverrides trajectory;
  MultiRobotOverrides multi_robot;
  MechanismOverrides mechanism;
  RealDataOptions realdata;
  PlanEvalOptions planner;
  StatsOptions stats;
};

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> diags;

  void fail(const YAML::Node& n, std::string_view field, std::string_view msg) {
    const int line = n.Mark().line;
    if (line >= 0) {
      diags.push_back(fmt::format("line {}: {}: {}", line + 1, field, msg));
    } else {
      diags.push_back(fmt::format("{}: {}", field, msg));
    }
  }

  // False (with a diagnostic) unless `n` is a map; flags keys outside `allowed`.
  bool map(const YAML::Node& n, std::string_view path, std::initializer_list<std::string_view> allowed) {
    if (!n.IsMap()) {
      fail(n, path, "expected a mapping");
      return false;
    }
    for (auto it = n.begin(); it != n.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(it->first, join(path, key), "unknown key");
      }
    }
    return true;
  }

  template <class T>
  std::optional<T> scalar(const YAML::Node& parent, std::string_view key, std::string_view path,
                          std::string_view type) {
    const YAML::Node n = parent[std::string(key)];
    if (!n) return std::nullopt;
    if (!n.IsScalar()) {
      fail(n, join(path, key), fmt::format("expected {}", type));
      return std::nullopt;
    }
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, join(path, key), fmt::format("expected {}", type));
      return std::nullopt;
    }
  }

  // Numeric field with a predicate; the diagnostic names the constraint.
  template <class T, class Pred>
  void number(const YAML::Node& parent, std::string_view key, std::string_view path, std::optional<T>& out,
              Pred ok, std::string_view constraint) {
    auto v = scalar<T>(parent, key, path, std::is_integral_v<T> ? "an integer" : "a number");
    if (!v) return;
    if (!ok(*v)) {
      fail(parent[std::string(key)], join(path, key), constraint);
      return;
    }
    out = v;
  }

  template <class T, class Pred>
  void number(const YAML::Node& parent, std::string_view key, std::string_view path, T& out, Pred ok,
              std::string_view constraint) {
    std::optional<T> v;
    number(parent, key, path, v, ok, constraint);
    if (v) out = *v;
  }

  template <class T, class Pred>
  std::optional<std::vector<T>> list(const YAML::Node& parent, std::string_view key, std::string_view path,
                                     Pred ok, std::string_view constraint) {
    const YAML::Node n = parent[std::string(key)];
    if (!n) return std::nullopt;
    if (!n.IsSequence()) {
      fail(n, join(path, key), "expected a list");
      return std::nullopt;
    }
    std::vector<T> out;
    bool good = true;
    for (const auto& item : n) {
      try {
        const T v = item.as<T>();
        if (!ok(v)) {
          fail(item, join(path, key), constraint);
          good = false;
        }
        out.push_back(v);
      } catch (const YAML::Exception&) {
        fail(item, join(path, key), std::is_integral_v<T> ? "expected integers" : "expected numbers");
        good = false;
      }
    }
    if (!good) return std::nullopt;
    return out;
  }

  static std::string join(std::string_view path, std::string_view key) {
    return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
  }
};

inline auto positive = [](auto v) { return v > 0; };
inline auto non_negative = [](auto v) { return v >= 0; };

}  // namespace detail

// Validates a YAML document. Throws ConfigError listing every violation.
[[nodiscard]] inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError({fmt::format("line {}: syntax error: {}", e.mark.line + 1, e.msg)});
  }
  if (root.IsNull()) return cfg;

  detail::ConfigReader r;
  using detail::non_negative;
  using detail::positive;
  if (!r.map(root, "", {"kind", "desk_scale", "seeds", "arms", "out", "resolution", "fusion", "lidar", "decay",
                        "env", "trajectory", "multi_robot", "mechanism", "realdata", "planner", "stats"})) {
    throw ConfigError(r.diags);
  }

  if (auto k = r.scalar<std::string>(root, "kind", "", "an experiment kind")) {
    if (auto kind = parse_kind(*k)) {
      cfg.kind = kind;
    } else {
      r.fail(root["kind"], "kind", fmt::format("unknown experiment kind '{}'", *k));
    }
  }
  if (auto v = r.scalar<bool>(root, "desk_scale", "", "true or false")) cfg.desk_scale = *v;
  if (auto v = r.scalar<std::string>(root, "out", "", "a path")) cfg.out = *v;
  r.number(root, "resolution", "", cfg.resolution, positive, "must be positive");

  if (const YAML::Node s = root["seeds"]) {
    if (s.IsSequence()) {
      cfg.seeds = r.list<std::uint64_t>(root, "seeds", "", non_negative, "must be non-negative");
    } else if (s.IsScalar()) {
      if (auto seeds = parse_seed_range(s.as<std::string>())) {
        cfg.seeds = seeds;
      } else {
        r.fail(s, "seeds", "expected an integer, a list, or a range 'A..B'");
      }
    } else {
      r.fail(s, "seeds", "expected an integer, a list, or a range 'A..B'");
    }
  }

  if (const YAML::Node a = root["arms"]) {
    if (!a.IsSequence() || a.size() < 2) {
      r.fail(a, "arms", "expected a list of at least two fusion rules");
    } else {
      std::vector<FusionRule> rules;
      for (const auto& item : a) {
        const auto name = item.IsScalar() ? item.as<std::string>() : std::string();
        if (auto rule = parse_rule(name)) {
          rules.push_back(*rule);
        } else {
          r.fail(item, "arms", fmt::format("unknown fusion rule '{}'", name));
        }
      }
      if (rules.size() == a.size()) cfg.arms = rules;
    }
  }

  if (const YAML::Node f = root["fusion"]; f && r.map(f, "fusion", {"l_occ", "l_free", "l_max", "mof_floor", "matching"})) {
    r.number(f, "l_occ", "fusion", cfg.fusion.l_occ, positive, "l_occ must be positive");
    r.number(f, "l_free", "fusion", cfg.fusion.l_free, [](double v) { return v < 0.0; }, "l_free must be negative");
    if (const YAML::Node lm = f["l_max"]) {
      const std::string text = lm.IsScalar() ? lm.as<std::string>() : std::string();
      double v = 0.0;
      bool numeric = false;
      try {
        v = lm.as<double>();
        numeric = true;
      } catch (const YAML::Exception&) {
      }
      if (text == "inf" || text == "infinity" || text == ".inf") {
        cfg.fusion.l_max = LogOddsLimit::unbounded();
      } else if (numeric && v > 0.0 && std::isfinite(v)) {
        cfg.fusion.l_max = LogOddsLimit(v);
      } else {
        r.fail(lm, "fusion.l_max", "L_max must be positive or 'inf'");
      }
    }
    r.number(f, "mof_floor", "fusion", cfg.fusion.mof_floor, [](double v) { return v >= 0.0 && v < 1.0; },
             "mof_floor must lie in [0, 1)");
    if (auto m = r.scalar<std::string>(f, "matching", "fusion", "betp or ppl")) {
      if (auto mm = parse_matching(*m)) {
        cfg.fusion.matching = mm;
      } else {
        r.fail(f["matching"], "fusion.matching", "expected betp or ppl");
      }
    }
  }

  if (const YAML::Node l = root["lidar"]; l && r.map(l, "lidar", {"num_rays", "fov_deg", "max_range", "range_noise_sigma"})) {
    r.number(l, "num_rays", "lidar", cfg.lidar.num_rays, positive, "must be at least 1");
    r.number(l, "fov_deg", "lidar", cfg.lidar.fov_deg, [](double v) { return v > 0.0 && v <= 360.0; },
             "must lie in (0, 360]");
    r.number(l, "max_range", "lidar", cfg.lidar.max_range, positive, "must be positive");
    r.number(l, "range_noise_sigma", "lidar", cfg.lidar.range_noise_sigma, non_negative, "must be non-negative");
  }

  if (const YAML::Node d = root["decay"]; d && r.map(d, "decay", {"enabled", "lambda_d", "lambda_alpha"})) {
    cfg.decay.enabled = r.scalar<bool>(d, "enabled", "decay", "true or false");
    r.number(d, "lambda_d", "decay", cfg.decay.lambda_d, non_negative, "must be non-negative");
    r.number(d, "lambda_alpha", "decay", cfg.decay.lambda_alpha, non_negative, "must be non-negative");
  }

  if (const YAML::Node e = root["env"]; e && r.map(e, "env", {"width", "height", "rooms", "corridors", "static_obstacles",
                                                              "dynamic_obstacles", "dynamic_speed", "interior_margin"})) {
    r.number(e, "width", "env", cfg.env.width, positive, "must be positive");
    r.number(e, "height", "env", cfg.env.height, positive, "must be positive");
    r.number(e, "rooms", "env", cfg.env.rooms, non_negative, "must be non-negative");
    r.number(e, "corridors", "env", cfg.env.corridors, non_negative, "must be non-negative");
    r.number(e, "static_obstacles", "env", cfg.env.static_obstacles, non_negative, "must be non-negative");
    r.number(e, "dynamic_obstacles", "env", cfg.env.dynamic_obstacles, non_negative, "must be non-negative");
    r.number(e, "dynamic_speed", "env", cfg.env.dynamic_speed, non_negative, "must be non-negative");
    r.number(e, "interior_margin", "env", cfg.env.interior_margin, non_negative, "must be non-negative");
  }

  if (const YAML::Node t = root["trajectory"]; t && r.map(t, "trajectory", {"steps", "inset"})) {
    r.number(t, "steps", "trajectory", cfg.trajectory.steps, non_negative, "must be non-negative");
    r.number(t, "inset", "trajectory", cfg.trajectory.inset, positive, "must be positive");
  }

  if (const YAML::Node m = root["multi_robot"]; m && r.map(m, "multi_robot", {"robots", "odom_sigma_trans", "odom_sigma_rot",
                                                                               "rendezvous_distance", "noisy_range_sigma"})) {
    r.number(m, "robots", "multi_robot", cfg.multi_robot.robots, positive, "must be at least 1");
    r.number(m, "odom_sigma_trans", "multi_robot", cfg.multi_robot.odom_sigma_trans, non_negative, "must be non-negative");
    r.number(m, "odom_sigma_rot", "multi_robot", cfg.multi_robot.odom_sigma_rot, non_negative, "must be non-negative");
    r.number(m, "rendezvous_distance", "multi_robot", cfg.multi_robot.rendezvous_distance, positive, "must be positive");
    r.number(m, "noisy_range_sigma", "multi_robot", cfg.multi_robot.noisy_range_sigma, non_negative, "must be non-negative");
  }

  if (const YAML::Node m = root["mechanism"]; m && r.map(m, "mechanism", {"robot_counts", "total_steps"})) {
    cfg.mechanism.robot_counts = r.list<int>(m, "robot_counts", "mechanism", positive, "robot counts must be at least 1");
    r.number(m, "total_steps", "mechanism", cfg.mechanism.total_steps, positive, "must be at least 1");
  }

  if (const YAML::Node d = root["realdata"]; d && r.map(d, "realdata", {"logs", "max_range", "fov_deg", "split_ratio", "scan_splits"})) {
    if (const YAML::Node logs = d["logs"]) {
      if (!logs.IsSequence()) {
        r.fail(logs, "realdata.logs", "expected a list of paths");
      } else {
        for (const auto& item : logs) {
          if (item.IsScalar()) {
            cfg.realdata.logs.push_back(item.as<std::string>());
          } else {
            r.fail(item, "realdata.logs", "expected a path");
          }
        }
      }
    }
    r.number(d, "max_range", "realdata", cfg.realdata.max_range, positive, "must be positive");
    r.number(d, "fov_deg", "realdata", cfg.realdata.fov_deg, [](double v) { return v > 0.0 && v <= 360.0; },
             "must lie in (0, 360]");
    r.number(d, "split_ratio", "realdata", cfg.realdata.split_ratio, [](double v) { return v > 0.0 && v < 1.0; },
             "must lie in (0, 1)");
    if (auto s = r.list<int>(d, "scan_splits", "realdata", positive, "scan splits must be at least 1")) cfg.realdata.scan_splits = *s;
  }

  if (const YAML::Node p = root["planner"]; p && r.map(p, "planner", {"queries", "seed", "obstacle_threshold"})) {
    r.number(p, "queries", "planner", cfg.planner.queries, positive, "must be at least 1");
    r.number(p, "seed", "planner", cfg.planner.seed, non_negative, "must be non-negative");
    r.number(p, "obstacle_threshold", "planner", cfg.planner.obstacle_threshold,
             [](double v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
  }

  if (const YAML::Node s = root["stats"]; s && r.map(s, "stats", {"alpha", "margins", "bootstrap", "input"})) {
    r.number(s, "alpha", "stats", cfg.stats.alpha, [](double v) { return v > 0.0 && v < 0.5; }, "must lie in (0, 0.5)");
    if (const YAML::Node m = s["margins"]; m && r.map(m, "stats.margins", {"cell_accuracy", "boundary_sharpness", "brier", "entropy"})) {
      for (const MetricInfo& info : kMetrics) {
        r.number(m, info.name, "stats.margins", cfg.stats.margins[info.metric], positive, "margins must be positive");
      }
    }
    if (const YAML::Node b = s["bootstrap"]; b && r.map(b, "stats.bootstrap", {"block", "iterations", "seed"})) {
      r.number(b, "block", "stats.bootstrap", cfg.stats.bootstrap_block, positive, "must be at least 1");
      r.number(b, "iterations", "stats.bootstrap", cfg.stats.bootstrap_iterations, positive, "must be at least 1");
      r.number(b, "seed", "stats.bootstrap", cfg.stats.bootstrap_seed, non_negative, "must be non-negative");
    }
    if (auto v = r.scalar<std::string>(s, "input", "stats", "a path")) cfg.stats.input = *v;
  }

  if (!r.diags.empty()) throw ConfigError(r.diags);
  return cfg;
}

// Reads and validates a config file; relative log and input paths are taken
// relative to the file's directory.
[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({fmt::format("cannot read config file '{}'", path.string())});
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str());
  const auto base = path.parent_path();
  auto anchor = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  for (auto& log : cfg.realdata.logs) anchor(log);
  anchor(cfg.stats.input);
  return cfg;
}

}  // namespace gridfuse
