#pragma once

// Experiment protocols behind the CLI: preset resolution, the seed worker
// pool, paired statistics across seeds, and report files.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gridfuse/config.hpp"
#include "gridfuse/metrics.hpp"
#include "gridfuse/pgm.hpp"
#include "gridfuse/planner.hpp"
#include "gridfuse/realdata.hpp"
#include "gridfuse/simworld.hpp"
#include "gridfuse/stats.hpp"

namespace gridfuse {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Worker pool

[[nodiscard]] inline unsigned worker_count() {
  if (const char* env = std::getenv("GRIDFUSE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(0..n-1) on the pool; the first exception is rethrown after join.
template <class Body>
void parallel_for(std::size_t n, Body body) {
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex guard;
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(guard);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Protocol settings

struct SimProtocol {
  EnvParams env;
  double resolution = 0.1;
  int steps = 500;
  double inset = 1.0;
  LidarConfig lidar;
  SensorDecay decay;
  FusionParams base;
  int robots = 1;
  double odom_sigma_trans = 0.0;
  double odom_sigma_rot = 0.0;
  double rendezvous_distance = 2.5;
  double noisy_range_sigma = 0.10;
};

namespace detail {

template <class T>
void set_if(T& dst, const std::optional<T>& src) {
  if (src) dst = *src;
}

inline void apply_overrides(const ExperimentConfig& cfg, SimProtocol& p) {
  set_if(p.env.width, cfg.env.width);
  set_if(p.env.height, cfg.env.height);
  set_if(p.env.rooms, cfg.env.rooms);
  set_if(p.env.corridors, cfg.env.corridors);
  set_if(p.env.static_obstacles, cfg.env.static_obstacles);
  set_if(p.env.dynamic_obstacles, cfg.env.dynamic_obstacles);
  set_if(p.env.dynamic_speed, cfg.env.dynamic_speed);
  set_if(p.env.interior_margin, cfg.env.interior_margin);
  set_if(p.resolution, cfg.resolution);
  set_if(p.steps, cfg.trajectory.steps);
  set_if(p.inset, cfg.trajectory.inset);
  set_if(p.lidar.num_rays, cfg.lidar.num_rays);
  if (cfg.lidar.fov_deg) p.lidar.fov = *cfg.lidar.fov_deg * std::numbers::pi / 180.0;
  set_if(p.lidar.max_range, cfg.lidar.max_range);
  set_if(p.lidar.range_noise_sigma, cfg.lidar.range_noise_sigma);
  set_if(p.decay.enabled, cfg.decay.enabled);
  set_if(p.decay.lambda_d, cfg.decay.lambda_d);
  set_if(p.decay.lambda_alpha, cfg.decay.lambda_alpha);
  set_if(p.base.l_occ, cfg.fusion.l_occ);
  set_if(p.base.l_free, cfg.fusion.l_free);
  set_if(p.base.l_max, cfg.fusion.l_max);
  set_if(p.base.mof_floor, cfg.fusion.mof_floor);
  set_if(p.base.matching, cfg.fusion.matching);
  set_if(p.robots, cfg.multi_robot.robots);
  set_if(p.odom_sigma_trans, cfg.multi_robot.odom_sigma_trans);
  set_if(p.odom_sigma_rot, cfg.multi_robot.odom_sigma_rot);
  set_if(p.rendezvous_distance, cfg.multi_robot.rendezvous_distance);
  set_if(p.noisy_range_sigma, cfg.multi_robot.noisy_range_sigma);
}

}  // namespace detail

// Single-agent protocol: 50x50 m, 500 steps, 180 rays, decaying sensor model.
// Desk scale shrinks it to 20x20 m, 100 steps, 45 rays.
[[nodiscard]] inline SimProtocol single_agent_protocol(const ExperimentConfig& cfg) {
  SimProtocol p;
  p.env = single_agent_env();
  p.decay.enabled = true;
  if (cfg.desk_scale) {
    p.env.width = p.env.height = 20.0;
    p.steps = 100;
    p.lidar.num_rays = 45;
  }
  detail::apply_overrides(cfg, p);
  return p;
}

// Multi-robot protocol: 20x20 m, three robots, 200 steps each, 90 rays to
// 8 m, odometry drift and constant sensor parameters.
[[nodiscard]] inline SimProtocol multi_robot_protocol(const ExperimentConfig& cfg) {
  SimProtocol p;
  p.env = multi_robot_env();
  p.steps = 200;
  p.lidar = {90, 2.0 * std::numbers::pi, 8.0, 0.03};
  p.robots = 3;
  p.odom_sigma_trans = 0.02;
  p.odom_sigma_rot = 0.005;
  if (cfg.desk_scale) {
    p.steps = 100;
    p.lidar.num_rays = 45;
  }
  detail::apply_overrides(cfg, p);
  return p;
}

[[nodiscard]] inline std::vector<std::uint64_t> resolve_seeds(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (cfg.seeds) return *cfg.seeds;
  if (kind == ExperimentKind::PlanEval) return {42};
  if (kind == ExperimentKind::RealData || kind == ExperimentKind::StatsOnly) return {0};
  std::vector<std::uint64_t> s;
  for (std::uint64_t v = 42; v < (cfg.desk_scale ? 47u : 57u); ++v) s.push_back(v);
  return s;
}

[[nodiscard]] inline std::vector<FusionRule> resolve_arms(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (cfg.arms) return *cfg.arms;
  if (kind == ExperimentKind::AblateYager) return {FusionRule::Bayesian, FusionRule::Dempster, FusionRule::Yager};
  return {FusionRule::Bayesian, FusionRule::Dempster};
}

[[nodiscard]] inline std::vector<ArmSpec> make_arms(const std::vector<FusionRule>& rules, const FusionParams& base) {
  std::vector<ArmSpec> arms;
  for (FusionRule r : rules) {
    FusionParams p = base;
    p.rule = r;
    arms.push_back({std::string(to_string(r)), p});
  }
  return arms;
}

// One robot patrolling the ring `inset` metres inside the bounds, covering
// the circuit once over the protocol's steps.
[[nodiscard]] inline RunConfig single_agent_run(const SimProtocol& p, std::uint64_t seed,
                                                const std::vector<ArmSpec>& arms) {
  RunConfig run;
  run.seed = seed;
  run.env = p.env;
  run.resolution = p.resolution;
  run.arms = arms;
  run.decay = p.decay;
  RobotConfig rob;
  rob.patrol.inset = p.inset;
  rob.patrol.steps = p.steps;
  rob.patrol.step_size = patrol_perimeter(rob.patrol, p.env.width, p.env.height) / std::max(1, p.steps);
  rob.lidar = p.lidar;
  run.robots = {rob};
  return run;
}

// Robots on nested rings, evenly phased, sharing one step length.
[[nodiscard]] inline RunConfig multi_robot_run(const SimProtocol& p, std::uint64_t seed,
                                               const std::vector<ArmSpec>& arms, double range_sigma) {
  RunConfig run = single_agent_run(p, seed, arms);
  run.rendezvous_distance = p.rendezvous_distance;
  const RobotConfig proto = run.robots.front();
  run.robots.clear();
  const int R = std::max(1, p.robots);
  const double room = p.env.interior_margin - p.inset - 0.5;
  const double spacing = R > 1 ? std::clamp(room / (R - 1), 0.0, 1.0) : 0.0;
  for (int r = 0; r < R; ++r) {
    RobotConfig rob = proto;
    rob.patrol.inset = p.inset + spacing * r;
    rob.patrol.start_phase = static_cast<double>(r) / R;
    rob.lidar.range_noise_sigma = range_sigma;
    rob.odom_sigma_trans = p.odom_sigma_trans;
    rob.odom_sigma_rot = p.odom_sigma_rot;
    run.robots.push_back(rob);
  }
  return run;
}

// R robots splitting one circuit of `total_steps` steps into equal arcs.
[[nodiscard]] inline RunConfig mechanism_run(const SimProtocol& p, std::uint64_t seed,
                                             const std::vector<ArmSpec>& arms, int R, int total_steps) {
  RunConfig run = single_agent_run(p, seed, arms);
  const RobotConfig proto = run.robots.front();
  run.robots.clear();
  for (int r = 0; r < R; ++r) {
    RobotConfig rob = proto;
    rob.patrol.steps = total_steps / R;
    rob.patrol.step_size = patrol_perimeter(rob.patrol, p.env.width, p.env.height) / total_steps;
    rob.patrol.start_phase = static_cast<double>(r) / R;
    run.robots.push_back(rob);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Run records and the statistics family

struct ArmMetrics {
  std::string arm;
  MetricsReport metrics;
};

struct RunRecord {
  std::string kind;
  std::string condition;
  std::uint64_t seed = 0;
  std::vector<ArmMetrics> arms;

  [[nodiscard]] std::string run_id() const { return fmt::format("{}/{}/{}", kind, condition, seed); }
};

struct Comparison {
  std::string arm_a;
  std::string arm_b;
};

struct SavedMap {
  std::string name;
  ProbabilityGrid probs;
};

struct ExperimentOutput {
  ExperimentKind kind = ExperimentKind::SingleAgent;
  std::vector<RunRecord> runs;
  json stats = json::object();
  std::optional<json> downstream;
  std::vector<SavedMap> maps;
};

[[nodiscard]] inline json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

[[nodiscard]] inline json json_interval(const stats::Interval& i) { return json::array({json_number(i.lo), json_number(i.hi)}); }

[[nodiscard]] inline std::vector<Metric> family_metrics(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::MultiRobot:
    case ExperimentKind::PlanEval:
      return {Metric::CellAccuracy, Metric::BoundarySharpness, Metric::Entropy};
    case ExperimentKind::RealData:
    case ExperimentKind::StatsOnly:
      return {Metric::CellAccuracy, Metric::BoundarySharpness, Metric::Brier, Metric::Entropy};
    default:
      return {Metric::CellAccuracy, Metric::BoundarySharpness, Metric::Brier};
  }
}

[[nodiscard]] inline const MetricInfo& metric_info(Metric m) {
  return *std::find_if(kMetrics.begin(), kMetrics.end(), [&](const MetricInfo& i) { return i.metric == m; });
}

[[nodiscard]] inline std::vector<Comparison> default_comparisons(const std::vector<std::string>& arms,
                                                                 ExperimentKind kind) {
  std::vector<Comparison> out;
  for (std::size_t k = 1; k < arms.size(); ++k) out.push_back({arms[0], arms[k]});
  if (kind == ExperimentKind::AblateYager) {
    const bool has_y = std::count(arms.begin(), arms.end(), "yager") > 0;
    const bool has_d = std::count(arms.begin(), arms.end(), "dempster") > 0;
    if (has_y && has_d) out.push_back({"yager", "dempster"});
  }
  return out;
}

// Paired statistics for every (condition, comparison, metric) across seeds,
// Holm-corrected over the whole family.
[[nodiscard]] inline json paired_family(const std::vector<RunRecord>& runs, const std::vector<Comparison>& comps,
                                        const std::vector<Metric>& metrics, const StatsOptions& opt) {
  std::vector<std::string> conditions;
  for (const auto& r : runs) {
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) conditions.push_back(r.condition);
  }
  json family = json::array();
  std::vector<double> pvals;
  std::vector<std::size_t> slots;
  for (const auto& cond : conditions) {
    std::vector<const RunRecord*> rs;
    for (const auto& r : runs) {
      if (r.condition == cond) rs.push_back(&r);
    }
    std::sort(rs.begin(), rs.end(), [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
    for (const Comparison& c : comps) {
      for (Metric m : metrics) {
        const MetricInfo& info = metric_info(m);
        stats::PairedSample sample;
        sample.polarity = info.polarity;
        for (const RunRecord* r : rs) {
          auto find = [&](const std::string& name) -> const ArmMetrics* {
            for (const auto& a : r->arms) {
              if (a.arm == name) return &a;
            }
            return nullptr;
          };
          const ArmMetrics* a = find(c.arm_a);
          const ArmMetrics* b = find(c.arm_b);
          if (a && b) sample.diffs.push_back(metric_value(a->metrics, m) - metric_value(b->metrics, m));
        }
        const double margin = opt.margins.at(m);
        json e;
        e["metric"] = info.name;
        e["condition"] = cond;
        e["arm_a"] = c.arm_a;
        e["arm_b"] = c.arm_b;
        e["n"] = sample.n();
        e["margin"] = margin;
        if (sample.n() < 2) {
          e["mean_diff"] = sample.n() == 1 ? json_number(sample.diffs[0]) : json(nullptr);
          e["note"] = "fewer than two pairs";
          family.push_back(e);
          continue;
        }
        const stats::TostResult t = stats::tost(sample, margin, opt.alpha);
        e["mean_diff"] = json_number(t.mean_diff);
        e["ci90"] = json_interval(t.ci);
        e["p_tost"] = json_number(t.p);
        e["equivalent"] = t.equivalent;
        e["degenerate_variance"] = t.degenerate;
        json sweep = json::array();
        for (const auto& s : t.sweep) {
          sweep.push_back({{"multiplier", s.multiplier}, {"margin", s.margin}, {"p", json_number(s.p)}, {"equivalent", s.equivalent}});
        }
        e["tost_sweep"] = sweep;
        e["smallest_passing_margin"] = t.smallest_passing_margin ? json(*t.smallest_passing_margin) : json(nullptr);
        e["breakpoint"] = json_number(t.breakpoint);
        const int k = stats::count_favouring(sample);
        e["k_of_n"] = json::array({k, sample.n()});
        e["binomial_p"] = stats::binomial_direction(k, static_cast<int>(sample.n()));
        if (t.degenerate) {
          e["d"] = e["ci_hedges"] = e["ci_nct"] = e["bf01"] = e["bf01_interval"] = nullptr;
        } else {
          const stats::EffectSize es = stats::cohens_d(sample);
          e["d"] = json_number(es.d);
          e["ci_hedges"] = json_interval(es.ci_hedges);
          e["ci_nct"] = json_interval(es.ci_noncentral);
          e["bf01"] = json_number(stats::bayes_factor_01(sample, margin));
          e["bf01_interval"] = json_number(stats::bayes_factor_interval(sample, margin, margin));
        }
        pvals.push_back(t.p);
        slots.push_back(family.size());
        family.push_back(e);
      }
    }
  }
  const stats::HolmResult holm = stats::holm_bonferroni(pvals, opt.alpha);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    family[slots[k]]["holm_adjusted_p"] = json_number(holm.adjusted[k]);
    family[slots[k]]["holm_reject"] = holm.reject[k];
  }
  return family;
}

[[nodiscard]] inline std::vector<ArmMetrics> evaluate_run(const RunResult& res) {
  const EvalSet ev = build_eval_set(res.observation_counts, res.ground_truth);
  std::vector<ArmMetrics> out;
  for (std::size_t a = 0; a < res.grids.size(); ++a) {
    out.push_back({res.arms[a].name, evaluate(res.grids[a].probability_grid(), ev)});
  }
  return out;
}

[[nodiscard]] inline std::string map_name(std::string_view condition, std::string_view arm, std::uint64_t seed) {
  std::string c(condition);
  std::replace_if(c.begin(), c.end(), [](char ch) { return ch == '/' || ch == '=' || ch == ' '; }, '-');
  return fmt::format("{}_{}_seed{}", c, arm, seed);
}

// ---------------------------------------------------------------------------
// Simulation families

struct SimJob {
  std::string condition;
  std::uint64_t seed = 0;
  RunConfig run;
  bool save_maps = false;
};

[[nodiscard]] inline ExperimentOutput run_sim_jobs(ExperimentKind kind, const std::vector<SimJob>& jobs,
                                                   const std::vector<Comparison>& comps, const StatsOptions& opt) {
  ExperimentOutput out;
  out.kind = kind;
  out.runs.resize(jobs.size());
  std::vector<std::vector<SavedMap>> maps(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) {
    const SimJob& job = jobs[k];
    const RunResult res = job.run.robots.size() == 1 ? run_single_agent(job.run) : run_multi_robot(job.run);
    out.runs[k] = {std::string(to_string(kind)), job.condition, job.seed, evaluate_run(res)};
    if (job.save_maps) {
      for (std::size_t a = 0; a < res.grids.size(); ++a) {
        maps[k].push_back({map_name(job.condition, res.arms[a].name, job.seed), res.grids[a].probability_grid()});
      }
      ProbabilityGrid gt(res.spec, 0.0);
      for (std::size_t c = 0; c < gt.size(); ++c) gt.at_linear(c) = res.ground_truth.at_linear(c);
      maps[k].push_back({map_name(job.condition, "truth", job.seed), std::move(gt)});
    }
  });
  for (auto& m : maps) {
    for (auto& s : m) out.maps.push_back(std::move(s));
  }
  out.stats["family"] = paired_family(out.runs, comps, family_metrics(kind), opt);
  return out;
}

[[nodiscard]] inline std::vector<std::string> arm_names(const std::vector<ArmSpec>& arms) {
  std::vector<std::string> names;
  for (const auto& a : arms) names.push_back(a.name);
  return names;
}

struct Condition {
  std::string name;
  SimProtocol protocol;
  std::vector<ArmSpec> arms;
};

[[nodiscard]] inline std::vector<Condition> single_agent_conditions(const ExperimentConfig& cfg, ExperimentKind kind) {
  const SimProtocol base = single_agent_protocol(cfg);
  const auto rules = resolve_arms(cfg, kind);
  std::vector<Condition> out;
  switch (kind) {
    case ExperimentKind::AblateLmax:
      for (const LogOddsLimit lm : {LogOddsLimit(5), LogOddsLimit(10), LogOddsLimit(20), LogOddsLimit::unbounded()}) {
        auto arms = make_arms(rules, base.base);
        for (auto& a : arms) {
          if (!is_belief_rule(a.params.rule)) a.params.l_max = lm;
        }
        out.push_back({"lmax=" + lm.str(), base, arms});
      }
      break;
    case ExperimentKind::AblateRegularization:
      for (const double floor : {0.001, 0.01, 0.05}) {
        auto arms = make_arms(rules, base.base);
        for (auto& a : arms) {
          if (is_belief_rule(a.params.rule)) a.params.mof_floor = floor;
        }
        out.push_back({fmt::format("floor={}", floor), base, arms});
      }
      break;
    case ExperimentKind::SensorSensitivity: {
      const std::pair<const char*, std::pair<double, double>> sets[] = {
          {"weak", {1.0, -0.3}}, {"default", {2.0, -0.5}}, {"strong", {4.0, -1.0}}, {"symmetric", {1.5, -1.5}}};
      for (const auto& [name, lo] : sets) {
        FusionParams fp = base.base;
        fp.l_occ = lo.first;
        fp.l_free = lo.second;
        out.push_back({name, base, make_arms(rules, fp)});
      }
      break;
    }
    default:
      out.push_back({"single", base, make_arms(rules, base.base)});
  }
  return out;
}

[[nodiscard]] inline ExperimentOutput run_single_agent_family(const ExperimentConfig& cfg, ExperimentKind kind) {
  const auto seeds = resolve_seeds(cfg, kind);
  const auto conditions = single_agent_conditions(cfg, kind);
  std::vector<SimJob> jobs;
  for (const auto& c : conditions) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      jobs.push_back({c.name, seeds[s], single_agent_run(c.protocol, seeds[s], c.arms), s == 0});
    }
  }
  return run_sim_jobs(kind, jobs, default_comparisons(arm_names(conditions.front().arms), kind), cfg.stats);
}

[[nodiscard]] inline ExperimentOutput run_multi_robot_family(const ExperimentConfig& cfg) {
  const auto seeds = resolve_seeds(cfg, ExperimentKind::MultiRobot);
  const SimProtocol p = multi_robot_protocol(cfg);
  const auto arms = make_arms(resolve_arms(cfg, ExperimentKind::MultiRobot), p.base);
  std::vector<SimJob> jobs;
  for (const auto& [name, sigma] : {std::pair{"dynamic", p.lidar.range_noise_sigma}, std::pair{"noisy", p.noisy_range_sigma}}) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      jobs.push_back({name, seeds[s], multi_robot_run(p, seeds[s], arms, sigma), s == 0});
    }
  }
  return run_sim_jobs(ExperimentKind::MultiRobot, jobs, default_comparisons(arm_names(arms), ExperimentKind::MultiRobot),
                      cfg.stats);
}

[[nodiscard]] inline ExperimentOutput run_mechanism_family(const ExperimentConfig& cfg) {
  const auto seeds = resolve_seeds(cfg, ExperimentKind::Mechanism);
  SimProtocol p = single_agent_protocol(cfg);
  p.decay.enabled = cfg.decay.enabled.value_or(false);
  const int total = cfg.mechanism.total_steps.value_or(p.steps);
  const auto counts = cfg.mechanism.robot_counts.value_or(std::vector<int>{1, 2, 3, 5});
  const auto arms = make_arms(resolve_arms(cfg, ExperimentKind::Mechanism), p.base);
  std::vector<SimJob> jobs;
  for (int R : counts) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      jobs.push_back({fmt::format("R={}", R), seeds[s], mechanism_run(p, seeds[s], arms, R, total), s == 0});
    }
  }
  return run_sim_jobs(ExperimentKind::Mechanism, jobs, default_comparisons(arm_names(arms), ExperimentKind::Mechanism),
                      cfg.stats);
}

[[nodiscard]] inline json downstream_json(const DownstreamReport& r, const std::vector<ArmSpec>& arms) {
  json j;
  j["queries"] = r.queries;
  j["shared_success"] = r.shared_success;
  j["path_equiv_rate"] = r.path_equiv_rate;
  j["clearance_delta_median"] = r.clearance_delta_median;
  j["clearance_delta_mean"] = r.clearance_delta_mean;
  j["frac_below_1cell"] = r.frac_below_1cell;
  j["clearance_reference"] = r.ground_truth_reference ? "ground-truth" : "own-map";
  j["own_map_delta_median"] = r.own_map_delta_median;
  j["own_map_delta_mean"] = r.own_map_delta_mean;
  json sr = json::object();
  for (std::size_t a = 0; a < arms.size(); ++a) sr[arms[a].name] = r.success_rate[a];
  j["success_rate"] = sr;
  return j;
}

// A* evaluation on the fused maps of the multi-robot dynamic condition.
[[nodiscard]] inline ExperimentOutput run_plan_eval(const ExperimentConfig& cfg) {
  const auto seeds = resolve_seeds(cfg, ExperimentKind::PlanEval);
  const SimProtocol p = multi_robot_protocol(cfg);
  const auto arms = make_arms(resolve_arms(cfg, ExperimentKind::PlanEval), p.base);
  ExperimentOutput out;
  out.kind = ExperimentKind::PlanEval;
  out.runs.resize(seeds.size());
  std::vector<json> reports(seeds.size());
  std::vector<std::vector<SavedMap>> maps(seeds.size());
  const PlannerOptions popt{cfg.planner.obstacle_threshold};
  parallel_for(seeds.size(), [&](std::size_t k) {
    const RunResult res = run_multi_robot(multi_robot_run(p, seeds[k], arms, p.lidar.range_noise_sigma));
    out.runs[k] = {"plan-eval", "dynamic", seeds[k], evaluate_run(res)};
    std::vector<ProbabilityGrid> grids;
    for (std::size_t a = 0; a < res.grids.size(); ++a) {
      grids.push_back(res.grids[a].probability_grid());
      if (k == 0) maps[k].push_back({map_name("dynamic", arms[a].name, seeds[k]), grids.back()});
    }
    const auto queries = sample_queries(res.ground_truth, cfg.planner.queries, cfg.planner.seed);
    json j = downstream_json(compare_arms(grids, queries, popt, &res.ground_truth), arms);
    j["seed"] = seeds[k];
    reports[k] = j;
  });
  for (auto& m : maps) {
    for (auto& sm : m) out.maps.push_back(std::move(sm));
  }
  json d = reports.front();
  d["query_seed"] = cfg.planner.seed;
  d["runs"] = reports;
  out.downstream = d;
  out.stats["family"] = paired_family(out.runs, default_comparisons(arm_names(arms), ExperimentKind::PlanEval),
                                      family_metrics(ExperimentKind::PlanEval), cfg.stats);
  return out;
}

// ---------------------------------------------------------------------------
// Real data

[[nodiscard]] inline ExperimentOutput run_realdata_family(const ExperimentConfig& cfg) {
  if (cfg.realdata.logs.empty()) {
    throw ConfigError({"realdata.logs: must list at least one CARMEN log for the realdata experiment"});
  }
  FusionParams base;
  detail::set_if(base.l_occ, cfg.fusion.l_occ);
  detail::set_if(base.l_free, cfg.fusion.l_free);
  detail::set_if(base.l_max, cfg.fusion.l_max);
  detail::set_if(base.mof_floor, cfg.fusion.mof_floor);
  detail::set_if(base.matching, cfg.fusion.matching);
  const auto arms = make_arms(resolve_arms(cfg, ExperimentKind::RealData), base);
  RealDataConfig rc;
  rc.max_range = cfg.realdata.max_range;
  rc.fov = cfg.realdata.fov_deg * std::numbers::pi / 180.0;
  rc.resolution = cfg.resolution.value_or(0.1);
  const auto comps = default_comparisons(arm_names(arms), ExperimentKind::RealData);

  ExperimentOutput out;
  out.kind = ExperimentKind::RealData;
  json boots = json::array();
  json invariance = json::array();
  for (const std::string& path : cfg.realdata.logs) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read CARMEN log '" + path + "'");
    const CarmenLog log = parse_carmen(in);
    const std::string stem = std::filesystem::path(path).stem().string();
    std::optional<RealDataResult> reference;
    for (int R : cfg.realdata.scan_splits) {
      const SplitPlan plan = split_scans(log.scans.size(), cfg.realdata.split_ratio, R);
      RealDataResult res = run_realdata(log.scans, plan, arms, rc);
      const std::string cond = fmt::format("{}/R={}", stem, R);
      RunRecord rec{"realdata", cond, 0, {}};
      for (std::size_t a = 0; a < arms.size(); ++a) {
        rec.arms.push_back({arms[a].name, evaluate(res.grids[a].probability_grid(), res.eval)});
        out.maps.push_back({map_name(cond, arms[a].name, 0), res.grids[a].probability_grid()});
      }
      out.runs.push_back(rec);
      for (const Comparison& c : comps) {
        const auto ia = std::find(rec.arms.begin(), rec.arms.end(), c.arm_a) - rec.arms.begin();
        const auto ib = std::find(rec.arms.begin(), rec.arms.end(), c.arm_b) - rec.arms.begin();
        for (Metric m : family_metrics(ExperimentKind::RealData)) {
          const auto field = per_cell_delta(res.grids[static_cast<std::size_t>(ia)], res.grids[static_cast<std::size_t>(ib)], res.eval, m);
          json e{{"log", stem}, {"R", R}, {"metric", metric_info(m).name}, {"arm_a", c.arm_a}, {"arm_b", c.arm_b}};
          if (m == Metric::Entropy) e["informational"] = true;
          try {
            json sens = json::array();
            for (int B : {5, 10, 20, cfg.stats.bootstrap_block}) {
              const auto b = stats::spatial_block_bootstrap(field, B, cfg.stats.bootstrap_iterations, cfg.stats.bootstrap_seed);
              json row{{"block", B}, {"mean_delta", json_number(b.mean)}, {"ci95", json_interval(b.ci)},
                       {"excludes_zero", !b.ci.contains(0.0)}, {"blocks", b.blocks}};
              if (B == cfg.stats.bootstrap_block && !e.contains("ci95")) {
                e["mean_delta"] = row["mean_delta"];
                e["ci95"] = row["ci95"];
                e["block"] = B;
                e["iterations"] = cfg.stats.bootstrap_iterations;
                e["seed"] = cfg.stats.bootstrap_seed;
              }
              if (sens.size() < 3) sens.push_back(row);
            }
            e["block_sensitivity"] = sens;
          } catch (const EmptyEvalSetError& err) {
            e["note"] = err.what();
          }
          boots.push_back(e);
        }
      }
      if (!reference) {
        reference = std::move(res);
        continue;
      }
      for (std::size_t a = 0; a < arms.size(); ++a) {
        double max_diff = 0.0;
        const ArmGrid& g0 = reference->grids[a];
        const ArmGrid& g1 = res.grids[a];
        for (std::size_t k = 0; k < g0.counts().size(); ++k) {
          if (g0.is_belief()) {
            const BBA x = g0.belief().at_linear(k);
            const BBA y = g1.belief().at_linear(k);
            max_diff = std::max({max_diff, std::abs(x.m_o - y.m_o), std::abs(x.m_f - y.m_f), std::abs(x.m_of - y.m_of)});
          } else {
            max_diff = std::max(max_diff, std::abs(g0.logodds().at_linear(k).L - g1.logodds().at_linear(k).L));
          }
        }
        invariance.push_back({{"log", stem}, {"arm", arms[a].name}, {"R", R},
                              {"reference_R", cfg.realdata.scan_splits.front()}, {"max_abs_cell_diff", max_diff}});
      }
    }
  }
  out.stats["bootstrap"] = boots;
  out.stats["scan_split_invariance"] = invariance;
  return out;
}

// ---------------------------------------------------------------------------
// Reports

[[nodiscard]] inline std::string runs_csv_body(const std::vector<RunRecord>& runs) {
  std::string s = csv_header() + "\n";
  for (const auto& r : runs) {
    for (const auto& a : r.arms) s += csv_row(r.run_id(), r.seed, a.arm, a.metrics) + "\n";
  }
  return s;
}

// Parses a runs.csv written by this tool (comment lines start with '#').
[[nodiscard]] inline std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::vector<RunRecord> runs;
  std::map<std::string, std::size_t> index;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 9) throw ParseError(fmt::format("runs.csv line {}: expected 9 fields", lineno));
    const std::string& id = f[0];
    const auto first = id.find('/');
    const auto last = id.rfind('/');
    if (first == std::string::npos || first == last) throw ParseError(fmt::format("runs.csv line {}: bad run_id", lineno));
    auto [it, fresh] = index.try_emplace(id, runs.size());
    if (fresh) {
      runs.push_back({id.substr(0, first), id.substr(first + 1, last - first - 1), std::stoull(f[1]), {}});
    }
    MetricsReport m{std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                    static_cast<std::size_t>(std::stoull(f[7])), static_cast<std::size_t>(std::stoull(f[8]))};
    runs[it->second].arms.push_back({f[2], m});
  }
  return runs;
}

[[nodiscard]] inline ExperimentOutput run_stats_only(const ExperimentConfig& cfg) {
  if (cfg.stats.input.empty()) throw ConfigError({"stats.input: stats-only needs the path of a runs.csv"});
  std::ifstream in(cfg.stats.input);
  if (!in) throw Error("cannot read '" + cfg.stats.input + "'");
  ExperimentOutput out;
  out.kind = ExperimentKind::StatsOnly;
  out.runs = read_runs_csv(in);
  std::vector<std::string> arms;
  for (const auto& r : out.runs) {
    for (const auto& a : r.arms) {
      if (std::find(arms.begin(), arms.end(), a.arm) == arms.end()) arms.push_back(a.arm);
    }
  }
  out.stats["family"] = paired_family(out.runs, default_comparisons(arms, ExperimentKind::StatsOnly),
                                      family_metrics(ExperimentKind::StatsOnly), cfg.stats);
  return out;
}

inline bool operator==(const ArmMetrics& a, const std::string& name) { return a.arm == name; }

[[nodiscard]] inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::MultiRobot: return run_multi_robot_family(cfg);
    case ExperimentKind::Mechanism: return run_mechanism_family(cfg);
    case ExperimentKind::RealData: return run_realdata_family(cfg);
    case ExperimentKind::PlanEval: return run_plan_eval(cfg);
    case ExperimentKind::StatsOnly: return run_stats_only(cfg);
    default: return run_single_agent_family(cfg, kind);
  }
}

[[nodiscard]] inline std::string stats_csv(const json& family) {
  std::string s = "metric,condition,arm_a,arm_b,n,mean_diff,ci90_lo,ci90_hi,p_tost,equivalent,d,ci_hedges_lo,ci_hedges_hi,"
                  "ci_nct_lo,ci_nct_hi,holm_adjusted_p,k,binomial_p,bf01,bf01_interval\n";
  auto cell = [](const json& j) -> std::string {
    if (j.is_null()) return "";
    if (j.is_string()) return j.get<std::string>();
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    if (j.is_number_float()) return fmt::format("{:.17g}", j.get<double>());
    return j.dump();
  };
  auto at = [](const json& e, const char* key) { return e.contains(key) ? e[key] : json(nullptr); };
  auto part = [](const json& v, std::size_t i) { return v.is_array() ? v[i] : json(nullptr); };
  for (const auto& e : family) {
    const json k = e.contains("k_of_n") ? e["k_of_n"][0] : json(nullptr);
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", cell(e["metric"]), cell(e["condition"]),
                     cell(e["arm_a"]), cell(e["arm_b"]), cell(e["n"]), cell(at(e, "mean_diff")),
                     cell(part(at(e, "ci90"), 0)), cell(part(at(e, "ci90"), 1)), cell(at(e, "p_tost")),
                     cell(at(e, "equivalent")), cell(at(e, "d")), cell(part(at(e, "ci_hedges"), 0)),
                     cell(part(at(e, "ci_hedges"), 1)), cell(part(at(e, "ci_nct"), 0)), cell(part(at(e, "ci_nct"), 1)),
                     cell(at(e, "holm_adjusted_p")), cell(k), cell(at(e, "binomial_p")), cell(at(e, "bf01")),
                     cell(at(e, "bf01_interval")));
  }
  return s;
}

// Writes runs.csv, stats.json, stats.csv, downstream.json and maps/*.pgm.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentOutput& out, const ExperimentConfig& cfg,
                          const std::vector<std::uint64_t>& seeds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  {
    std::ofstream f(dir / "runs.csv");
    f << fmt::format("# gridfuse {} generated {:%Y-%m-%dT%H:%M:%SZ}\n", to_string(out.kind), fmt::gmtime(now));
    f << runs_csv_body(out.runs);
  }
  json stats = out.stats;
  stats["kind"] = to_string(out.kind);
  stats["desk_scale"] = cfg.desk_scale;
  stats["seeds"] = seeds;
  stats["alpha"] = cfg.stats.alpha;
  std::ofstream(dir / "stats.json") << stats.dump(2) << "\n";
  if (stats.contains("family")) std::ofstream(dir / "stats.csv") << stats_csv(stats["family"]);
  if (out.downstream) std::ofstream(dir / "downstream.json") << out.downstream->dump(2) << "\n";
  if (!out.maps.empty()) {
    fs::create_directories(dir / "maps");
    for (const auto& m : out.maps) write_pgm(dir / "maps" / (m.name + ".pgm"), m.probs);
  }
}

}  // namespace gridfuse
