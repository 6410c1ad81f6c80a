#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "gridfuse/config.hpp"
#include "gridfuse/experiment.hpp"

using namespace gridfuse;

namespace {

std::vector<std::string> diagnostics(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.diagnostics();
  }
  return {};
}

bool mentions(const std::vector<std::string>& d, const std::string& needle) {
  return std::any_of(d.begin(), d.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, EmptyGivesDeskScaleSingleAgentDefaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_FALSE(c.kind);
  EXPECT_TRUE(c.desk_scale);
  EXPECT_EQ(resolve_seeds(c, ExperimentKind::SingleAgent), (std::vector<std::uint64_t>{42, 43, 44, 45, 46}));
  EXPECT_EQ(resolve_arms(c, ExperimentKind::SingleAgent), (std::vector<FusionRule>{FusionRule::Bayesian, FusionRule::Dempster}));
  const SimProtocol p = single_agent_protocol(c);
  EXPECT_DOUBLE_EQ(p.env.width, 20.0);
  EXPECT_EQ(p.steps, 100);
  EXPECT_EQ(p.lidar.num_rays, 45);
  EXPECT_TRUE(p.decay.enabled);
  EXPECT_EQ(parse_config("# only a comment\n").desk_scale, true);
}

TEST(Config, FullScaleDefaults) {
  ExperimentConfig c = parse_config("desk_scale: false\n");
  EXPECT_EQ(resolve_seeds(c, ExperimentKind::SingleAgent).size(), 15u);
  const SimProtocol s = single_agent_protocol(c);
  EXPECT_DOUBLE_EQ(s.env.width, 50.0);
  EXPECT_EQ(s.steps, 500);
  EXPECT_EQ(s.lidar.num_rays, 180);
  EXPECT_DOUBLE_EQ(s.lidar.max_range, 15.0);
  const SimProtocol m = multi_robot_protocol(c);
  EXPECT_DOUBLE_EQ(m.env.width, 20.0);
  EXPECT_EQ(m.env.static_obstacles, 5);
  EXPECT_EQ(m.env.dynamic_obstacles, 3);
  EXPECT_DOUBLE_EQ(m.env.dynamic_speed, 0.3);
  EXPECT_EQ(m.robots, 3);
  EXPECT_EQ(m.steps, 200);
  EXPECT_EQ(m.lidar.num_rays, 90);
  EXPECT_DOUBLE_EQ(m.lidar.max_range, 8.0);
  EXPECT_FALSE(m.decay.enabled);
}

TEST(Config, LmaxDiagnostic) {
  const auto d = diagnostics("fusion:\n  l_max: -1\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].find("L_max must be positive or 'inf'"), std::string::npos);
  EXPECT_NE(d[0].find("line 2"), std::string::npos);
  EXPECT_FALSE(parse_config("fusion:\n  l_max: inf\n").fusion.l_max->finite());
  EXPECT_DOUBLE_EQ(parse_config("fusion:\n  l_max: 20\n").fusion.l_max->bound(), 20.0);
}

TEST(Config, SeedRanges) {
  EXPECT_EQ(parse_config("seeds: 42..56\n").seeds->size(), 15u);
  EXPECT_EQ(*parse_config("seeds: [1, 5]\n").seeds, (std::vector<std::uint64_t>{1, 5}));
  EXPECT_EQ(*parse_config("seeds: 7\n").seeds, (std::vector<std::uint64_t>{7}));
  EXPECT_TRUE(mentions(diagnostics("seeds: 9..3\n"), "seeds"));
  EXPECT_FALSE(parse_seed_range("a..b"));
}

TEST(Config, UnknownKeysAndAggregation) {
  const auto d = diagnostics("kind: single-agent\nbogus: 1\n");
  EXPECT_TRUE(mentions(d, "bogus"));
  const auto many = diagnostics("fusion:\n  l_occ: -2\n  l_free: 1\nlidar:\n  num_rays: 0\n  colour: red\n");
  EXPECT_GE(many.size(), 4u);
  EXPECT_TRUE(mentions(many, "l_occ"));
  EXPECT_TRUE(mentions(many, "l_free"));
  EXPECT_TRUE(mentions(many, "num_rays"));
  EXPECT_TRUE(mentions(many, "colour"));
}

TEST(Config, KindsAndArms) {
  for (const auto& [kind, name] : kExperimentKinds) {
    EXPECT_EQ(*parse_config("kind: " + std::string(name) + "\n").kind, kind);
  }
  EXPECT_TRUE(mentions(diagnostics("kind: nonsense\n"), "kind"));
  EXPECT_EQ(parse_config("arms: [bayesian, dempster, yager]\n").arms->size(), 3u);
  EXPECT_TRUE(mentions(diagnostics("arms: [bayesian]\n"), "arms"));
  EXPECT_TRUE(mentions(diagnostics("arms: [bayesian, magic]\n"), "magic"));
}

TEST(Config, SyntaxErrorReportsLine) {
  const auto d = diagnostics("fusion:\n  l_occ: [1, 2\n");
  ASSERT_FALSE(d.empty());
  EXPECT_TRUE(mentions(d, "line"));
}

TEST(Config, LoadResolvesRelativePaths) {
  const auto dir = std::filesystem::temp_directory_path() / "gridfuse_cfg_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.yaml") << "kind: realdata\nrealdata:\n  logs: [logs/a.clf]\n";
  const ExperimentConfig c = load_config(dir / "c.yaml");
  ASSERT_EQ(c.realdata.logs.size(), 1u);
  EXPECT_EQ(std::filesystem::path(c.realdata.logs[0]), dir / "logs/a.clf");
  std::filesystem::remove_all(dir);
}

TEST(Config, BundledConfigsValidate) {
  for (const auto& e : std::filesystem::directory_iterator(std::string(GRIDFUSE_TEST_DATA) + "/../../configs")) {
    if (e.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW((void)load_config(e.path())) << e.path();
    EXPECT_TRUE(load_config(e.path()).kind) << e.path();
  }
}
