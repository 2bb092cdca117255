#include <doctest.h>

#include <cctype>
#include <filesystem>
#include <fstream>

#include "imgep/config.hpp"
#include "imgep/error.hpp"

using namespace imgep;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig modified() {
  ExperimentConfig cfg;
  cfg.env = EnvConfig::arm_two_balls();
  cfg.env.distractor_step_sigma = 0.03;
  cfg.dmp = DmpConfig::standard(cfg.env.episode_steps, 1.0);
  cfg.dmp.weight_scale = 123.456;
  cfg.render.arm_rendered = true;
  cfg.representation.architecture = VaeArchitecture::full();
  cfg.representation.architecture.image_size = cfg.render.resolution;
  cfg.representation.train.learning_rate = 3e-4;
  cfg.representation.train.precision = Precision::kDouble;
  cfg.representation.checkpoint = "weights/vae.ckpt";
  cfg.online_train.iterations = 77;
  cfg.exploration.strategy = Strategy::kMgeEfr;
  cfg.exploration.noise_sigma = 0.1 / 3.0;
  cfg.exploration.interest_competence = Competence::kLinear;
  cfg.evaluation.bins = 12;
  cfg.seeds = {7, 3, 11};
  cfg.output_dir = "elsewhere";
  cfg.jobs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("serialize then parse is the identity") {
  ExperimentConfig defaults;
  CHECK(parse_config(serialize_config(defaults)) == defaults);
  auto m = modified();
  REQUIRE_NOTHROW(m.validate());
  CHECK(parse_config(serialize_config(m)) == m);
  CHECK(serialize_config(parse_config(serialize_config(m))) == serialize_config(m));
}

TEST_CASE("missing keys fall back to defaults") {
  CHECK(parse_config("{}") == ExperimentConfig{});
  auto cfg = parse_config(R"({"environment": {"variant": "Arm2Balls"}})");
  CHECK(cfg.env == EnvConfig::arm_two_balls());
  CHECK(cfg.env.n_joints == 7);

  cfg = parse_config(R"({"environment": {"n_joints": 4}})");
  CHECK(cfg.env.link_lengths == std::vector<double>(4, 0.25));
  CHECK(cfg.env.joint_limits.size() == 4);
  CHECK(cfg.online_train.iterations == 3000);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"seedz": [1]})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"exploration": {"budjet": 10}})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"representation": {"architecture": {"layers": 2}}})"), ArgumentError);
  CHECK_THROWS_AS(parse_config("{not json"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"jobs": "many"})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"exploration": {"strategy": "RGE-PCA"}})"), ArgumentError);
}

TEST_CASE("validation across blocks") {
  CHECK_THROWS_AS(parse_config(R"({"render": {"resolution": 32}})"), ArgumentError);
  CHECK_NOTHROW(parse_config(R"({"render": {"resolution": 32}, "representation": {"architecture": {"image_size": 32}}})"));
  CHECK_THROWS_AS(parse_config(R"({"seeds": []})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"seeds": [1, 2, 1]})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"jobs": 0})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"evaluation": {"bins": 0}})"), ArgumentError);
  CHECK_THROWS_AS(parse_config(R"({"exploration": {"budget": 0}})"), ArgumentError);
}

TEST_CASE("config hash") {
  ExperimentConfig cfg;
  auto h = config_hash(cfg);
  REQUIRE(h.size() == 16);
  for (char c : h) CHECK((std::isdigit(static_cast<unsigned char>(c)) || (c >= 'a' && c <= 'f')));
  CHECK(std::stoull(h, nullptr, 16) == fnv1a(serialize_config(cfg)));
  CHECK(config_hash(cfg) == h);
  CHECK(config_hash(modified()) != h);
  cfg.jobs = 3;
  cfg.output_dir = "elsewhere";
  CHECK(config_hash(cfg) == h);
  cfg.exploration.noise_sigma = 0.06;
  CHECK(config_hash(cfg) != h);
}

TEST_CASE("load and save") {
  const auto dir = std::filesystem::temp_directory_path() / "imgep_config_test";
  std::filesystem::create_directories(dir);
  auto m = modified();
  save_config(dir / "c.json", m);
  CHECK(load_config(dir / "c.json") == m);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
  CHECK_THROWS_AS(save_config(dir / "no" / "such" / "dir.json", m), IoError);
  std::ofstream(dir / "bad.json") << R"({"dmp": {"tau": -1}})";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ArgumentError);
  std::filesystem::remove_all(dir);
}
