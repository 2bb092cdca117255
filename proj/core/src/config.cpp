#include "imgep/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "imgep/error.hpp"

namespace imgep {

using nlohmann::json;

namespace {

// Wraps a JSON object and rejects keys nobody asked for, so typos surface
// as config errors instead of silently using defaults.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ArgumentError("config: '" + path_ + "' must be an object");
  }

  template <typename V>
  void read(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception& e) {
      throw ArgumentError("config: bad value for '" + path_ + "." + key + "': " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Block sub(const char* key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    return Block(j_.contains(key) ? j_.at(key) : kEmpty, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ArgumentError("config: unknown key '" + path_ + "." + k + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }

void read_vec2(Block& b, const char* key, Vec2& out) {
  std::vector<double> v{out.x, out.y};
  b.read(key, v);
  if (v.size() != 2) throw ArgumentError(std::string("config: '") + key + "' needs two numbers");
  out = {v[0], v[1]};
}

EnvConfig parse_env(Block b) {
  std::string variant = "ArmBall";
  b.read("variant", variant);
  EnvConfig env = parse_env_variant(variant) == EnvVariant::kArmBall ? EnvConfig::arm_ball() : EnvConfig::arm_two_balls();
  int joints = env.n_joints;
  b.read("n_joints", joints);
  if (joints != env.n_joints) {
    if (joints < 1) throw ArgumentError("config: n_joints must be >= 1");
    env.n_joints = joints;
    env.link_lengths.assign(joints, 1.0 / joints);
    env.joint_limits.assign(joints, std::numbers::pi / 2);
  }
  b.read("link_lengths", env.link_lengths);
  b.read("joint_limits", env.joint_limits);
  b.read("grasp_radius", env.grasp_radius);
  b.read("ring_radius", env.ring_radius);
  b.read("ball_start_angle", env.ball_start_angle);
  read_vec2(b, "ball_start", env.ball_start);
  read_vec2(b, "distractor_start", env.distractor_start);
  b.read("distractor_step_sigma", env.distractor_step_sigma);
  b.read("episode_steps", env.episode_steps);
  b.finish();
  return env;
}

json env_json(const EnvConfig& e) {
  return {{"variant", to_string(e.variant)},
          {"n_joints", e.n_joints},
          {"link_lengths", e.link_lengths},
          {"joint_limits", e.joint_limits},
          {"grasp_radius", e.grasp_radius},
          {"ring_radius", e.ring_radius},
          {"ball_start_angle", e.ball_start_angle},
          {"ball_start", vec2_json(e.ball_start)},
          {"distractor_start", vec2_json(e.distractor_start)},
          {"distractor_step_sigma", e.distractor_step_sigma},
          {"episode_steps", e.episode_steps}};
}

DmpConfig parse_dmp(Block b, int episode_steps) {
  double tau = 1.0;
  b.read("tau", tau);
  if (!(tau > 0.0)) throw ArgumentError("config: dmp.tau must be positive");
  DmpConfig d = DmpConfig::standard(episode_steps, tau);
  b.read("alpha", d.alpha);
  b.read("beta", d.beta);
  b.read("alpha_s", d.alpha_s);
  b.read("dt", d.dt);
  b.read("centers", d.centers);
  b.read("widths", d.widths);
  b.read("weight_scale", d.weight_scale);
  b.finish();
  return d;
}

json dmp_json(const DmpConfig& d) {
  return {{"alpha", d.alpha}, {"beta", d.beta},       {"alpha_s", d.alpha_s}, {"tau", d.tau},
          {"dt", d.dt},       {"centers", d.centers}, {"widths", d.widths},   {"weight_scale", d.weight_scale}};
}

RenderConfig parse_render(Block b) {
  RenderConfig r;
  b.read("resolution", r.resolution);
  b.read("ball_radius_px", r.ball_radius_px);
  b.read("distractor_radius_px", r.distractor_radius_px);
  b.read("arm_rendered", r.arm_rendered);
  b.read("background", r.background);
  b.read("foreground", r.foreground);
  b.finish();
  return r;
}

json render_json(const RenderConfig& r) {
  return {{"resolution", r.resolution},     {"ball_radius_px", r.ball_radius_px},
          {"distractor_radius_px", r.distractor_radius_px}, {"arm_rendered", r.arm_rendered},
          {"background", r.background},     {"foreground", r.foreground}};
}

VaeArchitecture parse_arch(Block b) {
  std::string preset = "desk";
  b.read("preset", preset);
  VaeArchitecture a;
  if (preset == "desk") {
    a = VaeArchitecture::desk();
  } else if (preset == "full") {
    a = VaeArchitecture::full();
  } else {
    throw ArgumentError("config: unknown architecture preset '" + preset + "'");
  }
  b.read("image_size", a.image_size);
  b.read("conv_layers", a.conv_layers);
  b.read("channels", a.channels);
  b.read("kernel", a.kernel);
  b.read("dense_layers", a.dense_layers);
  b.read("dense_units", a.dense_units);
  b.read("latent_dim", a.latent_dim);
  b.read("beta", a.beta);
  b.finish();
  return a;
}

json arch_json(const VaeArchitecture& a) {
  return {{"image_size", a.image_size},   {"conv_layers", a.conv_layers}, {"channels", a.channels},
          {"kernel", a.kernel},           {"dense_layers", a.dense_layers}, {"dense_units", a.dense_units},
          {"latent_dim", a.latent_dim},   {"beta", a.beta}};
}

TrainConfig parse_train(Block b, TrainConfig t) {
  b.read("learning_rate", t.learning_rate);
  b.read("batch_size", t.batch_size);
  b.read("iterations", t.iterations);
  b.read("seed", t.seed);
  std::string precision = to_string(t.precision);
  b.read("precision", precision);
  t.precision = parse_precision(precision);
  b.read("log_every", t.log_every);
  b.finish();
  return t;
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size}, {"iterations", t.iterations},
          {"seed", t.seed}, {"precision", to_string(t.precision)}, {"log_every", t.log_every}};
}

ExplorationConfig parse_exploration(Block b) {
  ExplorationConfig x;
  std::string strategy = to_string(x.strategy);
  b.read("strategy", strategy);
  x.strategy = parse_strategy(strategy);
  b.read("budget", x.budget);
  b.read("bootstrap", x.bootstrap);
  b.read("online_bootstrap", x.online_bootstrap);
  b.read("noise_sigma", x.noise_sigma);
  b.read("module_group_size", x.module_group_size);
  b.read("interest_window", x.interest_window);
  b.read("interest_epsilon", x.interest_epsilon);
  std::string competence = to_string(x.interest_competence);
  b.read("interest_competence", competence);
  x.interest_competence = parse_competence(competence);
  b.read("interest_competence_scale", x.interest_competence_scale);
  b.read("goal_bound_expansion", x.goal_bound_expansion);
  b.read("retain_images", x.retain_images);
  b.finish();
  return x;
}

json exploration_json(const ExplorationConfig& x) {
  return {{"strategy", to_string(x.strategy)},
          {"budget", x.budget},
          {"bootstrap", x.bootstrap},
          {"online_bootstrap", x.online_bootstrap},
          {"noise_sigma", x.noise_sigma},
          {"module_group_size", x.module_group_size},
          {"interest_window", x.interest_window},
          {"interest_epsilon", x.interest_epsilon},
          {"interest_competence", to_string(x.interest_competence)},
          {"interest_competence_scale", x.interest_competence_scale},
          {"goal_bound_expansion", x.goal_bound_expansion},
          {"retain_images", x.retain_images}};
}

}  // namespace

void EvaluationConfig::validate() const {
  if (bins < 1) throw ArgumentError("evaluation bins must be >= 1");
  if (lo.size() != 2 || hi.size() != 2) throw ArgumentError("evaluation bounds must be 2-D");
  for (std::size_t i = 0; i < 2; ++i) {
    if (!(hi[i] > lo[i])) throw ArgumentError("evaluation bounds need hi > lo");
  }
}

TrainConfig ExperimentConfig::default_online_train() {
  TrainConfig t;
  t.iterations = 3000;
  return t;
}

void ExperimentConfig::validate() const {
  env.validate();
  dmp.validate(env.episode_steps);
  render.validate();
  representation.architecture.validate();
  representation.train.validate();
  online_train.validate();
  exploration.validate();
  evaluation.validate();
  if (representation.dataset_size < 1) throw ArgumentError("representation dataset_size must be >= 1");
  if (representation.architecture.image_size != render.resolution) {
    throw ArgumentError("representation image_size must equal the render resolution");
  }
  if (seeds.empty()) throw ArgumentError("config needs at least one seed");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ArgumentError("config seeds must be distinct");
  if (output_dir.empty()) throw ArgumentError("output_dir must not be empty");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("config is not valid JSON: ") + e.what());
  }
  Block top(root, "config");
  ExperimentConfig cfg;
  cfg.env = parse_env(top.sub("environment"));
  cfg.dmp = parse_dmp(top.sub("dmp"), cfg.env.episode_steps);
  cfg.render = parse_render(top.sub("render"));

  Block rep = top.sub("representation");
  cfg.representation.architecture = parse_arch(rep.sub("architecture"));
  cfg.representation.train = parse_train(rep.sub("train"), TrainConfig{});
  rep.read("dataset_size", cfg.representation.dataset_size);
  rep.read("checkpoint", cfg.representation.checkpoint);
  rep.finish();

  cfg.online_train = parse_train(top.sub("online"), ExperimentConfig::default_online_train());
  cfg.exploration = parse_exploration(top.sub("exploration"));

  Block ev = top.sub("evaluation");
  ev.read("bins", cfg.evaluation.bins);
  ev.read("lo", cfg.evaluation.lo);
  ev.read("hi", cfg.evaluation.hi);
  ev.finish();

  top.read("seeds", cfg.seeds);
  top.read("output_dir", cfg.output_dir);
  top.read("jobs", cfg.jobs);
  top.finish();
  cfg.validate();
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json root = {
      {"environment", env_json(cfg.env)},
      {"dmp", dmp_json(cfg.dmp)},
      {"render", render_json(cfg.render)},
      {"representation",
       {{"architecture", arch_json(cfg.representation.architecture)},
        {"train", train_json(cfg.representation.train)},
        {"dataset_size", cfg.representation.dataset_size},
        {"checkpoint", cfg.representation.checkpoint}}},
      {"online", train_json(cfg.online_train)},
      {"exploration", exploration_json(cfg.exploration)},
      {"evaluation", {{"bins", cfg.evaluation.bins}, {"lo", cfg.evaluation.lo}, {"hi", cfg.evaluation.hi}}},
      {"seeds", cfg.seeds},
      {"output_dir", cfg.output_dir},
      {"jobs", cfg.jobs},
  };
  return root.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config: " + path.string());
  out << serialize_config(cfg);
  if (!out) throw IoError("config write failed: " + path.string());
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Thread count and output location never change results.
  ExperimentConfig canonical = cfg;
  canonical.jobs = ExperimentConfig{}.jobs;
  canonical.output_dir = ExperimentConfig{}.output_dir;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(canonical)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace imgep
