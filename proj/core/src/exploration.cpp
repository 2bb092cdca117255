#include "imgep/exploration.hpp"

#include <algorithm>
#include <cmath>

#include "imgep/error.hpp"

namespace imgep {

namespace {

struct StrategyName {
  Strategy strategy;
  const char* name;
};

constexpr StrategyName kStrategyNames[] = {
    {Strategy::kRpe, "RPE"},           {Strategy::kRgeEfr, "RGE-EFR"}, {Strategy::kRgeVae, "RGE-VAE"},
    {Strategy::kRgeOnline, "RGE-Online"}, {Strategy::kMgeEfr, "MGE-EFR"}, {Strategy::kMgeVae, "MGE-VAE"},
};

}  // namespace

std::string to_string(Strategy s) {
  for (const auto& e : kStrategyNames) {
    if (e.strategy == s) return e.name;
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  for (const auto& e : kStrategyNames) {
    if (name == e.name) return e.strategy;
  }
  throw ArgumentError("unknown strategy: " + name);
}

bool uses_goals(Strategy s) { return s != Strategy::kRpe; }
bool is_modular(Strategy s) { return s == Strategy::kMgeEfr || s == Strategy::kMgeVae; }
bool uses_pretrained_representation(Strategy s) { return s == Strategy::kRgeVae || s == Strategy::kMgeVae; }

int ExplorationConfig::bootstrap_episodes() const {
  if (strategy == Strategy::kRpe) return budget;
  int n = strategy == Strategy::kRgeOnline ? online_bootstrap : bootstrap;
  return std::min(n, budget);
}

void ExplorationConfig::validate() const {
  if (budget < 1) throw ArgumentError("exploration budget must be >= 1");
  if (bootstrap < 1 || online_bootstrap < 1) throw ArgumentError("bootstrap count must be >= 1");
  if (noise_sigma < 0.0) throw ArgumentError("noise_sigma must be >= 0");
  if (module_group_size < 1) throw ArgumentError("module_group_size must be >= 1");
  if (interest_window < 2 || interest_window % 2 != 0) throw ArgumentError("interest_window must be even and >= 2");
  if (interest_epsilon < 0.0 || interest_epsilon > 1.0) throw ArgumentError("interest_epsilon must lie in [0, 1]");
  if (!(interest_competence_scale > 0.0) || !std::isfinite(interest_competence_scale)) {
    throw ArgumentError("interest_competence_scale must be finite and > 0");
  }
  if (goal_bound_expansion < 0.0) throw ArgumentError("goal_bound_expansion must be >= 0");
}

std::vector<double> observe_context(const EnvConfig& env) { return engineered_features(initial_scene(env), env); }

Outcome perform_episode(const ExplorationSetup& setup, const DmpParams& params, std::size_t episode,
                        const RenderConfig& render) {
  SceneState start = initial_scene(setup.env);
  JointTrajectory traj = integrate(params, start.joint_angles, setup.dmp, setup.env);
  Rng rng(derive_seed(setup.seed, Stream::kEnvironment, episode));
  return rollout(setup.env, traj, start, rng, render);
}

History bootstrap(int n, const ExplorationSetup& setup, Rng& motor_rng, const RenderConfig& render) {
  if (n < 1) throw ArgumentError("bootstrap: n must be >= 1");
  History history;
  history.reserve(n);
  auto context = observe_context(setup.env);
  for (int i = 0; i < n; ++i) {
    HistoryEntry e;
    e.episode = static_cast<std::size_t>(i);
    e.context = context;
    e.params = random_params(setup.env.n_joints, motor_rng);
    e.outcome = perform_episode(setup, e.params, e.episode, render);
    history.push_back(std::move(e));
  }
  return history;
}

ExplorationResult run_exploration(const ExplorationConfig& cfg, const ExplorationSetup& setup) {
  cfg.validate();
  setup.env.validate();
  setup.dmp.validate(setup.env.episode_steps);
  setup.render.validate();
  if (uses_pretrained_representation(cfg.strategy) && !setup.representation) {
    throw ArgumentError(to_string(cfg.strategy) + " requires a trained representation");
  }
  if (cfg.strategy == Strategy::kRgeOnline && !setup.online_trainer) {
    throw ArgumentError("RGE-Online requires a representation trainer");
  }

  ExplorationResult result;
  Rng motor_rng = make_rng(setup.seed, Stream::kMotor);
  Rng noise_rng = make_rng(setup.seed, Stream::kExplorationNoise);
  Rng goal_rng = make_rng(setup.seed, Stream::kGoal);
  Rng module_rng = make_rng(setup.seed, Stream::kModule);

  const int n_boot = cfg.bootstrap_episodes();
  result.history = bootstrap(n_boot, setup, motor_rng, setup.render);
  result.rollouts = result.history.size();
  History& history = result.history;

  auto drop_images = [&](std::span<HistoryEntry> entries) {
    if (cfg.retain_images) return;
    for (auto& e : entries) e.outcome.image = Image();
  };

  if (cfg.strategy == Strategy::kRpe) {
    drop_images(history);
    return result;
  }

  std::shared_ptr<const Representation> rep;
  switch (cfg.strategy) {
    case Strategy::kRgeEfr:
    case Strategy::kMgeEfr:
      rep = std::make_shared<EngineeredRepresentation>(setup.env.variant);
      break;
    case Strategy::kRgeVae:
    case Strategy::kMgeVae:
      rep = setup.representation;
      break;
    case Strategy::kRgeOnline: {
      std::vector<Image> images;
      images.reserve(history.size());
      for (const auto& e : history) images.push_back(e.outcome.image);
      rep = setup.online_trainer(images);
      if (!rep) throw StateError("RGE-Online trainer returned no representation");
      break;
    }
    case Strategy::kRpe:
      break;
  }
  result.representation = rep;

  std::vector<std::vector<double>> boot_embeddings;
  boot_embeddings.reserve(history.size());
  for (auto& e : history) {
    e.embedding = rep->embed(e.outcome);
    if (e.embedding.size() != rep->dim()) throw StateError("representation returned a wrong-sized embedding");
    boot_embeddings.push_back(e.embedding);
  }
  drop_images(history);

  const bool engineered = cfg.strategy == Strategy::kRgeEfr || cfg.strategy == Strategy::kMgeEfr;
  GoalBox space_box =
      engineered ? engineered_bounds(setup.env) : empirical_bounds(boot_embeddings, cfg.goal_bound_expansion);

  std::vector<std::vector<std::size_t>> partition;
  std::vector<std::string> labels;
  if (!is_modular(cfg.strategy)) {
    partition = single_module_partition(rep->dim());
    labels = {"all"};
  } else if (engineered) {
    partition = engineered_partition(setup.env.variant);
    labels = engineered_module_labels(setup.env.variant);
  } else {
    partition = grouped_partition(rep->dim(), static_cast<std::size_t>(cfg.module_group_size));
    for (std::size_t k = 0; k < partition.size(); ++k) labels.push_back("latent" + std::to_string(k));
  }
  result.module_labels = labels;

  std::vector<GoalModule> modules;
  for (std::size_t k = 0; k < partition.size(); ++k) {
    double diagonal = 0.0;
    for (std::size_t d : partition[k]) diagonal += std::pow(space_box.hi[d] - space_box.lo[d], 2);
    diagonal = std::sqrt(diagonal);
    double scale = diagonal > 0.0 ? cfg.interest_competence_scale * diagonal : 1.0;
    modules.emplace_back(static_cast<int>(k), labels[k], partition[k],
                         InterestTracker(static_cast<std::size_t>(cfg.interest_window), cfg.interest_competence, scale));
    modules.back().set_bounds(space_box);
  }
  validate_partition(modules, rep->dim());

  const auto context = observe_context(setup.env);
  MetaPolicy meta(partition, context.size(), cfg.noise_sigma);
  for (const auto& e : history) meta.update(e.episode, e.context, e.params, e.embedding);

  std::vector<double> interests(modules.size(), 0.0);
  for (int i = n_boot; i < cfg.budget; ++i) {
    HistoryEntry e;
    e.episode = static_cast<std::size_t>(i);
    e.context = context;
    std::size_t k = 0;
    if (is_modular(cfg.strategy)) {
      for (std::size_t m = 0; m < modules.size(); ++m) interests[m] = modules[m].interest().interest();
      k = sample_module(interests, cfg.interest_epsilon, module_rng);
    }
    e.goal = sample_goal(modules[k], goal_rng);
    e.params = meta.infer(k, e.context, e.goal, noise_rng);
    e.outcome = perform_episode(setup, e.params, e.episode, setup.render);
    ++result.rollouts;
    e.embedding = rep->embed(e.outcome);
    e.module = static_cast<int>(k);
    e.cost = modules[k].cost(e.goal, e.embedding);
    meta.update(e.episode, e.context, e.params, e.embedding);
    if (is_modular(cfg.strategy)) {
      modules[k].interest().push(e.cost);
      for (std::size_t m = 0; m < modules.size(); ++m) interests[m] = modules[m].interest().interest();
      result.interest_trace.push_back(interests);
    }
    if (!cfg.retain_images) e.outcome.image = Image();
    history.push_back(std::move(e));
  }
  return result;
}

}  // namespace imgep
