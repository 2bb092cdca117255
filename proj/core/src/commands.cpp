#include "imgep/commands.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "imgep/csv.hpp"
#include "imgep/error.hpp"
#include "imgep/evaluation.hpp"
#include "imgep/history_io.hpp"
#include "imgep/image_io.hpp"

namespace imgep {

namespace fs = std::filesystem;

namespace {

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::vector<SceneState> sample_dataset_scenes(const EnvConfig& env, int n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("dataset size must be >= 1");
  env.validate();
  Rng rng = make_rng(seed, Stream::kDataset);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<SceneState> scenes;
  scenes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SceneState s;
    s.joint_angles.resize(static_cast<std::size_t>(env.n_joints));
    for (int j = 0; j < env.n_joints; ++j) s.joint_angles[j] = env.joint_limits[j] * unit(rng);
    if (env.variant == EnvVariant::kArmBall) {
      double a = angle(rng);
      s.ball = {env.ring_radius * std::cos(a), env.ring_radius * std::sin(a)};
    } else {
      s.ball = {unit(rng), unit(rng)};
      s.distractor = Vec2{unit(rng), unit(rng)};
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<Image> generate_dataset(const ExperimentConfig& cfg, int n, std::uint64_t seed) {
  cfg.render.validate();
  auto scenes = sample_dataset_scenes(cfg.env, n, seed);
  std::vector<Image> images;
  images.reserve(scenes.size());
  for (const auto& s : scenes) images.push_back(render(s, cfg.env.link_lengths, cfg.render));
  return images;
}

void cmd_gen_dataset(const ExperimentConfig& cfg, int n, const fs::path& out_file, std::uint64_t seed) {
  cfg.validate();
  auto images = generate_dataset(cfg, n, seed);
  if (out_file.has_parent_path()) make_dirs(out_file.parent_path());
  write_image_dataset(out_file, images);
}

Vae train_representation(std::span<const Image> images, const VaeArchitecture& arch, const TrainConfig& cfg,
                         std::vector<TrainRecord>* curve, std::vector<ElboParts>* steps) {
  auto finish = [&](auto&& result) {
    if (curve) *curve = result.curve;
    if (steps) *steps = result.steps;
    return to_double(result.model);
  };
  if (cfg.precision == Precision::kFloat) return finish(train<float>(images, arch, cfg));
  return finish(train<double>(images, arch, cfg));
}

void write_train_curve(const fs::path& path, std::span<const TrainRecord> curve) {
  std::string out = "iteration,nll,kl,loss\n";
  for (const auto& r : curve) {
    out += std::to_string(r.iteration) + "," + csv::format(r.nll) + "," + csv::format(r.kl) + "," +
           csv::format(r.loss) + "\n";
  }
  write_file_atomic(path, out);
}

TrainOutputs cmd_train_repr(const ExperimentConfig& cfg, const fs::path& dataset, const fs::path& out_dir,
                            std::ostream* log) {
  cfg.validate();
  if (!fs::exists(dataset)) throw IoError("dataset not found: " + dataset.string());
  auto images = read_image_dataset(dataset);
  if (log) *log << "training on " << images.size() << " images for " << cfg.representation.train.iterations
                << " iterations\n";
  std::vector<TrainRecord> curve;
  std::vector<ElboParts> steps;
  Vae model = train_representation(images, cfg.representation.architecture, cfg.representation.train, &curve, &steps);

  make_dirs(out_dir);
  TrainOutputs out;
  out.checkpoint = out_dir / "vae.ckpt";
  out.config = out_dir / "config.json";
  out.curve = out_dir / "train_curve.csv";
  save_vae(out.checkpoint, model);
  save_config(out.config, cfg);
  write_train_curve(out.curve, curve);
  if (!steps.empty()) {
    out.initial_loss = smoothed_initial_loss(steps);
    out.final_loss = smoothed_final_loss(steps);
  }
  if (log) *log << "smoothed loss " << out.initial_loss << " -> " << out.final_loss << "\n";
  return out;
}

void write_summary(const fs::path& path, std::span<const SummaryRow> rows) {
  std::string out = "environment,strategy,seed,final_coverage,curve\n";
  for (const auto& r : rows) {
    out += r.environment + "," + r.strategy + "," + std::to_string(r.seed) + "," + std::to_string(r.final_coverage) +
           "," + r.curve + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<SummaryRow> read_summary(const fs::path& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "environment,strategy,seed,final_coverage,curve") {
    throw IoError("not a summary file: " + path.string());
  }
  std::vector<SummaryRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = csv::split(lines[i]);
    try {
      if (f.size() != 5) throw ArgumentError("wrong field count");
      SummaryRow r;
      r.environment = std::string(f[0]);
      r.strategy = std::string(f[1]);
      long long seed = csv::parse_int(f[2]);
      long long cov = csv::parse_int(f[3]);
      if (seed < 0 || cov < 0) throw ArgumentError("negative value");
      r.seed = static_cast<std::uint64_t>(seed);
      r.final_coverage = static_cast<std::size_t>(cov);
      r.curve = std::string(f[4]);
      rows.push_back(std::move(r));
    } catch (const ArgumentError& e) {
      throw IoError("malformed summary row " + std::to_string(i) + " in " + path.string() + ": " + e.what());
    }
  }
  return rows;
}

fs::path strategy_dir(const fs::path& out_dir, Strategy strategy) { return out_dir / to_string(strategy); }

fs::path seed_dir(const fs::path& out_dir, Strategy strategy, std::uint64_t seed) {
  return strategy_dir(out_dir, strategy) / ("seed_" + std::to_string(seed));
}

namespace {

std::shared_ptr<const Representation> pretrained_representation(const ExperimentConfig& cfg, const fs::path& out_dir,
                                                                std::ostream* log) {
  const auto& rep = cfg.representation;
  if (!rep.checkpoint.empty()) {
    if (!fs::exists(rep.checkpoint)) throw IoError("checkpoint not found: " + rep.checkpoint);
    return std::make_shared<VaeRepresentation>(std::make_shared<const Vae>(load_vae(rep.checkpoint, rep.architecture)));
  }
  if (log) *log << "no checkpoint configured; training a representation on " << rep.dataset_size << " images\n";
  auto images = generate_dataset(cfg, rep.dataset_size, rep.train.seed);
  std::vector<TrainRecord> curve;
  Vae model = train_representation(images, rep.architecture, rep.train, &curve);
  fs::path dir = out_dir / "representation";
  make_dirs(dir);
  save_vae(dir / "vae.ckpt", model);
  write_train_curve(dir / "train_curve.csv", curve);
  return std::make_shared<VaeRepresentation>(std::make_shared<const Vae>(std::move(model)));
}

SummaryRow run_seed(const ExperimentConfig& cfg, const ExplorationSetup& base, std::uint64_t seed,
                    const fs::path& out_dir, const std::string& hash) {
  ExplorationSetup setup = base;
  setup.seed = seed;
  if (cfg.exploration.strategy == Strategy::kRgeOnline) {
    TrainConfig t = cfg.online_train;
    t.seed = derive_seed(seed, Stream::kRepresentation);
    VaeArchitecture arch = cfg.representation.architecture;
    setup.online_trainer = [arch, t](std::span<const Image> images) -> std::shared_ptr<const Representation> {
      return std::make_shared<VaeRepresentation>(std::make_shared<const Vae>(train_representation(images, arch, t)));
    };
  }
  ExplorationResult result = run_exploration(cfg.exploration, setup);
  auto balls = ball_positions(result.history);
  auto series = exploration_curve(balls, cfg.evaluation.lo, cfg.evaluation.hi, cfg.evaluation.bins);

  fs::path dir = seed_dir(out_dir, cfg.exploration.strategy, seed);
  make_dirs(dir);
  write_history_csv(dir / "history.csv", result.history);
  write_curve_csv(dir / "curve.csv", series);
  if (!result.interest_trace.empty()) {
    std::size_t first = result.history.size() - result.interest_trace.size();
    write_interest_csv(dir / "interest.csv", result.module_labels, result.interest_trace, first);
  }
  RunManifest m;
  m.environment = to_string(cfg.env.variant);
  m.strategy = to_string(cfg.exploration.strategy);
  m.seed = seed;
  m.config_hash = hash;
  m.episodes = result.history.size();
  m.rollouts = result.rollouts;
  m.final_coverage = series.empty() ? 0 : series.back();
  m.module_labels = result.module_labels;
  write_manifest(dir / "manifest.json", m);

  return SummaryRow{m.environment, m.strategy, seed, m.final_coverage,
                    (fs::path("seed_" + std::to_string(seed)) / "curve.csv").generic_string()};
}

}  // namespace

std::vector<SummaryRow> cmd_run(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  cfg.validate();
  ExplorationSetup base;
  base.env = cfg.env;
  base.dmp = cfg.dmp;
  base.render = cfg.render;
  if (uses_pretrained_representation(cfg.exploration.strategy)) {
    base.representation = pretrained_representation(cfg, out_dir, log);
  }

  const Strategy strategy = cfg.exploration.strategy;
  fs::path sdir = strategy_dir(out_dir, strategy);
  make_dirs(sdir);
  save_config(sdir / "config.json", cfg);
  const std::string hash = config_hash(cfg);
  const fs::path summary_path = sdir / "summary.csv";

  const std::size_t n = cfg.seeds.size();
  std::vector<std::optional<SummaryRow>> done(n);
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;

  auto publish = [&] {
    std::vector<SummaryRow> rows;
    for (const auto& r : done) {
      if (r) rows.push_back(*r);
    }
    write_summary(summary_path, rows);
  };
  {
    std::lock_guard lock(mu);
    publish();
  }

  auto worker = [&] {
    while (!failed) {
      std::size_t i = next++;
      if (i >= n) return;
      try {
        SummaryRow row = run_seed(cfg, base, cfg.seeds[i], out_dir, hash);
        std::lock_guard lock(mu);
        done[i] = row;
        publish();
        if (log) {
          *log << row.strategy << " seed " << row.seed << ": final coverage " << row.final_coverage << "\n";
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  std::vector<SummaryRow> rows;
  for (auto& r : done) rows.push_back(*r);
  return rows;
}

std::vector<CompareRow> cmd_compare(std::span<const fs::path> summaries, const fs::path& out_dir) {
  if (summaries.empty()) throw ArgumentError("compare needs at least one summary");

  struct Run {
    SummaryRow row;
    fs::path curve;
  };
  std::vector<std::string> order;
  std::map<std::string, std::map<std::uint64_t, Run>> by_strategy;
  std::string environment;
  for (const auto& path : summaries) {
    for (auto& row : read_summary(path)) {
      if (environment.empty()) environment = row.environment;
      if (row.environment != environment) {
        throw ArgumentError("compare: mixed environments (" + environment + " and " + row.environment + ")");
      }
      auto& runs = by_strategy[row.strategy];
      if (runs.empty() && std::find(order.begin(), order.end(), row.strategy) == order.end()) {
        order.push_back(row.strategy);
      }
      auto it = runs.find(row.seed);
      if (it != runs.end()) {
        if (it->second.row.final_coverage != row.final_coverage) {
          throw ArgumentError("compare: conflicting results for " + row.strategy + " seed " + std::to_string(row.seed));
        }
        continue;
      }
      fs::path curve = path.parent_path() / row.curve;
      runs.emplace(row.seed, Run{std::move(row), std::move(curve)});
    }
  }

  std::vector<CompareRow> out;
  for (const auto& name : order) {
    const auto& runs = by_strategy[name];
    CompareRow c;
    c.environment = environment;
    c.strategy = name;
    c.n = runs.size();
    for (const auto& [seed, run] : runs) c.mean += static_cast<double>(run.row.final_coverage);
    c.mean /= static_cast<double>(c.n);
    double var = 0.0;
    for (const auto& [seed, run] : runs) var += std::pow(static_cast<double>(run.row.final_coverage) - c.mean, 2);
    c.std = std::sqrt(var / static_cast<double>(c.n));

    std::vector<std::vector<std::size_t>> curves;
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto& [seed, run] : runs) {
      curves.push_back(read_curve_csv(run.curve));
      len = std::min(len, curves.back().size());
    }
    c.mean_curve.assign(len, 0.0);
    for (const auto& s : curves) {
      for (std::size_t i = 0; i < len; ++i) c.mean_curve[i] += static_cast<double>(s[i]);
    }
    for (double& v : c.mean_curve) v /= static_cast<double>(curves.size());
    out.push_back(std::move(c));
  }

  if (!out_dir.empty()) {
    make_dirs(out_dir);
    std::string table = "environment,strategy,n,mean,std\n";
    std::size_t longest = 0;
    for (const auto& c : out) {
      table += c.environment + "," + c.strategy + "," + std::to_string(c.n) + "," + csv::format(c.mean) + "," +
               csv::format(c.std) + "\n";
      longest = std::max(longest, c.mean_curve.size());
    }
    write_file_atomic(out_dir / "compare.csv", table);

    std::string curve = "episode";
    for (const auto& c : out) curve += "," + c.strategy;
    curve += "\n";
    for (std::size_t i = 0; i < longest; ++i) {
      curve += std::to_string(i + 1);
      for (const auto& c : out) curve += "," + (i < c.mean_curve.size() ? csv::format(c.mean_curve[i]) : "");
      curve += "\n";
    }
    write_file_atomic(out_dir / "mean_curve.csv", curve);
  }
  return out;
}

void cmd_export(const fs::path& history_csv, const fs::path& out_dir, int bins) {
  if (!fs::exists(history_csv)) throw IoError("history not found: " + history_csv.string());
  export_history(read_history_csv(history_csv), out_dir, bins);
}

}  // namespace imgep
