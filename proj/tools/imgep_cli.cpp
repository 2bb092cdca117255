// imgep: dataset generation, representation training, exploration runs and
// result aggregation.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imgep/commands.hpp"
#include "imgep/config.hpp"
#include "imgep/error.hpp"

namespace {

enum ExitCode { kOk = 0, kInternalError = 1, kConfigError = 2, kNumericError = 3, kIoError = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed_override;
  std::string out;
  std::string strategy;
};

imgep::ExperimentConfig load(const Options& o) {
  imgep::ExperimentConfig cfg = o.config.empty() ? imgep::ExperimentConfig{} : imgep::load_config(o.config);
  if (!o.strategy.empty()) cfg.exploration.strategy = imgep::parse_strategy(o.strategy);
  if (o.seed_override) cfg.seeds = {*o.seed_override};
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Options& o, bool with_strategy) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed-override", o.seed_override, "replace the configured seeds by this one");
  cmd->add_option("--out", o.out, "output directory");
  if (with_strategy) cmd->add_option("--strategy", o.strategy, "RPE, RGE-EFR, RGE-VAE, RGE-Online, MGE-EFR, MGE-VAE");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal exploration experiments on simulated arm environments"};
  app.require_subcommand(1);

  Options opt;
  int count = 5000;
  std::string dataset;
  std::vector<std::string> summaries;
  std::string history;
  int bins = 30;

  auto* gen = app.add_subcommand("gen-dataset", "render scenes with uniformly placed objects");
  add_common(gen, opt, false);
  gen->add_option("--count", count, "number of images")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train-repr", "train the VAE goal-space representation");
  add_common(train, opt, false);
  train->add_option("--dataset", dataset, "image dataset file")->required();

  auto* run = app.add_subcommand("run", "run one exploration per configured seed");
  add_common(run, opt, true);

  auto* compare = app.add_subcommand("compare", "aggregate final coverage across summaries");
  compare->add_option("summaries", summaries, "summary.csv files")->required();
  compare->add_option("--out", opt.out, "directory for compare.csv and mean_curve.csv");

  auto* exp = app.add_subcommand("export", "write scatter and curve CSVs for one history");
  exp->add_option("history", history, "history.csv")->required();
  exp->add_option("--out", opt.out, "output directory")->required();
  exp->add_option("--bins", bins, "coverage bins per axis")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      auto cfg = load(opt);
      std::uint64_t seed = opt.seed_override.value_or(cfg.representation.train.seed);
      std::filesystem::path file = std::filesystem::path(cfg.output_dir) / "dataset.imds";
      imgep::cmd_gen_dataset(cfg, count, file, seed);
      std::cout << "wrote " << count << " images to " << file.string() << "\n";
    } else if (*train) {
      auto cfg = load(opt);
      if (opt.seed_override) cfg.representation.train.seed = *opt.seed_override;
      auto out = imgep::cmd_train_repr(cfg, dataset, cfg.output_dir, &std::cerr);
      std::cout << "checkpoint " << out.checkpoint.string() << "\n";
    } else if (*run) {
      auto cfg = load(opt);
      auto rows = imgep::cmd_run(cfg, cfg.output_dir, &std::cerr);
      std::cout << "summary " << (imgep::strategy_dir(cfg.output_dir, cfg.exploration.strategy) / "summary.csv").string()
                << " (" << rows.size() << " seeds)\n";
    } else if (*compare) {
      std::vector<std::filesystem::path> paths(summaries.begin(), summaries.end());
      auto rows = imgep::cmd_compare(paths, opt.out);
      std::cout << "environment,strategy,n,mean,std\n";
      for (const auto& r : rows) {
        std::cout << r.environment << "," << r.strategy << "," << r.n << "," << r.mean << "," << r.std << "\n";
      }
    } else if (*exp) {
      imgep::cmd_export(history, opt.out, bins);
    }
  } catch (const imgep::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const imgep::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const imgep::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kOk;
}
