#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcart/commands.hpp"
#include "bcart/run_config.hpp"

namespace {

// Flags common to every subcommand. Values are applied after the config
// file so explicit flags always win.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> data;
  std::optional<std::string> label_col;
  std::optional<std::string> out_dir;
  std::optional<std::string> sampler;
  std::optional<std::string> samples;
  std::optional<long> iterations;
  std::optional<long> seed;
  std::optional<int> cores;
  std::optional<int> folds;
  std::optional<long> target_samples;
  std::optional<std::string> core_list;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "key = value config file");
  cmd->add_option("--data", ov.data, "dataset CSV (header row required)");
  cmd->add_option("--label-col", ov.label_col, "name of the label column");
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--sampler", ov.sampler, "serial or parallel");
  cmd->add_option("--iterations", ov.iterations, "chain iterations");
  cmd->add_option("--seed", ov.seed, "RNG seed");
  cmd->add_option("--cores", ov.cores, "worker count for the parallel sampler");
  cmd->add_option("--folds", ov.folds, "cross-validation folds");
  cmd->add_option("--target-samples", ov.target_samples, "stop after this many samples");
  cmd->add_option("--core-list", ov.core_list, "comma-separated core counts (compare/bench)");
  cmd->add_option("--samples", ov.samples, "samples.json from a fit run (predict)");
}

int build_and_run(const std::string& mode, const Overrides& ov) {
  bcart::RunConfig cfg;
  cfg.mode = mode;
  try {
    if (ov.config_path) bcart::load_config_file(cfg, *ov.config_path);
    cfg.mode = mode;  // the subcommand, not the config file, decides the mode
    if (ov.data) cfg.data_path = *ov.data;
    if (ov.label_col) cfg.label_column = *ov.label_col;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.sampler) cfg.sampler = *ov.sampler;
    if (ov.samples) cfg.samples_path = *ov.samples;
    if (ov.iterations) cfg.chain.iterations = *ov.iterations;
    if (ov.seed) cfg.chain.seed = static_cast<std::uint64_t>(*ov.seed);
    if (ov.cores) cfg.chain.workers = *ov.cores;
    if (ov.folds) cfg.folds = *ov.folds;
    if (ov.target_samples) cfg.chain.target_samples = *ov.target_samples;
    if (ov.core_list) cfg.core_list = bcart::detail::parse_int_list("core_list", *ov.core_list);
  } catch (const bcart::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return bcart::run_command(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Bayesian classification-tree MCMC: serial Metropolis-Hastings and "
      "single-chain multi-core sampling over tree posteriors"};
  app.require_subcommand(1);

  Overrides ov;
  CLI::App* fit = app.add_subcommand("fit", "sample the posterior on a full dataset");
  CLI::App* cv = app.add_subcommand("cv", "k-fold cross-validated metrics");
  CLI::App* compare =
      app.add_subcommand("compare", "Welch-test serial vs parallel sample quality");
  CLI::App* bench = app.add_subcommand("bench", "wall-clock speedup per core count");
  CLI::App* predict = app.add_subcommand("predict", "classify rows with saved samples");
  for (CLI::App* cmd : {fit, cv, compare, bench, predict}) add_common_flags(cmd, ov);

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) return build_and_run("fit", ov);
  if (cv->parsed()) return build_and_run("cv", ov);
  if (compare->parsed()) return build_and_run("compare", ov);
  if (bench->parsed()) return build_and_run("bench", ov);
  return build_and_run("predict", ov);
}
