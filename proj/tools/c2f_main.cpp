#include "c2f/commands.hpp"
#include "c2f/config.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (flat key = value lines)");
  cmd->add_option("--out", args.out_dir, "Output directory (overrides config out_dir)");
  cmd->add_option("--seed", args.seed, "Seed override");
  cmd->add_option("--set", args.overrides, "Config override key=value (repeatable)");
}

c2f::ExperimentConfig resolve(const CommonArgs& args) {
  c2f::ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = c2f::ExperimentConfig::load(args.config_path);
  for (const std::string& kv : args.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"c2f: blurring diffusion engine (coarse-to-fine generation)"};
  app.require_subcommand(1);

  CommonArgs sched_args, fwd_args, train_args, sample_args, eval_args, check_args;
  std::string image_path, checkpoint_path, samples_dir;

  CLI::App* sched = app.add_subcommand("schedule", "Emit schedule CSV curves");
  add_common(sched, sched_args);

  CLI::App* fwd = app.add_subcommand("forward", "Forward-blur an image into a filmstrip");
  add_common(fwd, fwd_args);
  fwd->add_option("--image", image_path, "Input PGM/PNG image")->required();

  CLI::App* train = app.add_subcommand("train", "Fit the configured model");
  add_common(train, train_args);

  CLI::App* samp = app.add_subcommand("sample", "Run the reverse deblurring sampler");
  add_common(samp, sample_args);
  samp->add_option("--checkpoint", checkpoint_path,
                   "Checkpoint path (default: <out>/checkpoint.txt; unused for oracle)");

  CLI::App* eval = app.add_subcommand("eval", "Compare samples against the reference data");
  add_common(eval, eval_args);
  eval->add_option("--samples", samples_dir, "Directory of sample images")->required();

  CLI::App* check = app.add_subcommand("check", "Verify the discretization contract");
  add_common(check, check_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sched->parsed()) {
      auto cfg = resolve(sched_args);
      return c2f::run_schedule(cfg, cfg.out_dir);
    }
    if (fwd->parsed()) {
      auto cfg = resolve(fwd_args);
      return c2f::run_forward(cfg, image_path, cfg.out_dir);
    }
    if (train->parsed()) {
      auto cfg = resolve(train_args);
      return c2f::run_train(cfg, cfg.out_dir);
    }
    if (samp->parsed()) {
      auto cfg = resolve(sample_args);
      return c2f::run_sample(cfg, checkpoint_path, cfg.out_dir);
    }
    if (eval->parsed()) {
      auto cfg = resolve(eval_args);
      return c2f::run_eval(cfg, samples_dir, cfg.out_dir);
    }
    if (check->parsed()) {
      auto cfg = resolve(check_args);
      return c2f::run_check(cfg, cfg.out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
