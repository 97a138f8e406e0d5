// imba-ssl: experiment runner for imbalanced semi-supervised training.
//
//   imba-ssl <train|compare|sweep-gamma|ablate-aug|evaluate> --config PATH
//            [--out DIR] [--methods a,b] [--gammas 0.2,0.4] [--blending always|selective|both]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imbassl/config.hpp"
#include "imbassl/errors.hpp"
#include "imbassl/experiment.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : text + ",") {
    if (ch == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (ch != ' ') {
      item += ch;
    }
  }
  return out;
}

std::vector<imbassl::BlendingMode> parse_blendings(const std::string& text) {
  if (text == "both") return {imbassl::BlendingMode::kAlwaysOn, imbassl::BlendingMode::kSelective};
  return {imbassl::parse_blending(text)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised training with class-imbalance-aware consistency losses"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir = "results";
  std::string methods;
  std::string gammas = "0.2,0.4,0.6,0.8,1.0";
  std::string blending;
  std::string checkpoint;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", out_dir, "output directory");
  };
  auto* train = app.add_subcommand("train", "train one method over all configured seeds");
  add_common(train);
  auto* compare = app.add_subcommand("compare", "compare methods on the test split");
  add_common(compare);
  compare->add_option("--methods", methods, "comma-separated method names")->required();
  auto* sweep = app.add_subcommand("sweep-gamma", "per-class recall as the ABCL gamma varies");
  add_common(sweep);
  sweep->add_option("--gammas", gammas, "comma-separated gamma values in (0,1]");
  sweep->add_option("--blending", blending, "always, selective or both");
  auto* ablate = app.add_subcommand("ablate-aug", "uda and uda-abcl under weak and strong perturbation");
  add_common(ablate);
  auto* eval = app.add_subcommand("evaluate", "evaluate saved checkpoints on the test split");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default: <out>/<method>/seed_<s>.ckpt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    auto cfg = imbassl::load_experiment_config(config_path);
    if (const char* env = std::getenv("IMBASSL_SEED"); env && *env) {
      cfg.seeds = imbassl::parse_uint_list(env);
    }
    std::string report;
    if (train->parsed()) {
      report = imbassl::cmd_train(cfg, out_dir);
    } else if (compare->parsed()) {
      report = imbassl::cmd_compare(cfg, split_names(methods), out_dir);
    } else if (sweep->parsed()) {
      const auto modes = blending.empty() ? std::vector{cfg.consistency.blending} : parse_blendings(blending);
      report = imbassl::cmd_sweep_gamma(cfg, imbassl::parse_double_list(gammas), modes, out_dir);
    } else if (ablate->parsed()) {
      report = imbassl::cmd_ablate_aug(cfg, out_dir);
    } else {
      std::optional<std::filesystem::path> ckpt;
      if (!checkpoint.empty()) ckpt = checkpoint;
      report = imbassl::cmd_evaluate(cfg, out_dir, ckpt);
    }
    std::cout << report;
    return 0;
  } catch (const imbassl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
