// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// dhsnet train|eval|infer|gradcheck|bench [--config FILE] [--set key=value]...
//
// Settings resolve in three layers: built-in defaults, then the config file,
// then flags in command-line order. Shorthand flags are sugar for --set.

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dhsnet/dhsnet.h"

namespace {

struct Shorthand {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr Shorthand kShorthands[] = {
    {"--model", "model", "unet or dhsnet"},
    {"--data", "data", "'synthetic' or a dataset root"},
    {"--out", "output_dir", "directory for every artifact"},
    {"--checkpoint", "checkpoint", "model checkpoint (eval, infer, bench)"},
    {"--checkpoint-b", "checkpoint_b", "second checkpoint (bench)"},
    {"--image", "image", "input PNG (infer)"},
    {"--epochs", "epochs", "training epochs"},
    {"--seed", "seed", "initialization and shuffle seed"},
    {"--lr", "lr", "SGD learning rate"},
    {"--batch-size", "batch_size", "samples per step"},
};

constexpr const char* kCommands[][2] = {
    {"train", "train a model and write loss.csv plus checkpoints"},
    {"eval", "score a checkpoint on the validation split"},
    {"infer", "write mask, heatmaps and proposals for one image"},
    {"gradcheck", "check every backward pass against finite differences"},
    {"bench", "compare mean forward latency of two models"},
};

int report(dhs_status status) {
  if (status != DHS_OK) std::fprintf(stderr, "dhsnet: %s\n", dhs_last_error());
  return dhs_exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DHSNet segmentation with deformable convolutions and heatmap proposals"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dhs_version()));

  std::string config_path;
  // Flag overrides in the order given; later ones win.
  std::vector<std::pair<std::string, std::string>> overrides;

  for (const auto& [name, description] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "file of `key = value` lines")->check(CLI::ExistingFile);
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&overrides](const std::vector<std::string>& items) {
          for (const auto& item : items) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--set", "expected key=value, got '" + item + "'");
            overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
          }
        },
        "override one setting (repeatable)");
    for (const auto& s : kShorthands) {
      const std::string key = s.key;
      sub->add_option_function<std::string>(
          s.flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, s.help);
    }
  }
  // Overrides are applied in callback order, which follows the command line.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dhs_exit_code(DHS_ERR_USAGE);
  }

  dhs_config* raw = nullptr;
  const dhs_status opened = config_path.empty() ? dhs_config_new(&raw) : dhs_config_load(config_path.c_str(), &raw);
  if (opened != DHS_OK) return report(opened);
  std::unique_ptr<dhs_config, decltype(&dhs_config_free)> config(raw, dhs_config_free);

  for (const auto& [key, value] : overrides) {
    const dhs_status s = dhs_config_set(config.get(), key.c_str(), value.c_str());
    if (s != DHS_OK) return report(s);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return report(dhs_run(command.c_str(), config.get()));
}
