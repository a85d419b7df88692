// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration and the five commands behind the command-line tool.
// Every artifact a command writes lands under RunConfig::output_dir.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "losses.hpp"
#include "network.hpp"

namespace dhs::app {

struct RunConfig {
  net::ModelKind model = net::ModelKind::kDhsnet;
  // "synthetic" or a dataset root with images/, labels/, instances/.
  std::string data = "synthetic";
  std::string val_data;  // dataset root for validation; synthetic data holds out its own split
  std::string class_map;  // class table path; empty selects the built-in Cityscapes table
  std::size_t downscale = 4;
  std::size_t crop = 128;

  std::uint64_t data_seed = 7;
  std::size_t train_count = 500;
  std::size_t val_count = 100;
  std::size_t image_size = 128;

  net::NetworkConfig network;
  double lr = 0.05;
  double momentum = 0.9;
  double max_grad_norm = 0.25;
  double lambda_point = 1.0;
  loss::FocalParams focal;
  std::size_t epochs = 10;
  std::size_t batch_size = 4;
  bool shuffle = true;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 1;  // epochs; 0 writes only the final checkpoint
  double target_acc = 0.0;           // stop once val ACC reaches it; 0 runs every epoch
  std::size_t max_steps = 0;         // 0 means no cap

  std::string output_dir = "out";
  std::string checkpoint;    // eval, infer, bench (first model)
  std::string checkpoint_b;  // bench (second model)
  std::string image;         // infer
  bool eval_ground_truth = false;  // score labels against themselves
  double peak_threshold = 0.3;
  std::size_t max_proposals = 100;
  std::size_t bench_iterations = 100;
  std::size_t bench_warmup = 10;
  std::size_t gradcheck_seeds = 20;
  std::string gradcheck_fault;  // op whose backward is corrupted by x1.01

  void validate() const;
  std::string to_text() const;
  // Applies one key; unknown keys and malformed values raise config errors.
  void set(std::string_view key, std::string_view value);
};

/// `key = value` lines, `#` comments.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Training/validation samples as the config selects them.
struct Datasets {
  std::vector<data::Sample> train;
  std::vector<data::Sample> val;
};
Datasets load_datasets(const RunConfig& config, bool need_train);

template <typename T>
loss::ConfusionCounts evaluate(const net::Model<T>& model, const std::vector<data::Sample>& samples,
                               std::size_t batch_size);

/// Mask palette: background black, freespace green, vehicle blue,
/// pedestrian red; other classes white.
std::array<std::uint8_t, 3> palette_color(std::int32_t class_id);

inline constexpr const char* kLossCsvHeader = "step,seg_loss,point_loss,total";

void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_infer(const RunConfig& config, std::ostream& log);
/// Returns true iff every check passed.
bool cmd_gradcheck(const RunConfig& config, std::ostream& log);
void cmd_bench(const RunConfig& config, std::ostream& log);

}  // namespace dhs::app
