// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C header only, and the CLI as a
// subprocess for exit codes and artifacts.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dhsnet/dhsnet.h"
#include "png_io.hpp"

namespace {

namespace fs = std::filesystem;

using ConfigPtr = std::unique_ptr<dhs_config, decltype(&dhs_config_free)>;
using ModelPtr = std::unique_ptr<dhs_model, decltype(&dhs_model_free)>;

ConfigPtr new_config() {
  dhs_config* c = nullptr;
  EXPECT_EQ(dhs_config_new(&c), DHS_OK);
  return {c, dhs_config_free};
}

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path p = fs::temp_directory_path() / ("dhsnet_capi_" + std::string(info->name()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DHS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Status, ExitCodesFollowErrorFamilies) {
  EXPECT_EQ(dhs_exit_code(DHS_OK), 0);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_USAGE), 1);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_CONFIG), 1);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_DATA), 2);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_FORMAT), 2);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_SHAPE), 3);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_NUMERIC), 3);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_CHECK_FAILED), 3);
  EXPECT_EQ(dhs_exit_code(DHS_ERR_INTERNAL), 3);
  EXPECT_STREQ(dhs_status_name(DHS_ERR_FORMAT), "format error");
  EXPECT_NE(std::string(dhs_version()), "");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto c = new_config();
  EXPECT_EQ(dhs_config_set(c.get(), "epochs", "3"), DHS_OK);
  EXPECT_EQ(dhs_config_set(c.get(), "base_channels", "8"), DHS_OK);
  EXPECT_EQ(dhs_config_set(c.get(), "bogus", "1"), DHS_ERR_CONFIG);
  EXPECT_NE(std::string(dhs_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(dhs_config_set(c.get(), "epochs", "three"), DHS_ERR_CONFIG);
  EXPECT_EQ(dhs_config_set(nullptr, "epochs", "1"), DHS_ERR_USAGE);

  size_t needed = 0;
  EXPECT_EQ(dhs_config_text(c.get(), nullptr, 0, &needed), DHS_OK);
  std::vector<char> buf(needed);
  EXPECT_EQ(dhs_config_text(c.get(), buf.data(), buf.size(), nullptr), DHS_OK);
  const std::string text(buf.data());
  EXPECT_EQ(text.size() + 1, needed);
  EXPECT_NE(text.find("epochs = 3\n"), std::string::npos);
  EXPECT_NE(text.find("base_channels = 8\n"), std::string::npos);
  char tiny[5];
  EXPECT_EQ(dhs_config_text(c.get(), tiny, sizeof tiny, nullptr), DHS_OK);
  EXPECT_EQ(std::string(tiny).size(), 4u);
}

TEST(Config, LoadsFileAndRoundTripsText) {
  const auto dir = scratch("cfg");
  {
    std::ofstream(dir / "run.cfg") << "# desk run\nmodel = unet\nlr = 0.01\nseed = 4\n";
  }
  dhs_config* raw = nullptr;
  ASSERT_EQ(dhs_config_load((dir / "run.cfg").c_str(), &raw), DHS_OK);
  ConfigPtr c(raw, dhs_config_free);
  size_t needed = 0;
  dhs_config_text(c.get(), nullptr, 0, &needed);
  std::vector<char> buf(needed);
  dhs_config_text(c.get(), buf.data(), buf.size(), nullptr);
  {
    std::ofstream(dir / "again.cfg") << buf.data();
  }
  dhs_config* again = nullptr;
  ASSERT_EQ(dhs_config_load((dir / "again.cfg").c_str(), &again), DHS_OK);
  ConfigPtr c2(again, dhs_config_free);
  std::vector<char> buf2(needed);
  dhs_config_text(c2.get(), buf2.data(), buf2.size(), nullptr);
  EXPECT_STREQ(buf.data(), buf2.data());
  EXPECT_NE(std::string(buf.data()).find("model = unet"), std::string::npos);

  {
    std::ofstream(dir / "bad.cfg") << "lr = 0.1\nwhatever = 2\n";
  }
  dhs_config* bad = nullptr;
  EXPECT_EQ(dhs_config_load((dir / "bad.cfg").c_str(), &bad), DHS_ERR_CONFIG);
  EXPECT_EQ(bad, nullptr);
}

TEST(Model, BuildForwardSaveLoad) {
  const auto dir = scratch("model");
  auto c = new_config();
  dhs_config_set(c.get(), "base_channels", "4");
  dhs_model* raw = nullptr;
  ASSERT_EQ(dhs_model_build(c.get(), &raw), DHS_OK);
  ModelPtr m(raw, dhs_model_free);
  EXPECT_STREQ(dhs_model_kind(m.get()), "dhsnet");
  uint64_t count = 0;
  EXPECT_EQ(dhs_model_param_count(m.get(), &count), DHS_OK);
  EXPECT_GT(count, 0u);

  const size_t in_dims[4] = {1, 3, 32, 32};
  size_t seg_dims[4], heat_dims[4];
  int has_heat = 0;
  ASSERT_EQ(dhs_model_output_dims(m.get(), in_dims, seg_dims, heat_dims, &has_heat), DHS_OK);
  EXPECT_EQ(has_heat, 1);
  EXPECT_EQ(seg_dims[1], 4u);
  EXPECT_EQ(heat_dims[2], 8u);

  std::vector<float> image(3 * 32 * 32);
  for (size_t i = 0; i < image.size(); ++i) image[i] = float(i % 17) / 17.0f;
  std::vector<float> seg(4 * 32 * 32), heat(3 * 8 * 8);
  ASSERT_EQ(dhs_model_forward(m.get(), image.data(), in_dims, seg.data(), seg.size(), heat.data(), heat.size()), DHS_OK);
  std::vector<float> small(10);
  EXPECT_EQ(dhs_model_forward(m.get(), image.data(), in_dims, small.data(), small.size(), nullptr, 0), DHS_ERR_USAGE);
  const size_t odd_dims[4] = {1, 3, 30, 32};
  EXPECT_EQ(dhs_model_forward(m.get(), image.data(), odd_dims, seg.data(), seg.size(), nullptr, 0), DHS_ERR_SHAPE);

  const std::string path = (dir / "m.dhsn").string();
  ASSERT_EQ(dhs_model_save(m.get(), path.c_str()), DHS_OK);
  dhs_model* loaded_raw = nullptr;
  ASSERT_EQ(dhs_model_load(path.c_str(), &loaded_raw), DHS_OK);
  ModelPtr loaded(loaded_raw, dhs_model_free);
  std::vector<float> seg2(seg.size()), heat2(heat.size());
  ASSERT_EQ(dhs_model_forward(loaded.get(), image.data(), in_dims, seg2.data(), seg2.size(), heat2.data(), heat2.size()),
            DHS_OK);
  EXPECT_EQ(seg, seg2);
  EXPECT_EQ(heat, heat2);

  {
    std::ofstream(dir / "junk.dhsn") << "not a checkpoint";
  }
  dhs_model* junk = nullptr;
  EXPECT_EQ(dhs_model_load((dir / "junk.dhsn").c_str(), &junk), DHS_ERR_FORMAT);
  EXPECT_EQ(junk, nullptr);
}

TEST(Commands, UnknownCommandIsUsageError) {
  auto c = new_config();
  EXPECT_EQ(dhs_run("fly", c.get()), DHS_ERR_USAGE);
}

// One tiny training run shared by the command tests below.
class TinyRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / "dhsnet_capi_tinyrun");
    fs::remove_all(*dir_);
    auto c = new_config();
    for (const auto& [k, v] : std::vector<std::pair<const char*, std::string>>{
             {"base_channels", "4"}, {"train_count", "6"}, {"val_count", "3"}, {"image_size", "64"},
             {"epochs", "2"}, {"batch_size", "3"}, {"output_dir", (*dir_ / "train").string()}})
      ASSERT_EQ(dhs_config_set(c.get(), k, v.c_str()), DHS_OK) << k;
    train_status_ = dhs_train(c.get());
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }

  static fs::path* dir_;
  static dhs_status train_status_;
};

fs::path* TinyRun::dir_ = nullptr;
dhs_status TinyRun::train_status_ = DHS_ERR_INTERNAL;

TEST_F(TinyRun, TrainWritesOneCsvRowPerStepAndCheckpoints) {
  ASSERT_EQ(train_status_, DHS_OK) << dhs_last_error();
  const auto train = *dir_ / "train";
  std::istringstream csv(slurp(train / "loss.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "step,seg_loss,point_loss,total");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4u);  // 2 epochs x 2 batches
  EXPECT_TRUE(fs::exists(train / "checkpoint_epoch1.dhsn"));
  EXPECT_TRUE(fs::exists(train / "checkpoint_epoch2.dhsn"));
  EXPECT_TRUE(fs::exists(train / "model.dhsn"));
  EXPECT_TRUE(fs::exists(train / "config.txt"));
}

TEST_F(TinyRun, EvalReportsAllCountsAndGroundTruthScoresOne) {
  ASSERT_EQ(train_status_, DHS_OK);
  auto c = new_config();
  const auto out = *dir_ / "eval";
  for (const auto& [k, v] : std::vector<std::pair<const char*, std::string>>{
           {"base_channels", "4"}, {"train_count", "6"}, {"val_count", "3"}, {"image_size", "64"},
           {"checkpoint", (*dir_ / "train" / "model.dhsn").string()}, {"output_dir", out.string()}})
    dhs_config_set(c.get(), k, v.c_str());
  ASSERT_EQ(dhs_eval(c.get()), DHS_OK) << dhs_last_error();
  const std::string report = slurp(out / "metrics.txt");
  for (const char* key : {"acc = ", "class0.tp", "class3.fn", "class2.tn", "class1.fp"})
    EXPECT_NE(report.find(key), std::string::npos) << key;
  const std::string first = report;
  ASSERT_EQ(dhs_eval(c.get()), DHS_OK);
  EXPECT_EQ(slurp(out / "metrics.txt"), first);  // deterministic

  dhs_config_set(c.get(), "eval_ground_truth", "true");
  ASSERT_EQ(dhs_eval(c.get()), DHS_OK);
  EXPECT_NE(slurp(out / "metrics.txt").find("acc = 1.000000"), std::string::npos);
}

TEST_F(TinyRun, EvalRejectsMismatchedModelKind) {
  ASSERT_EQ(train_status_, DHS_OK);
  auto c = new_config();
  dhs_config_set(c.get(), "model", "unet");
  dhs_config_set(c.get(), "base_channels", "4");
  dhs_config_set(c.get(), "checkpoint", (*dir_ / "train" / "model.dhsn").c_str());
  dhs_config_set(c.get(), "output_dir", (*dir_ / "mismatch").c_str());
  EXPECT_EQ(dhs_eval(c.get()), DHS_ERR_CONFIG);
  EXPECT_NE(std::string(dhs_last_error()).find("config mismatch"), std::string::npos);
}

TEST_F(TinyRun, CliInferWritesPaletteMaskAndSortedProposals) {
  ASSERT_EQ(train_status_, DHS_OK);
  const std::string ckpt = (*dir_ / "train" / "model.dhsn").string();
  const std::size_t h = 64, w = 64;
  std::vector<std::uint8_t> rgb(h * w * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<std::uint8_t>((i * 37 + i / 97) % 251);
  const auto img = *dir_ / "input.png";
  dhs::png::write_rgb8(img.string(), w, h, rgb);

  const auto out = *dir_ / "infer";
  ASSERT_EQ(run_cli("infer --set base_channels=4 --set peak_threshold=0 --checkpoint " + ckpt + " --image " +
                    img.string() + " --out " + out.string()),
            0);

  // Recompute the mask through the C API from the same 8-bit samples.
  dhs_model* raw = nullptr;
  ASSERT_EQ(dhs_model_load(ckpt.c_str(), &raw), DHS_OK);
  ModelPtr m(raw, dhs_model_free);
  const size_t dims[4] = {1, 3, h, w};
  std::vector<float> input(3 * h * w), seg(4 * h * w);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h * w; ++i) input[c * h * w + i] = static_cast<float>(rgb[i * 3 + c]) / 255.0f;
  ASSERT_EQ(dhs_model_forward(m.get(), input.data(), dims, seg.data(), seg.size(), nullptr, 0), DHS_OK);
  const std::uint16_t palette[4][3] = {{0, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 0, 0}};
  const auto mask = dhs::png::read((out / "mask.png").string());
  ASSERT_EQ(mask.width, w);
  ASSERT_EQ(mask.height, h);
  ASSERT_EQ(mask.channels, 3u);
  for (std::size_t i = 0; i < h * w; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 4; ++c)
      if (seg[c * h * w + i] > seg[best * h * w + i]) best = c;
    for (std::size_t ch = 0; ch < 3; ++ch)
      ASSERT_EQ(mask.samples[i * 3 + ch], palette[best][ch]) << "pixel " << i;
  }
  for (int k = 0; k < 3; ++k) {
    const auto heat = dhs::png::read((out / ("heatmap_class" + std::to_string(k) + ".png")).string());
    EXPECT_EQ(heat.width, w / 4);
    EXPECT_EQ(heat.channels, 1u);
  }

  std::istringstream proposals(slurp(out / "proposals.txt"));
  std::string line;
  std::getline(proposals, line);
  EXPECT_EQ(line[0], '#');
  double previous = 2.0;
  std::size_t count = 0;
  while (std::getline(proposals, line)) {
    std::istringstream fields(line);
    int cls, row, col;
    double py, px, score;
    ASSERT_TRUE(fields >> cls >> row >> col >> py >> px >> score) << line;
    EXPECT_LE(score, previous);
    EXPECT_DOUBLE_EQ(py, (row + 0.5) * 4);
    previous = score;
    ++count;
  }
  EXPECT_GT(count, 0u);
}

TEST_F(TinyRun, CliInferPadsOddImagesAndRejectsUnreadableOnes) {
  ASSERT_EQ(train_status_, DHS_OK);
  const std::string ckpt = (*dir_ / "train" / "model.dhsn").string();
  const auto img = *dir_ / "odd.png";
  dhs::png::write_rgb8(img.string(), 70, 50, std::vector<std::uint8_t>(70 * 50 * 3, 90));
  const auto out = *dir_ / "infer_odd";
  ASSERT_EQ(run_cli("infer --set base_channels=4 --checkpoint " + ckpt + " --image " + img.string() + " --out " +
                    out.string()),
            0);
  const auto mask = dhs::png::read((out / "mask.png").string());
  EXPECT_EQ(mask.width, 128u);
  EXPECT_EQ(mask.height, 64u);

  {
    std::ofstream(*dir_ / "broken.png") << "\x89PNG but not really";
  }
  EXPECT_EQ(run_cli("infer --set base_channels=4 --checkpoint " + ckpt + " --image " +
                    (*dir_ / "broken.png").string() + " --out " + out.string()),
            2);
  EXPECT_EQ(run_cli("infer --set base_channels=4 --checkpoint " + ckpt + " --image " +
                    (*dir_ / "missing.png").string() + " --out " + out.string()),
            2);
}

TEST_F(TinyRun, BenchReportsIterationsDimsAndBothModels) {
  ASSERT_EQ(train_status_, DHS_OK);
  const auto out = *dir_ / "bench";
  const std::string ckpt = (*dir_ / "train" / "model.dhsn").string();
  ASSERT_EQ(run_cli("bench --set base_channels=4 --set image_size=64 --checkpoint " + ckpt + " --checkpoint-b " +
                    ckpt + " --out " + out.string()),
            0);
  const std::string report = slurp(out / "bench.txt");
  for (const char* key : {"iterations = 100", "input_dims = ", "mean_a_seconds", "mean_b_seconds", "ratio_b_over_a"})
    EXPECT_NE(report.find(key), std::string::npos) << key << "\n" << report;
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("train --set no_such_key=1"), 1);
  EXPECT_EQ(run_cli("train --set lr"), 1);
  EXPECT_EQ(run_cli("bench --set bench_iterations=5"), 1);
  EXPECT_EQ(run_cli("train --config /definitely/not/here.cfg"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, FlagsOverrideTheConfigFile) {
  const auto dir = scratch("cli");
  {
    std::ofstream(dir / "run.cfg") << "model = unet\nbase_channels = 4\ntrain_count = 2\nval_count = 1\n"
                                      "image_size = 64\nepochs = 1\nbatch_size = 2\nseed = 3\n";
  }
  ASSERT_EQ(run_cli("train --config " + (dir / "run.cfg").string() + " --seed 9 --out " + (dir / "o").string()), 0);
  const std::string cfg = slurp(dir / "o" / "config.txt");
  EXPECT_NE(cfg.find("seed = 9\n"), std::string::npos);
  EXPECT_NE(cfg.find("model = unet\n"), std::string::npos);
}

}  // namespace
