// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "app.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gradcheck.hpp"
#include "heatmap.hpp"
#include "png_io.hpp"
#include "text.hpp"

namespace dhs::app {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  network.validate();
  focal.validate();
  require(network.in_channels == 3, ErrorKind::kConfig, "in_channels must be 3 for RGB data");
  require(!data.empty(), ErrorKind::kConfig, "data must be 'synthetic' or a dataset root");
  require(downscale >= 1, ErrorKind::kConfig, "downscale must be >= 1");
  require(image_size >= 64 && image_size % 64 == 0, ErrorKind::kConfig, "image_size must be a positive multiple of 64");
  require(train_count >= 1 && val_count >= 1, ErrorKind::kConfig, "train_count and val_count must be >= 1");
  require(std::isfinite(lr) && lr >= 0, ErrorKind::kConfig, "lr must be >= 0");
  require(std::isfinite(momentum) && momentum >= 0 && momentum < 1, ErrorKind::kConfig, "momentum must lie in [0, 1)");
  require(std::isfinite(max_grad_norm) && max_grad_norm >= 0, ErrorKind::kConfig, "max_grad_norm must be >= 0");
  require(std::isfinite(lambda_point) && lambda_point >= 0, ErrorKind::kConfig, "lambda_point must be >= 0");
  require(epochs >= 1, ErrorKind::kConfig, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::kConfig, "batch_size must be >= 1");
  require(target_acc >= 0 && target_acc <= 1, ErrorKind::kConfig, "target_acc must lie in [0, 1]");
  require(peak_threshold >= 0 && peak_threshold <= 1, ErrorKind::kConfig, "peak_threshold must lie in [0, 1]");
  require(bench_iterations >= 100, ErrorKind::kConfig, "bench_iterations must be >= 100");
  require(gradcheck_seeds >= 1, ErrorKind::kConfig, "gradcheck_seeds must be >= 1");
  require(!output_dir.empty(), ErrorKind::kConfig, "output_dir must not be empty");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "model = " << net::kind_name(model) << "\n"
     << "data = " << data << "\n"
     << "val_data = " << val_data << "\n"
     << "class_map = " << class_map << "\n"
     << "downscale = " << downscale << "\n"
     << "crop = " << crop << "\n"
     << "data_seed = " << data_seed << "\n"
     << "train_count = " << train_count << "\n"
     << "val_count = " << val_count << "\n"
     << "image_size = " << image_size << "\n"
     << network.to_text()
     << fmt::format("lr = {}\nmomentum = {}\nmax_grad_norm = {}\nlambda_point = {}\n", lr, momentum,
                   max_grad_norm, lambda_point)
     << fmt::format("focal_alpha = {}\nfocal_beta = {}\nfocal_epsilon = {}\n", focal.alpha, focal.beta, focal.epsilon)
     << "epochs = " << epochs << "\n"
     << "batch_size = " << batch_size << "\n"
     << "shuffle = " << (shuffle ? "true" : "false") << "\n"
     << "seed = " << seed << "\n"
     << "checkpoint_every = " << checkpoint_every << "\n"
     << fmt::format("target_acc = {}\n", target_acc)
     << "max_steps = " << max_steps << "\n"
     << "output_dir = " << output_dir << "\n"
     << "checkpoint = " << checkpoint << "\n"
     << "checkpoint_b = " << checkpoint_b << "\n"
     << "image = " << image << "\n"
     << "eval_ground_truth = " << (eval_ground_truth ? "true" : "false") << "\n"
     << fmt::format("peak_threshold = {}\n", peak_threshold)
     << "max_proposals = " << max_proposals << "\n"
     << "bench_iterations = " << bench_iterations << "\n"
     << "bench_warmup = " << bench_warmup << "\n"
     << "gradcheck_seeds = " << gradcheck_seeds << "\n"
     << "gradcheck_fault = " << gradcheck_fault << "\n";
  return os.str();
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v = text::trim(value);
  auto uint = [&] { return static_cast<std::size_t>(text::parse_uint(v, key)); };
  auto real = [&] { return text::parse_double(v, key); };
  if (network.set(key, v)) return;
  if (key == "model") model = net::parse_kind(v);
  else if (key == "data") data = v;
  else if (key == "val_data") val_data = v;
  else if (key == "class_map") class_map = v;
  else if (key == "downscale") downscale = uint();
  else if (key == "crop") crop = uint();
  else if (key == "data_seed") data_seed = text::parse_uint(v, key);
  else if (key == "train_count") train_count = uint();
  else if (key == "val_count") val_count = uint();
  else if (key == "image_size") image_size = uint();
  else if (key == "lr") lr = real();
  else if (key == "momentum") momentum = real();
  else if (key == "max_grad_norm") max_grad_norm = real();
  else if (key == "lambda_point") lambda_point = real();
  else if (key == "focal_alpha") focal.alpha = real();
  else if (key == "focal_beta") focal.beta = real();
  else if (key == "focal_epsilon") focal.epsilon = real();
  else if (key == "epochs") epochs = uint();
  else if (key == "batch_size") batch_size = uint();
  else if (key == "shuffle") shuffle = text::parse_bool(v, key);
  else if (key == "seed") seed = text::parse_uint(v, key);
  else if (key == "checkpoint_every") checkpoint_every = uint();
  else if (key == "target_acc") target_acc = real();
  else if (key == "max_steps") max_steps = uint();
  else if (key == "output_dir") output_dir = v;
  else if (key == "checkpoint") checkpoint = v;
  else if (key == "checkpoint_b") checkpoint_b = v;
  else if (key == "image") image = v;
  else if (key == "eval_ground_truth") eval_ground_truth = text::parse_bool(v, key);
  else if (key == "peak_threshold") peak_threshold = real();
  else if (key == "max_proposals") max_proposals = uint();
  else if (key == "bench_iterations") bench_iterations = uint();
  else if (key == "bench_warmup") bench_warmup = uint();
  else if (key == "gradcheck_seeds") gradcheck_seeds = uint();
  else if (key == "gradcheck_fault") gradcheck_fault = v;
  else fail(ErrorKind::kConfig, "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  for (const auto& [key, value] : text::parse_key_values(text)) config.set(key, value);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream probe(path);
  require(probe.good(), ErrorKind::kConfig, "cannot open config " + path);
  return parse_config(text::read_file(path));
}

namespace {

std::size_t pad_multiple(const RunConfig& c) { return c.network.heatmap_stride * 16; }

data::ClassMap class_map_for(const RunConfig& c) {
  return c.class_map.empty() ? data::ClassMap::cityscapes() : data::ClassMap::load(c.class_map);
}

std::vector<data::Sample> load_dir(const RunConfig& c, const std::string& root) {
  data::DatasetOptions options;
  options.downscale = c.downscale;
  options.crop = c.crop;
  options.crop_seed = c.data_seed;
  options.pad_multiple = pad_multiple(c);
  return data::load_dataset_dir(root, class_map_for(c), options);
}

fs::path prepare_output(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::kData, "cannot create output directory " + c.output_dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kData, "cannot write " + path.string());
  return out;
}

template <typename T>
net::Model<T> load_matching(const RunConfig& c, const std::string& path) {
  require(!path.empty(), ErrorKind::kConfig, "a checkpoint path is required");
  auto model = net::load_checkpoint<T>(path, c.model);
  require(model.config() == c.network, ErrorKind::kConfig,
          "config mismatch: checkpoint network differs from the run config:\n" + model.config().to_text());
  return model;
}

}  // namespace

Datasets load_datasets(const RunConfig& c, bool need_train) {
  Datasets d;
  if (c.data == "synthetic") {
    if (need_train) d.train = data::generate_synthetic(c.data_seed, c.train_count, c.image_size, c.image_size, 0);
    d.val = data::generate_synthetic(c.data_seed, c.val_count, c.image_size, c.image_size, c.train_count);
    return d;
  }
  if (need_train) d.train = load_dir(c, c.data);
  if (!c.val_data.empty()) d.val = load_dir(c, c.val_data);
  else if (!need_train) d.val = load_dir(c, c.data);
  return d;
}

template <typename T>
loss::ConfusionCounts evaluate(const net::Model<T>& model, const std::vector<data::Sample>& samples,
                               std::size_t batch_size) {
  const auto& cfg = model.config();
  loss::ConfusionCounts counts(cfg.seg_classes);
  data::BatchIterator it(samples.size(), batch_size, std::nullopt);
  std::vector<std::size_t> idx;
  while (it.next(idx)) {
    const auto batch = data::make_batch<T>(samples, idx, cfg.heat_classes, cfg.heatmap_stride);
    const auto out = model.forward(batch.images);
    loss::accumulate_confusion(ops::argmax_channels(out.seg_logits), batch.labels, counts);
  }
  return counts;
}

std::array<std::uint8_t, 3> palette_color(std::int32_t class_id) {
  switch (class_id) {
    case data::kBackground: return {0, 0, 0};
    case data::kFreespace: return {0, 255, 0};
    case data::kVehicle: return {0, 0, 255};
    case data::kPedestrian: return {255, 0, 0};
    default: return {255, 255, 255};
  }
}

void cmd_train(const RunConfig& c, std::ostream& log) {
  c.validate();
  const fs::path dir = prepare_output(c);
  open_output(dir / "config.txt") << c.to_text();
  const Datasets sets = load_datasets(c, true);
  require(!sets.train.empty(), ErrorKind::kData, "empty training set");

  auto model = net::build_model<float>(c.model, c.network, c.seed);
  const net::SgdConfig sgd{c.lr, c.momentum, c.max_grad_norm};
  net::Sgd<float> optimizer(model, sgd);
  const net::TrainConfig train{sgd, c.lambda_point, c.focal};
  log << fmt::format("train {} params={} train={} val={} epochs={} batch={}\n", net::kind_name(c.model),
                     model.parameter_count(), sets.train.size(), sets.val.size(), c.epochs, c.batch_size);

  std::ofstream loss_csv = open_output(dir / "loss.csv");
  std::ofstream epoch_csv = open_output(dir / "epochs.csv");
  loss_csv << kLossCsvHeader << "\n" << std::flush;
  epoch_csv << "epoch,steps,mean_total,val_acc\n" << std::flush;

  std::size_t step = 0;
  bool stop = false;
  std::vector<std::size_t> idx;
  for (std::size_t epoch = 1; epoch <= c.epochs && !stop; ++epoch) {
    std::optional<std::uint64_t> shuffle_seed;
    if (c.shuffle) shuffle_seed = c.seed * 1000003ull + epoch;
    data::BatchIterator it(sets.train.size(), c.batch_size, shuffle_seed);
    double epoch_total = 0.0;
    std::size_t epoch_steps = 0;
    while (it.next(idx)) {
      const auto batch = data::make_batch<float>(sets.train, idx, c.network.heat_classes, c.network.heatmap_stride);
      const net::StepLoss l = net::train_step(model, batch, optimizer, train);
      ++step;
      ++epoch_steps;
      epoch_total += l.total;
      loss_csv << fmt::format("{},{:.9g},{:.9g},{:.9g}\n", step, l.seg, l.point, l.total) << std::flush;
      if (c.max_steps > 0 && step >= c.max_steps) {
        stop = true;
        break;
      }
    }
    const double mean_total = epoch_total / static_cast<double>(std::max<std::size_t>(1, epoch_steps));
    double val_acc = std::nan("");
    if (!sets.val.empty()) val_acc = loss::acc(evaluate(model, sets.val, c.batch_size));
    epoch_csv << fmt::format("{},{},{:.9g},{:.6f}\n", epoch, step, mean_total, val_acc) << std::flush;
    log << fmt::format("epoch {} steps={} mean_loss={:.5f} val_acc={:.5f}\n", epoch, step, mean_total, val_acc)
        << std::flush;
    if (c.checkpoint_every > 0 && epoch % c.checkpoint_every == 0)
      net::save_checkpoint(model, (dir / fmt::format("checkpoint_epoch{}.dhsn", epoch)).string());
    if (c.target_acc > 0 && val_acc >= c.target_acc) {
      log << fmt::format("target_acc {} reached\n", c.target_acc);
      stop = true;
    }
  }
  net::save_checkpoint(model, (dir / "model.dhsn").string());
  log << "wrote " << (dir / "model.dhsn").string() << "\n";
}

void cmd_eval(const RunConfig& c, std::ostream& log) {
  c.validate();
  const fs::path dir = prepare_output(c);
  const Datasets sets = load_datasets(c, false);
  require(!sets.val.empty(), ErrorKind::kData, "empty evaluation set");

  loss::ConfusionCounts counts(c.network.seg_classes);
  std::string source = "ground_truth";
  if (c.eval_ground_truth) {
    for (const auto& s : sets.val) loss::accumulate_confusion(s.labels, s.labels, counts);
  } else {
    const auto model = load_matching<float>(c, c.checkpoint);
    counts = evaluate(model, sets.val, c.batch_size);
    source = c.checkpoint;
  }
  const std::string report = fmt::format("model = {}\nsource = {}\nsamples = {}\n{}", net::kind_name(c.model), source,
                                         sets.val.size(), loss::format_report(counts));
  open_output(dir / "metrics.txt") << report;
  open_output(dir / "metrics.csv") << loss::csv_header(counts.classes()) << "\n" << loss::csv_row(counts) << "\n";
  log << report;
}

void cmd_infer(const RunConfig& c, std::ostream& log) {
  c.validate();
  require(!c.image.empty(), ErrorKind::kConfig, "infer needs an image path");
  const auto model = load_matching<float>(c, c.checkpoint);
  const png::Image img = png::read(c.image);
  require(img.channels == 3, ErrorKind::kData, c.image + ": expected an RGB image");
  const fs::path dir = prepare_output(c);

  data::Sample s;
  s.image = Tensor<float>({3, img.height, img.width});
  s.labels = ops::LabelMap({img.height, img.width}, ops::kIgnoreId);
  const float scale = img.bit_depth == 16 ? 65535.0f : 255.0f;
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x)
        s.image[(ch * img.height + y) * img.width + x] = static_cast<float>(img.at(y, x, ch)) / scale;
  data::pad_sample(s, pad_multiple(c));
  const std::size_t h = s.height(), w = s.width();

  Tensor<float> batch = s.image;
  batch.reshape({1, 3, h, w});
  const auto out = model.forward(batch);
  const auto mask = ops::argmax_channels(out.seg_logits);
  std::vector<std::uint8_t> rgb(h * w * 3);
  for (std::size_t i = 0; i < h * w; ++i) {
    const auto color = palette_color(mask[i]);
    std::copy(color.begin(), color.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  png::write_rgb8((dir / "mask.png").string(), w, h, rgb);
  log << fmt::format("mask {}x{} -> {}\n", w, h, (dir / "mask.png").string());

  std::ofstream proposals = open_output(dir / "proposals.txt");
  proposals << "# class grid_row grid_col pixel_y pixel_x score\n";
  if (out.heat_pred) {
    const std::size_t classes = out.heat_pred->dim(1), gh = out.heat_pred->dim(2), gw = out.heat_pred->dim(3);
    Tensor<float> heat = *out.heat_pred;
    heat.reshape({classes, gh, gw});
    for (std::size_t k = 0; k < classes; ++k) {
      std::vector<std::uint8_t> gray(gh * gw);
      for (std::size_t i = 0; i < gh * gw; ++i)
        gray[i] = static_cast<std::uint8_t>(std::lround(std::clamp(heat[k * gh * gw + i], 0.0f, 1.0f) * 255.0f));
      png::write_gray8((dir / fmt::format("heatmap_class{}.png", k)).string(), gw, gh, gray);
    }
    const double stride = static_cast<double>(c.network.heatmap_stride);
    for (const auto& p : heatmap::extract_peaks(heat, c.peak_threshold, c.max_proposals))
      proposals << fmt::format("{} {} {} {:.1f} {:.1f} {:.6f}\n", p.class_id, p.point.row, p.point.col,
                               (static_cast<double>(p.point.row) + 0.5) * stride,
                               (static_cast<double>(p.point.col) + 0.5) * stride, p.score);
    log << fmt::format("{} heatmaps, proposals -> {}\n", classes, (dir / "proposals.txt").string());
  }
}

bool cmd_gradcheck(const RunConfig& c, std::ostream& log) {
  c.validate();
  const fs::path dir = prepare_output(c);
  grad::SuiteOptions options;
  options.seeds = c.gradcheck_seeds;
  options.end_to_end_seeds = c.gradcheck_seeds;
  options.first_seed = c.seed;
  options.fault_op = c.gradcheck_fault;
  if (!options.fault_op.empty()) {
    const auto& ops = grad::suite_ops();
    require(options.fault_op == "end_to_end_dhsnet" ||
                std::find(ops.begin(), ops.end(), options.fault_op) != ops.end(),
            ErrorKind::kConfig, "unknown gradcheck_fault op " + options.fault_op);
  }
  const auto report = grad::run_suite(options);
  const std::string text = report.format();
  open_output(dir / "gradcheck.txt") << text;
  log << text;
  return report.passed();
}

void cmd_bench(const RunConfig& c, std::ostream& log) {
  c.validate();
  require(c.checkpoint.empty() == c.checkpoint_b.empty(), ErrorKind::kConfig,
          "bench takes two checkpoints or none (none builds fresh unet and dhsnet models)");
  const fs::path dir = prepare_output(c);
  net::Model<float> a, b;
  if (c.checkpoint.empty()) {
    a = net::build_model<float>(net::ModelKind::kUnet, c.network, c.seed);
    b = net::build_model<float>(net::ModelKind::kDhsnet, c.network, c.seed);
  } else {
    a = net::load_checkpoint<float>(c.checkpoint);
    b = net::load_checkpoint<float>(c.checkpoint_b);
  }
  require(a.config().in_channels == b.config().in_channels &&
              a.config().spatial_multiple() == b.config().spatial_multiple(),
          ErrorKind::kShape, "bench models take different input dims");

  Tensor<float> input({1, a.config().in_channels, c.image_size, c.image_size});
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (float& v : input.data()) v = dist(rng);

  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < c.bench_warmup; ++i) {
    (void)a.forward(input);
    (void)b.forward(input);
  }
  // Interleaved so slow drift in machine load hits both models alike.
  double total_a = 0.0, total_b = 0.0;
  for (std::size_t i = 0; i < c.bench_iterations; ++i) {
    auto t0 = clock::now();
    (void)a.forward(input);
    auto t1 = clock::now();
    (void)b.forward(input);
    auto t2 = clock::now();
    total_a += std::chrono::duration<double>(t1 - t0).count();
    total_b += std::chrono::duration<double>(t2 - t1).count();
  }
  const double n = static_cast<double>(c.bench_iterations);
  const double mean_a = total_a / n, mean_b = total_b / n;
  const std::string report = fmt::format(
      "model_a = {}\nmodel_b = {}\ncheckpoint_a = {}\ncheckpoint_b = {}\niterations = {}\nwarmup = {}\n"
      "input_dims = {}\nmean_a_seconds = {:.6f}\nmean_b_seconds = {:.6f}\nratio_b_over_a = {:.4f}\n",
      net::kind_name(a.kind()), net::kind_name(b.kind()), c.checkpoint.empty() ? "fresh" : c.checkpoint,
      c.checkpoint_b.empty() ? "fresh" : c.checkpoint_b, c.bench_iterations, c.bench_warmup, shape_str(input.dims()),
      mean_a, mean_b, mean_b / mean_a);
  open_output(dir / "bench.txt") << report;
  log << report;
}

template loss::ConfusionCounts evaluate<float>(const net::Model<float>&, const std::vector<data::Sample>&,
                                               std::size_t);
template loss::ConfusionCounts evaluate<double>(const net::Model<double>&, const std::vector<data::Sample>&,
                                                std::size_t);

}  // namespace dhs::app
