// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhsnet/dhsnet.h"

#include <algorithm>
#include <cstring>
#include <iostream>
#include <new>
#include <string>

#include "app.hpp"
#include "error.hpp"
#include "network.hpp"

struct dhs_config {
  dhs::app::RunConfig run;
};

struct dhs_model {
  dhs::net::Model<float> model;
};

namespace {

thread_local std::string g_last_error;

dhs_status status_for(dhs::ErrorKind kind) {
  switch (kind) {
    case dhs::ErrorKind::kUsage: return DHS_ERR_USAGE;
    case dhs::ErrorKind::kConfig: return DHS_ERR_CONFIG;
    case dhs::ErrorKind::kData: return DHS_ERR_DATA;
    case dhs::ErrorKind::kFormat: return DHS_ERR_FORMAT;
    case dhs::ErrorKind::kShape: return DHS_ERR_SHAPE;
    case dhs::ErrorKind::kNumeric: return DHS_ERR_NUMERIC;
    case dhs::ErrorKind::kInternal: return DHS_ERR_INTERNAL;
  }
  return DHS_ERR_INTERNAL;
}

dhs_status fail_with(dhs_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
dhs_status guarded(F&& body) {
  try {
    return body();
  } catch (const dhs::Error& e) {
    return fail_with(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(DHS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(DHS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail_with(DHS_ERR_INTERNAL, "unknown error");
  }
}

#define DHS_REQUIRE_ARG(cond, what) \
  if (!(cond)) return fail_with(DHS_ERR_USAGE, what)

dhs::Shape input_shape(const size_t dims[4]) { return {dims[0], dims[1], dims[2], dims[3]}; }

}  // namespace

extern "C" {

const char* dhs_version(void) { return DHS_VERSION_STRING; }

const char* dhs_last_error(void) { return g_last_error.c_str(); }

const char* dhs_status_name(dhs_status status) {
  switch (status) {
    case DHS_OK: return "ok";
    case DHS_ERR_USAGE: return "usage error";
    case DHS_ERR_CONFIG: return "config error";
    case DHS_ERR_DATA: return "data error";
    case DHS_ERR_FORMAT: return "format error";
    case DHS_ERR_SHAPE: return "shape error";
    case DHS_ERR_NUMERIC: return "numeric error";
    case DHS_ERR_CHECK_FAILED: return "check failed";
    case DHS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int dhs_exit_code(dhs_status status) {
  switch (status) {
    case DHS_OK: return 0;
    case DHS_ERR_USAGE:
    case DHS_ERR_CONFIG: return 1;
    case DHS_ERR_DATA:
    case DHS_ERR_FORMAT: return 2;
    default: return 3;
  }
}

dhs_status dhs_config_new(dhs_config** out) {
  DHS_REQUIRE_ARG(out != nullptr, "dhs_config_new: out is NULL");
  return guarded([&] {
    *out = new dhs_config{};
    return DHS_OK;
  });
}

dhs_status dhs_config_load(const char* path, dhs_config** out) {
  DHS_REQUIRE_ARG(path != nullptr && out != nullptr, "dhs_config_load: NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new dhs_config{dhs::app::load_config(path)};
    return DHS_OK;
  });
}

dhs_status dhs_config_set(dhs_config* config, const char* key, const char* value) {
  DHS_REQUIRE_ARG(config != nullptr && key != nullptr && value != nullptr, "dhs_config_set: NULL argument");
  return guarded([&] {
    config->run.set(key, value);
    return DHS_OK;
  });
}

dhs_status dhs_config_text(const dhs_config* config, char* buf, size_t capacity, size_t* needed) {
  DHS_REQUIRE_ARG(config != nullptr, "dhs_config_text: config is NULL");
  return guarded([&] {
    const std::string text = config->run.to_text();
    if (needed) *needed = text.size() + 1;
    if (buf && capacity > 0) {
      const size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
    return DHS_OK;
  });
}

void dhs_config_free(dhs_config* config) { delete config; }

dhs_status dhs_train(const dhs_config* config) {
  DHS_REQUIRE_ARG(config != nullptr, "dhs_train: config is NULL");
  return guarded([&] {
    dhs::app::cmd_train(config->run, std::cout);
    return DHS_OK;
  });
}

dhs_status dhs_eval(const dhs_config* config) {
  DHS_REQUIRE_ARG(config != nullptr, "dhs_eval: config is NULL");
  return guarded([&] {
    dhs::app::cmd_eval(config->run, std::cout);
    return DHS_OK;
  });
}

dhs_status dhs_infer(const dhs_config* config) {
  DHS_REQUIRE_ARG(config != nullptr, "dhs_infer: config is NULL");
  return guarded([&] {
    dhs::app::cmd_infer(config->run, std::cout);
    return DHS_OK;
  });
}

dhs_status dhs_gradcheck(const dhs_config* config) {
  DHS_REQUIRE_ARG(config != nullptr, "dhs_gradcheck: config is NULL");
  return guarded([&] {
    if (dhs::app::cmd_gradcheck(config->run, std::cout)) return DHS_OK;
    return fail_with(DHS_ERR_CHECK_FAILED, "gradcheck failed; see gradcheck.txt for op, seed and error");
  });
}

dhs_status dhs_bench(const dhs_config* config) {
  DHS_REQUIRE_ARG(config != nullptr, "dhs_bench: config is NULL");
  return guarded([&] {
    dhs::app::cmd_bench(config->run, std::cout);
    return DHS_OK;
  });
}

dhs_status dhs_run(const char* command, const dhs_config* config) {
  DHS_REQUIRE_ARG(command != nullptr, "dhs_run: command is NULL");
  const std::string c = command;
  if (c == "train") return dhs_train(config);
  if (c == "eval") return dhs_eval(config);
  if (c == "infer") return dhs_infer(config);
  if (c == "gradcheck") return dhs_gradcheck(config);
  if (c == "bench") return dhs_bench(config);
  return fail_with(DHS_ERR_USAGE, "unknown command '" + c + "'");
}

dhs_status dhs_model_build(const dhs_config* config, dhs_model** out) {
  DHS_REQUIRE_ARG(config != nullptr && out != nullptr, "dhs_model_build: NULL argument");
  *out = nullptr;
  return guarded([&] {
    const auto& run = config->run;
    *out = new dhs_model{dhs::net::build_model<float>(run.model, run.network, run.seed)};
    return DHS_OK;
  });
}

dhs_status dhs_model_load(const char* path, dhs_model** out) {
  DHS_REQUIRE_ARG(path != nullptr && out != nullptr, "dhs_model_load: NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new dhs_model{dhs::net::load_checkpoint<float>(path)};
    return DHS_OK;
  });
}

dhs_status dhs_model_save(const dhs_model* model, const char* path) {
  DHS_REQUIRE_ARG(model != nullptr && path != nullptr, "dhs_model_save: NULL argument");
  return guarded([&] {
    dhs::net::save_checkpoint(model->model, path);
    return DHS_OK;
  });
}

void dhs_model_free(dhs_model* model) { delete model; }

const char* dhs_model_kind(const dhs_model* model) {
  return model ? dhs::net::kind_name(model->model.kind()) : "";
}

dhs_status dhs_model_param_count(const dhs_model* model, uint64_t* count) {
  DHS_REQUIRE_ARG(model != nullptr && count != nullptr, "dhs_model_param_count: NULL argument");
  *count = model->model.parameter_count();
  return DHS_OK;
}

dhs_status dhs_model_output_dims(const dhs_model* model, const size_t input_dims[4], size_t seg_dims[4],
                                 size_t heat_dims[4], int* has_heat) {
  DHS_REQUIRE_ARG(model != nullptr && input_dims != nullptr && seg_dims != nullptr && heat_dims != nullptr &&
                      has_heat != nullptr,
                  "dhs_model_output_dims: NULL argument");
  return guarded([&] {
    const auto& cfg = model->model.config();
    const size_t m = cfg.spatial_multiple();
    dhs::require(input_dims[1] == cfg.in_channels && input_dims[2] % m == 0 && input_dims[3] % m == 0 &&
                     input_dims[0] > 0 && input_dims[2] > 0 && input_dims[3] > 0,
                 dhs::ErrorKind::kShape, "input dims " + dhs::shape_str(input_shape(input_dims)) + " not accepted");
    seg_dims[0] = input_dims[0];
    seg_dims[1] = cfg.seg_classes;
    seg_dims[2] = input_dims[2];
    seg_dims[3] = input_dims[3];
    *has_heat = model->model.layout().has_heat_head ? 1 : 0;
    if (*has_heat) {
      heat_dims[0] = input_dims[0];
      heat_dims[1] = cfg.heat_classes;
      heat_dims[2] = input_dims[2] / cfg.heatmap_stride;
      heat_dims[3] = input_dims[3] / cfg.heatmap_stride;
    } else {
      std::fill(heat_dims, heat_dims + 4, size_t{0});
    }
    return DHS_OK;
  });
}

dhs_status dhs_model_forward(const dhs_model* model, const float* images, const size_t input_dims[4], float* seg,
                             size_t seg_capacity, float* heat, size_t heat_capacity) {
  DHS_REQUIRE_ARG(model != nullptr && images != nullptr && input_dims != nullptr && seg != nullptr,
                  "dhs_model_forward: NULL argument");
  return guarded([&] {
    const dhs::Shape dims = input_shape(input_dims);
    dhs::Tensor<float> x(dims, std::vector<float>(images, images + dhs::shape_numel(dims)));
    const auto out = model->model.forward(x);
    if (out.seg_logits.size() > seg_capacity) return fail_with(DHS_ERR_USAGE, "seg buffer too small");
    std::copy(out.seg_logits.data().begin(), out.seg_logits.data().end(), seg);
    if (heat != nullptr && out.heat_pred) {
      if (out.heat_pred->size() > heat_capacity) return fail_with(DHS_ERR_USAGE, "heat buffer too small");
      std::copy(out.heat_pred->data().begin(), out.heat_pred->data().end(), heat);
    }
    return DHS_OK;
  });
}

}  // extern "C"
