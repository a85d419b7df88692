// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "error.hpp"

namespace dhs {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kData: return "data";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace dhs
