// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "tensor.hpp"

namespace dhs {

std::string shape_str(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

}  // namespace dhs
