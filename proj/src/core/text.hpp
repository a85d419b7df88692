// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Small parsing helpers for the key = value text formats.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace dhs::text {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

std::uint64_t parse_uint(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);
double parse_double(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);

// `key = value` lines; blank lines and `#` comments skipped. Malformed lines
// raise `kind`.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  ErrorKind kind = ErrorKind::kConfig);

std::string read_file(const std::string& path);

}  // namespace dhs::text
