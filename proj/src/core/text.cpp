// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dhs::text {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace {

template <typename U>
U parse_integral(std::string_view raw, std::string_view what) {
  const std::string s = trim(raw);
  U value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  require(ec == std::errc() && ptr == s.data() + s.size() && !s.empty(), ErrorKind::kConfig,
          "invalid integer '" + s + "' for " + std::string(what));
  return value;
}

}  // namespace

std::uint64_t parse_uint(std::string_view s, std::string_view what) { return parse_integral<std::uint64_t>(s, what); }

std::int64_t parse_int(std::string_view s, std::string_view what) { return parse_integral<std::int64_t>(s, what); }

double parse_double(std::string_view raw, std::string_view what) {
  const std::string s = trim(raw);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  require(ec == std::errc() && ptr == s.data() + s.size() && !s.empty() && std::isfinite(value), ErrorKind::kConfig,
          "invalid number '" + s + "' for " + std::string(what));
  return value;
}

bool parse_bool(std::string_view raw, std::string_view what) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorKind::kConfig, "invalid boolean '" + s + "' for " + std::string(what));
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, ErrorKind kind) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, kind, "line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    require(!key.empty(), kind, "line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kData, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dhs::text
