// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace linvoc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename I>
I parse_integer(const std::string& key, const std::string& v) {
  I out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("config key '" + key + "': bad integer '" + v + "'");
  return out;
}

}  // namespace

KeyValues parse_kv(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_kv_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_kv(ss.str());
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_kv(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void write_kv_file(const KeyValues& kv, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << format_kv(kv);
}

void apply_override(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override '" + assignment + "' must be key=value");
  const auto key = trim(assignment.substr(0, eq));
  if (key.empty()) throw std::invalid_argument("override '" + assignment + "' has an empty key");
  kv[key] = trim(assignment.substr(eq + 1));
}

void kv_get(const KeyValues& kv, const std::string& key, int& out) {
  if (auto it = kv.find(key); it != kv.end()) out = parse_integer<int>(key, it->second);
}
void kv_get(const KeyValues& kv, const std::string& key, std::int64_t& out) {
  if (auto it = kv.find(key); it != kv.end()) out = parse_integer<std::int64_t>(key, it->second);
}
void kv_get(const KeyValues& kv, const std::string& key, std::uint64_t& out) {
  if (auto it = kv.find(key); it != kv.end()) out = parse_integer<std::uint64_t>(key, it->second);
}

void kv_get(const KeyValues& kv, const std::string& key, double& out) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  std::size_t used = 0;
  try {
    out = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size()) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + it->second + "'");
  }
}

void kv_get(const KeyValues& kv, const std::string& key, bool& out) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  const auto& v = it->second;
  if (v == "true" || v == "1" || v == "yes") out = true;
  else if (v == "false" || v == "0" || v == "no") out = false;
  else throw std::invalid_argument("config key '" + key + "': bad boolean '" + v + "'");
}

void kv_get(const KeyValues& kv, const std::string& key, std::string& out) {
  if (auto it = kv.find(key); it != kv.end()) out = it->second;
}

}  // namespace linvoc
