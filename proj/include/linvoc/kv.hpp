// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Flat "key = value" configuration text. '#' starts a comment; blank lines
// are ignored; later keys override earlier ones.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace linvoc {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_kv(const std::string& text);
KeyValues read_kv_file(const std::filesystem::path& path);
std::string format_kv(const KeyValues& kv);
/// Shortest text that parses back to exactly `v`.
std::string format_number(double v);
void write_kv_file(const KeyValues& kv, const std::filesystem::path& path);

/// Parses "key=value" into `kv`; throws on a missing '='.
void apply_override(KeyValues& kv, const std::string& assignment);

// Leave `out` untouched when the key is absent; throw std::invalid_argument
// when the value does not parse as the requested type.
void kv_get(const KeyValues& kv, const std::string& key, int& out);
void kv_get(const KeyValues& kv, const std::string& key, std::int64_t& out);
void kv_get(const KeyValues& kv, const std::string& key, std::uint64_t& out);
void kv_get(const KeyValues& kv, const std::string& key, double& out);
void kv_get(const KeyValues& kv, const std::string& key, bool& out);
void kv_get(const KeyValues& kv, const std::string& key, std::string& out);

}  // namespace linvoc
