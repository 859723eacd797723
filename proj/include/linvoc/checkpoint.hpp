// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Named-tensor container: a JSON manifest (name, shape, byte offset) next to
// a contiguous little-endian float32 payload.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "linvoc/params.hpp"

namespace linvoc {

class Checkpoint {
 public:
  void put(const std::string& name, const TensorF& value);
  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  const TensorF& get(const std::string& name) const;
  std::vector<std::string> names() const;

  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  /// Writes `manifest` and a payload file named after it with ".bin"
  /// replacing the extension.
  void save(const std::filesystem::path& manifest) const;
  static Checkpoint load(const std::filesystem::path& manifest);

  static std::filesystem::path payload_path(const std::filesystem::path& manifest);

 private:
  std::vector<std::string> order_;
  std::map<std::string, TensorF> tensors_;
  nlohmann::json meta_ = nlohmann::json::object();
};

/// Stores every parameter as "<prefix><name>".
template <typename T>
void store_params(Checkpoint& ckpt, const std::string& prefix, const ParamSet<T>& params) {
  for (const auto& p : params) ckpt.put(prefix + p.name, p.value.template cast<float>());
}

/// Overwrites every parameter from "<prefix><name>"; shapes must agree.
template <typename T>
void load_params(const Checkpoint& ckpt, const std::string& prefix, ParamSet<T>& params) {
  for (auto& p : params) {
    const TensorF& src = ckpt.get(prefix + p.name);
    if (src.shape() != p.value.shape()) {
      throw std::runtime_error("checkpoint tensor " + prefix + p.name + " has shape " + shape_str(src.shape()) +
                               ", model expects " + shape_str(p.value.shape()));
    }
    p.value = src.template cast<T>();
  }
}

}  // namespace linvoc
