// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "linvoc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace linvoc {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

void Checkpoint::put(const std::string& name, const TensorF& value) {
  if (!tensors_.count(name)) order_.push_back(name);
  tensors_[name] = value;
}

const TensorF& Checkpoint::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::runtime_error("checkpoint has no tensor named " + name);
  return it->second;
}

std::vector<std::string> Checkpoint::names() const { return order_; }

std::filesystem::path Checkpoint::payload_path(const std::filesystem::path& manifest) {
  std::filesystem::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

void Checkpoint::save(const std::filesystem::path& manifest) const {
  const auto payload = payload_path(manifest);
  nlohmann::json doc;
  doc["format"] = "linvoc-checkpoint";
  doc["version"] = 1;
  doc["dtype"] = "float32-le";
  doc["payload"] = payload.filename().string();
  doc["meta"] = meta_;
  doc["tensors"] = nlohmann::json::array();

  std::ofstream bin(payload, std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("cannot open " + payload.string() + " for writing");
  std::uint64_t offset = 0;
  for (const auto& name : order_) {
    const TensorF& t = tensors_.at(name);
    doc["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    const auto bytes = static_cast<std::streamsize>(t.size() * sizeof(float));
    bin.write(reinterpret_cast<const char*>(t.data()), bytes);
    offset += static_cast<std::uint64_t>(bytes);
  }
  bin.close();
  if (!bin) throw std::runtime_error("failed writing " + payload.string());

  std::ofstream js(manifest, std::ios::trunc);
  if (!js) throw std::runtime_error("cannot open " + manifest.string() + " for writing");
  js << doc.dump(1) << '\n';
  if (!js) throw std::runtime_error("failed writing " + manifest.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& manifest) {
  std::ifstream js(manifest);
  if (!js) throw std::runtime_error("cannot open checkpoint manifest " + manifest.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint manifest " + manifest.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "linvoc-checkpoint" || doc.value("dtype", "") != "float32-le") {
    throw std::runtime_error("unsupported checkpoint format in " + manifest.string());
  }
  const auto payload = manifest.parent_path() / doc.at("payload").get<std::string>();
  std::ifstream bin(payload, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open checkpoint payload " + payload.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  ckpt.meta_ = doc.value("meta", nlohmann::json::object());
  for (const auto& entry : doc.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto count = numel(shape);
    const auto nbytes = static_cast<std::uint64_t>(count) * sizeof(float);
    if (offset + nbytes > bytes.size()) throw std::runtime_error("checkpoint payload truncated at " + name);
    std::vector<float> values(static_cast<std::size_t>(count));
    std::memcpy(values.data(), bytes.data() + offset, nbytes);
    ckpt.put(name, TensorF(shape, std::move(values)));
  }
  return ckpt;
}

}  // namespace linvoc
