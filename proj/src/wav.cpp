// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "linvoc/dsp.hpp"

namespace linvoc::dsp {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Waveform wav_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("malformed header: not a RIFF/WAVE file: " + path.string());
  }
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const unsigned char* chunk = buf.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw std::runtime_error("malformed header: chunk overruns file " + path.string());
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("malformed header: short fmt chunk");
      const std::uint16_t format = read_u16(buf.data() + body);
      channels = read_u16(buf.data() + body + 2);
      rate = read_u32(buf.data() + body + 4);
      bits = read_u16(buf.data() + body + 14);
      if (format != 1) throw std::runtime_error("unsupported encoding: format tag " + std::to_string(format));
      if (channels != 1) throw std::runtime_error("unsupported channel count " + std::to_string(channels));
      if (bits != 16) throw std::runtime_error("unsupported encoding: " + std::to_string(bits) + "-bit samples");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("malformed header: data chunk before fmt");
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      const std::size_t n = size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(buf.data() + body + 2 * i));
        w.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw std::runtime_error("malformed header: no data chunk in " + path.string());
}

void wav_write(const Waveform& w, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (float s : w.samples) {
    const double q = std::clamp(std::round(static_cast<double>(s) * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void write_mel_blob(const MelCondition& c, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << c.num_frames() << ' ' << c.frames.dim(1) << '\n';
  f.write(reinterpret_cast<const char*>(c.frames.data()), static_cast<std::streamsize>(c.frames.size() * sizeof(float)));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

MelCondition read_mel_blob(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string header;
  std::getline(f, header);
  std::istringstream hs(header);
  std::int64_t frames = -1, bands = -1;
  if (!(hs >> frames >> bands) || frames < 0 || bands <= 0) {
    throw std::runtime_error("malformed mel blob header in " + path.string());
  }
  std::vector<float> v(static_cast<std::size_t>(frames * bands));
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (f.gcount() != static_cast<std::streamsize>(v.size() * sizeof(float))) {
    throw std::runtime_error("mel blob truncated: " + path.string());
  }
  MelCondition c;
  c.frames = TensorF(Shape{frames, bands}, std::move(v));
  return c;
}

}  // namespace linvoc::dsp
