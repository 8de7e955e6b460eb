// Copyright (c) 2026 The osdkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "osd/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "osd/errors.hpp"

namespace osd {

namespace {

// All multi-byte fields in a RIFF/WAVE file are little-endian. The target
// platforms here are little-endian, so raw loads suffice.
std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t load_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.is_open()) {
    throw DataError("cannot open WAV file: " + path);
  }

  unsigned char riff[12];
  if (!f.read(reinterpret_cast<char*>(riff), 12) || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw DataError("malformed WAV header (missing RIFF/WAVE): " + path);
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<unsigned char> data;

  // Walk the chunk list; anything other than fmt/data is skipped.
  unsigned char head[8];
  while (f.read(reinterpret_cast<char*>(head), 8)) {
    const std::uint32_t size = load_u32(head + 4);
    if (std::memcmp(head, "fmt ", 4) == 0) {
      if (size < 16) throw DataError("malformed WAV header (short fmt chunk): " + path);
      std::vector<unsigned char> fmt(size);
      if (!f.read(reinterpret_cast<char*>(fmt.data()), size)) {
        throw DataError("malformed WAV header (truncated fmt chunk): " + path);
      }
      format = load_u16(fmt.data() + 0);
      channels = load_u16(fmt.data() + 2);
      rate = load_u32(fmt.data() + 4);
      bits = load_u16(fmt.data() + 14);
      have_fmt = true;
    } else if (std::memcmp(head, "data", 4) == 0) {
      data.resize(size);
      if (!f.read(reinterpret_cast<char*>(data.data()), size)) {
        throw DataError("malformed WAV header (truncated data chunk): " + path);
      }
      break;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
    }
  }

  if (!have_fmt) throw DataError("malformed WAV header (no fmt chunk): " + path);
  if (format != 1 || bits != 16) {
    throw DataError("unsupported WAV encoding (need PCM 16-bit, got format " +
                    std::to_string(format) + ", " + std::to_string(bits) + " bits): " + path);
  }
  if (channels != 1 && channels != 2) {
    throw DataError("unsupported WAV encoding (need mono or stereo, got " +
                    std::to_string(channels) + " channels): " + path);
  }
  if (rate == 0) throw DataError("malformed WAV header (zero sample rate): " + path);

  const size_t num_values = data.size() / 2;
  const size_t num_frames = num_values / channels;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(num_frames);
  const double scale = 1.0 / 32768.0;
  for (size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data.data() + 2 * (i * channels + c);
      const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      acc += s * scale;
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const Waveform& w, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f.is_open()) {
    throw DataError("cannot write WAV file: " + path);
  }

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(2 * w.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(w.sample_rate);
  const std::uint32_t byte_rate = rate * 2;

  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    f.write(reinterpret_cast<char*>(b), 2);
  };

  f.write("RIFF", 4);
  put_u32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(byte_rate);
  put_u16(2);   // block align
  put_u16(16);  // bits per sample
  f.write("data", 4);
  put_u32(data_bytes);

  for (double x : w.samples) {
    const double clipped = std::clamp(x, -1.0, 1.0);
    const long q = std::lround(clipped * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    put_u16(static_cast<std::uint16_t>(s));
  }
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace osd
