// wav.cc

// Copyright 2026 The ctsforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ctsforge/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctsforge/binary_io.h"

namespace ctsforge {

namespace {

void expect_tag(std::istream& in, const char* tag, const std::string& file) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, tag, 4) != 0)
    throw std::runtime_error(file + ": expected '" + std::string(tag, 4) +
                             "' chunk");
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string file = path.string();
  if (!in) throw std::runtime_error("cannot open " + file);
  expect_tag(in, "RIFF", file);
  read_le<std::uint32_t>(in);
  expect_tag(in, "WAVE", file);

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  while (true) {
    char id[4];
    if (!in.read(id, 4)) throw std::runtime_error(file + ": no data chunk");
    auto size = read_le<std::uint32_t>(in);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(in);
      channels = read_le<std::uint16_t>(in);
      rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);  // byte rate
      read_le<std::uint16_t>(in);  // block align
      bits = read_le<std::uint16_t>(in);
      if (size > 16) in.seekg(size - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error(file + ": data before fmt");
      if (format != 1 || bits != 16 || channels != 1)
        throw std::runtime_error(file + ": only 16-bit PCM mono is supported");
      if (rate != kTelephoneRate)
        throw std::runtime_error(file + ": sample rate " +
                                 std::to_string(rate) + " Hz, expected 8000");
      std::vector<std::int16_t> pcm(size / 2);
      for (auto& s : pcm) s = read_le<std::int16_t>(in);
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(static_cast<Eigen::Index>(pcm.size()));
      for (std::size_t i = 0; i < pcm.size(); ++i)
        w.samples[static_cast<Eigen::Index>(i)] = pcm[i] / 32768.0;
      return w;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  const auto rate = static_cast<std::uint32_t>(wave.sample_rate);
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + 2 * n);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint32_t>(out, rate);
  write_le<std::uint32_t>(out, rate * 2);
  write_le<std::uint16_t>(out, 2);
  write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  write_le<std::uint32_t>(out, 2 * n);
  for (Eigen::Index i = 0; i < wave.samples.size(); ++i) {
    double x = std::clamp(wave.samples[i], -1.0, 1.0);
    long q = std::lround(x * 32768.0);
    write_le<std::int16_t>(out, static_cast<std::int16_t>(
                                    std::clamp(q, -32768L, 32767L)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace ctsforge
