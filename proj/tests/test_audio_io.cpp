// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "sse/audio.hpp"
#include "sse/rng.hpp"

using namespace sse;

namespace {

std::string tmp_path(const char* name) {
  return std::string("/tmp/sse_test_") + name;
}

// Least-squares fit of amplitude/phase of a known-frequency sine.
double fitted_amplitude(const std::vector<double>& x, double freq, int rate,
                        std::size_t lo, std::size_t hi) {
  double cs = 0.0, sn = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    cs += x[i] * std::cos(2.0 * M_PI * freq * i / rate);
    sn += x[i] * std::sin(2.0 * M_PI * freq * i / rate);
  }
  const double n = static_cast<double>(hi - lo);
  return 2.0 * std::hypot(cs, sn) / n;
}

}  // namespace

TEST_CASE("pcm16 scaling and stereo downmix") {
  // Hand-built stereo PCM16 wav: one frame (16384, 0x... 0.4 scaled).
  const std::string path = tmp_path("stereo.wav");
  std::ofstream os(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };
  os.write("RIFF", 4);
  u32(36 + 8);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  u32(16);
  u16(1);
  u16(2);
  u32(32000);
  u32(32000 * 4);
  u16(4);
  u16(16);
  os.write("data", 4);
  u32(8);
  u16(16384);  // 0.5
  u16(16384);
  u16(static_cast<std::uint16_t>(std::int16_t(6554)));   // ~0.2
  u16(static_cast<std::uint16_t>(std::int16_t(13107)));  // ~0.4
  os.close();

  auto b = read_wav(path);
  REQUIRE(b.samples.size() == 2);
  CHECK(b.rate == 32000);
  CHECK(b.samples[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(b.samples[1] == doctest::Approx(0.3).epsilon(1e-3));
}

TEST_CASE("write saturates and round-trips within 1 LSB") {
  const std::string path = tmp_path("rt.wav");
  AudioBuffer b;
  b.rate = 32000;
  Rng rng(1);
  b.samples.resize(1000);
  for (auto& s : b.samples) s = rng.uniform(-1.0, 1.0);
  b.samples[0] = 1.5;  // must saturate
  write_wav(path, b);
  auto r = read_wav(path);
  REQUIRE(r.samples.size() == b.samples.size());
  CHECK(r.samples[0] == doctest::Approx(32767.0 / 32768.0));
  double max_err = 0.0;
  for (std::size_t i = 1; i < r.samples.size(); ++i)
    max_err = std::max(max_err, std::abs(r.samples[i] - b.samples[i]));
  CHECK(max_err <= std::pow(2.0, -15.0));
}

TEST_CASE("empty buffer writes a valid zero-sample file") {
  const std::string path = tmp_path("empty.wav");
  write_wav(path, AudioBuffer{{}, 32000});
  auto r = read_wav(path);
  CHECK(r.samples.empty());
}

TEST_CASE("unsupported format is named in the error") {
  const std::string path = tmp_path("bad.wav");
  std::ofstream os(path, std::ios::binary);
  os << "not a wav at all, definitely";
  os.close();
  CHECK_THROWS_WITH_AS(read_wav(path),
                       doctest::Contains("RIFF"), std::runtime_error);
}

TEST_CASE("resample length contract and 1 kHz sine amplitude") {
  AudioBuffer b;
  b.rate = 48000;
  b.samples.resize(48000);
  for (std::size_t i = 0; i < b.samples.size(); ++i)
    b.samples[i] = 0.5 * std::sin(2.0 * M_PI * 1000.0 * i / 48000.0);
  auto r = resample(b, 32000);
  CHECK(r.samples.size() == 32000);
  CHECK(r.rate == 32000);
  const double amp =
      fitted_amplitude(r.samples, 1000.0, 32000, 2000, r.samples.size() - 2000);
  CHECK(std::abs(amp - 0.5) / 0.5 <= 0.01);
}

TEST_CASE("resample passes DC at unity") {
  AudioBuffer b;
  b.rate = 32000;
  b.samples.assign(16000, 0.7);
  auto r = resample(b, 48000);
  CHECK(r.samples.size() == 24000);
  CHECK(r.samples[r.samples.size() / 2] == doctest::Approx(0.7).epsilon(0.0015));
}

TEST_CASE("resample rejects unsupported ratios") {
  AudioBuffer b;
  b.rate = 44100;
  b.samples.assign(100, 0.0);
  CHECK_THROWS_AS(resample(b, 32000), std::runtime_error);
}

TEST_CASE("down-up round trip preserves band-limited content at >= 50 dB") {
  AudioBuffer b;
  b.rate = 48000;
  b.samples.resize(48000);
  Rng rng(7);
  // Band-limited test signal: sum of tones below 14 kHz.
  for (int k = 1; k <= 13; ++k) {
    const double f = 1000.0 * k;
    const double ph = rng.uniform(0.0, 2.0 * M_PI);
    for (std::size_t i = 0; i < b.samples.size(); ++i)
      b.samples[i] += 0.05 * std::sin(2.0 * M_PI * f * i / 48000.0 + ph);
  }
  auto rt = resample(resample(b, 32000), 48000);
  REQUIRE(rt.samples.size() == b.samples.size());
  double se = 0.0, pe = 0.0;
  for (std::size_t i = 3000; i < b.samples.size() - 3000; ++i) {
    se += (rt.samples[i] - b.samples[i]) * (rt.samples[i] - b.samples[i]);
    pe += b.samples[i] * b.samples[i];
  }
  CHECK(10.0 * std::log10(pe / se) >= 50.0);
}

TEST_CASE("stopband attenuation of the resampler >= 60 dB") {
  AudioBuffer b;
  b.rate = 48000;
  b.samples.resize(48000);
  for (std::size_t i = 0; i < b.samples.size(); ++i)
    b.samples[i] = 0.5 * std::sin(2.0 * M_PI * 19000.0 * i / 48000.0);
  auto r = resample(b, 32000);
  double peak = 0.0;
  for (std::size_t i = 2000; i < r.samples.size() - 2000; ++i)
    peak = std::max(peak, std::abs(r.samples[i]));
  CHECK(20.0 * std::log10(peak / 0.5) <= -60.0);
}
