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
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "sse/rng.hpp"
#include "sse/stft.hpp"

using namespace sse;

namespace {

std::vector<double> tone(double freq, int rate, int n, double amp = 0.5) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
  return x;
}

double roundtrip_snr(const std::vector<double>& sig, const Spectrogram& s) {
  auto rec = istft(s);
  double se = 0.0, pe = 0.0;
  const std::size_t lo = s.spec.window_len;
  const std::size_t hi = std::min(rec.size(), sig.size()) - s.spec.window_len;
  for (std::size_t i = lo; i < hi; ++i) {
    se += (rec[i] - sig[i]) * (rec[i] - sig[i]);
    pe += sig[i] * sig[i];
  }
  return 10.0 * std::log10(pe / std::max(se, 1e-300));
}

}  // namespace

TEST_CASE("frame geometry and latency budget") {
  FrameSpec spec;
  CHECK(spec.bins() == 320);
  CHECK(spec.latency_ms() == doctest::Approx(19.9375));
  CHECK_THROWS_AS(FrameSpec(32000, 700, 160), std::runtime_error);
}

TEST_CASE("first frame appears exactly at sample 638") {
  FrameSpec spec;
  StftStream stream(spec);
  std::vector<double> zeros(637, 0.0);
  CHECK(stream.push(zeros.data(), zeros.size()).empty());
  double one = 0.0;
  auto frames = stream.push(&one, 1);
  CHECK(frames.size() == 1);
}

TEST_CASE("streaming equals offline bitwise") {
  FrameSpec spec;
  Rng rng(3);
  std::vector<double> sig(6400);
  for (auto& s : sig) s = rng.normal();
  auto off = stft(sig, spec);
  StftStream stream(spec);
  int k = 0;
  std::size_t pos = 0;
  while (pos < sig.size()) {
    std::size_t n = std::min<std::size_t>(1 + (pos % 517), sig.size() - pos);
    for (auto& f : stream.push(sig.data() + pos, n)) {
      for (int b = 0; b < off.bins; ++b) {
        CHECK(f[b].real() == off.at(k, b).real());
        CHECK(f[b].imag() == off.at(k, b).imag());
      }
      ++k;
    }
    pos += n;
  }
  CHECK(k == off.frames);
}

TEST_CASE("zero input produces zero frames") {
  FrameSpec spec;
  std::vector<double> sig(3200, 0.0);
  auto s = stft(sig, spec);
  for (const auto& z : s.data) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("istft round trip of white noise >= 60 dB interior") {
  FrameSpec spec;
  Rng rng(11);
  std::vector<double> sig(16000);
  for (auto& s : sig) s = 0.5 * rng.normal();
  CHECK(roundtrip_snr(sig, stft(sig, spec)) >= 60.0);
}

TEST_CASE("all-zero frames synthesize to silence") {
  FrameSpec spec;
  Spectrogram s;
  s.spec = spec;
  s.bins = spec.bins();
  s.frames = 20;
  s.data.assign(20 * 320, 0.0);
  for (double v : istft(s)) CHECK(v == 0.0);
}

TEST_CASE("low-bin zeroing wipes sub-100 Hz tones but spares 1 kHz") {
  FrameSpec spec;
  auto low = tone(50.0, spec.rate, 16000);
  auto mid = tone(1000.0, spec.rate, 16000);
  const double snr_low = roundtrip_snr(low, zero_low_bins(stft(low, spec)));
  const double snr_mid = roundtrip_snr(mid, zero_low_bins(stft(mid, spec)));
  CHECK(snr_low < 10.0);   // 50 Hz lives in bins 0-1
  CHECK(snr_mid >= 50.0);  // 1 kHz untouched
}

TEST_CASE("zero_low_bins zeroes exactly bins 0 and 1, idempotently") {
  FrameSpec spec;
  Spectrogram s;
  s.spec = spec;
  s.bins = 320;
  s.frames = 3;
  s.data.assign(3 * 320, {1.0, 0.0});
  auto z = zero_low_bins(s);
  double energy = 0.0;
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(z.at(k, 0)) == 0.0);
    CHECK(std::abs(z.at(k, 1)) == 0.0);
    for (int b = 2; b < 320; ++b) CHECK(z.at(k, b) == std::complex<double>(1.0));
  }
  for (const auto& v : z.data) energy += std::norm(v);
  CHECK(energy == doctest::Approx(3.0 * 318.0));
  auto z2 = zero_low_bins(z);
  CHECK(z2.data == z.data);
}

TEST_CASE("amplitude compression maps |z|=1 to 0.15 and inverts exactly") {
  FrameSpec spec;
  Spectrogram s;
  s.spec = spec;
  s.bins = 320;
  s.frames = 2;
  s.data.assign(2 * 320, 0.0);
  Rng rng(5);
  for (auto& z : s.data) z = {rng.normal(), rng.normal()};
  s.data[0] = {1.0, 0.0};
  s.data[1] = 0.0;

  auto c = compress_amplitude(s);
  CHECK(std::abs(c.data[0]) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(std::abs(c.data[1]) == 0.0);
  CHECK(c.compressed);

  auto e = expand_amplitude(c);
  double max_rel = 0.0;
  for (std::size_t i = 2; i < s.data.size(); ++i)
    max_rel = std::max(max_rel,
                       std::abs(e.data[i] - s.data[i]) / std::abs(s.data[i]));
  CHECK(max_rel <= 1e-6);
  CHECK_THROWS_AS(expand_amplitude(e), std::runtime_error);
}

TEST_CASE("spectrogram dump layout") {
  FrameSpec spec;
  Spectrogram s;
  s.spec = spec;
  s.bins = 320;
  s.frames = 1;
  s.data.assign(320, {0.25, -0.5});
  dump_spectrogram("/tmp/sse_test_dump.bin", s);
  std::ifstream is("/tmp/sse_test_dump.bin", std::ios::binary);
  std::uint32_t hdr[4];
  is.read(reinterpret_cast<char*>(hdr), 16);
  CHECK(hdr[0] == 1);
  CHECK(hdr[1] == 320);
  CHECK(hdr[2] == 32000);
  CHECK(hdr[3] == 160);
  float re, im;
  is.read(reinterpret_cast<char*>(&re), 4);
  is.read(reinterpret_cast<char*>(&im), 4);
  CHECK(re == 0.25f);
  CHECK(im == -0.5f);
}
