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

#include "sse/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace sse {

namespace {
constexpr double kNormFloor = 1e-8;
}

FrameSpec::FrameSpec(int rate_, int window_len_, int hop_)
    : rate(rate_), window_len(window_len_), hop(hop_), fft_len(window_len_) {
  if (hop <= 0 || hop >= window_len)
    throw std::runtime_error("FrameSpec: need 0 < hop < window_len");
  if (1000.0 * window_len / rate >= 20.0)
    throw std::runtime_error("FrameSpec: latency budget exceeded: " +
                             std::to_string(1000.0 * window_len / rate) +
                             " ms >= 20 ms");
  window.resize(window_len);
  for (int n = 0; n < window_len; ++n)  // periodic Hann
    window[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / window_len);
}

struct RealFft::Impl {
  fftw_plan fwd = nullptr, inv = nullptr;
  double* time = nullptr;
  fftw_complex* freq = nullptr;
};

RealFft::RealFft(int n) : n_(n), impl_(new Impl) {
  impl_->time = fftw_alloc_real(n);
  impl_->freq = fftw_alloc_complex(n / 2 + 1);
  impl_->fwd =
      fftw_plan_dft_r2c_1d(n, impl_->time, impl_->freq, FFTW_ESTIMATE);
  impl_->inv =
      fftw_plan_dft_c2r_1d(n, impl_->freq, impl_->time, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->time);
  fftw_free(impl_->freq);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
  for (int i = 0; i < n_; ++i) impl_->time[i] = in[i];
  fftw_execute(impl_->fwd);
  for (int i = 0; i < n_ / 2 + 1; ++i)
    out[i] = {impl_->freq[i][0], impl_->freq[i][1]};
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  for (int i = 0; i < n_ / 2 + 1; ++i) {
    impl_->freq[i][0] = in[i].real();
    impl_->freq[i][1] = in[i].imag();
  }
  fftw_execute(impl_->inv);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] = impl_->time[i] * scale;
}

StftStream::StftStream(const FrameSpec& spec)
    : spec_(spec), fft_(spec.fft_len) {}

std::vector<std::vector<std::complex<double>>> StftStream::push(
    const double* samples, std::size_t count) {
  buf_.insert(buf_.end(), samples, samples + count);
  std::vector<std::vector<std::complex<double>>> out;
  std::vector<double> windowed(spec_.window_len);
  std::size_t start = 0;
  while (buf_.size() - start >= static_cast<std::size_t>(spec_.window_len)) {
    for (int n = 0; n < spec_.window_len; ++n)
      windowed[n] = buf_[start + n] * spec_.window[n];
    std::vector<std::complex<double>> frame(spec_.bins());
    fft_.forward(windowed.data(), frame.data());
    out.push_back(std::move(frame));
    start += spec_.hop;
  }
  buf_.erase(buf_.begin(), buf_.begin() + start);
  return out;
}

IstftStream::IstftStream(const FrameSpec& spec)
    : spec_(spec), fft_(spec.fft_len), frame_time_(spec.fft_len) {}

std::vector<double> IstftStream::emit_ready(long long ready_end) {
  std::vector<double> out;
  if (ready_end <= base_) return out;
  const std::size_t count = static_cast<std::size_t>(ready_end - base_);
  if (acc_.size() < count) {
    acc_.resize(count, 0.0);
    norm_.resize(count, 0.0);
  }
  out.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = acc_[i] / std::max(norm_[i], kNormFloor);
  acc_.erase(acc_.begin(), acc_.begin() + count);
  norm_.erase(norm_.begin(), norm_.begin() + count);
  base_ = ready_end;
  return out;
}

std::vector<double> IstftStream::push(
    const std::vector<std::complex<double>>& frame) {
  if (static_cast<int>(frame.size()) != spec_.bins())
    throw std::runtime_error("IstftStream: wrong frame size");
  fft_.inverse(frame.data(), frame_time_.data());
  const long long off = next_frame_ * spec_.hop;
  const std::size_t need = static_cast<std::size_t>(off - base_) +
                           static_cast<std::size_t>(spec_.window_len);
  if (acc_.size() < need) {
    acc_.resize(need, 0.0);
    norm_.resize(need, 0.0);
  }
  for (int n = 0; n < spec_.window_len; ++n) {
    const std::size_t idx = static_cast<std::size_t>(off - base_) + n;
    acc_[idx] += frame_time_[n] * spec_.window[n];
    norm_[idx] += spec_.window[n] * spec_.window[n];
  }
  ++next_frame_;
  // Samples before the start of the next frame can no longer change.
  return emit_ready(next_frame_ * spec_.hop);
}

std::vector<double> IstftStream::finish() {
  return emit_ready(base_ + static_cast<long long>(acc_.size()));
}

Spectrogram stft(const std::vector<double>& signal, const FrameSpec& spec) {
  Spectrogram s;
  s.spec = spec;
  s.bins = spec.bins();
  StftStream stream(spec);
  auto frames = stream.push(signal.data(), signal.size());
  s.frames = static_cast<int>(frames.size());
  s.data.reserve(static_cast<std::size_t>(s.frames) * s.bins);
  for (auto& f : frames) s.data.insert(s.data.end(), f.begin(), f.end());
  return s;
}

std::vector<double> istft(const Spectrogram& s) {
  IstftStream stream(s.spec);
  std::vector<double> out;
  std::vector<std::complex<double>> frame(s.bins);
  for (int k = 0; k < s.frames; ++k) {
    for (int b = 0; b < s.bins; ++b) frame[b] = s.at(k, b);
    auto chunk = stream.push(frame);
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
  auto tail = stream.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

Spectrogram zero_low_bins(Spectrogram s) {
  for (int k = 0; k < s.frames; ++k) {
    s.at(k, 0) = 0.0;
    if (s.bins > 1) s.at(k, 1) = 0.0;
  }
  return s;
}

Spectrogram compress_amplitude(Spectrogram s, double a, double c) {
  if (s.compressed)
    throw std::runtime_error("compress_amplitude: already compressed");
  for (auto& z : s.data) {
    const double m = std::abs(z);
    z = (m == 0.0) ? std::complex<double>(0.0)
                   : z * (c * std::pow(m, a) / m);
  }
  s.compressed = true;
  return s;
}

Spectrogram expand_amplitude(Spectrogram s, double a, double c) {
  if (!s.compressed)
    throw std::runtime_error("expand_amplitude: not compressed");
  for (auto& z : s.data) {
    const double m = std::abs(z);
    z = (m == 0.0) ? std::complex<double>(0.0)
                   : z * (std::pow(m / c, 1.0 / a) / m);
  }
  s.compressed = false;
  return s;
}

void dump_spectrogram(const std::string& path, const Spectrogram& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dump_spectrogram: cannot open " + path);
  auto wr = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  wr(static_cast<std::uint32_t>(s.frames));
  wr(static_cast<std::uint32_t>(s.bins));
  wr(static_cast<std::uint32_t>(s.spec.rate));
  wr(static_cast<std::uint32_t>(s.spec.hop));
  for (const auto& z : s.data) {
    float re = static_cast<float>(z.real()), im = static_cast<float>(z.imag());
    os.write(reinterpret_cast<const char*>(&re), 4);
    os.write(reinterpret_cast<const char*>(&im), 4);
  }
}

}  // namespace sse
