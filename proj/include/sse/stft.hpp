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

#ifndef SSE_STFT_HPP
#define SSE_STFT_HPP

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace sse {

/// Frame geometry of the processing front end. Frame k covers samples
/// [k*hop, k*hop + window_len); algorithmic latency = window_len / rate.
struct FrameSpec {
  int rate = 32000;
  int window_len = 638;
  int hop = 160;
  int fft_len = 638;

  FrameSpec(int rate_ = 32000, int window_len_ = 638, int hop_ = 160);

  int bins() const { return fft_len / 2 + 1; }
  double latency_ms() const { return 1000.0 * window_len / rate; }
  std::vector<double> window;  // periodic Hann, length window_len
};

struct Spectrogram {
  std::vector<std::complex<double>> data;  // row-major [frames x bins]
  int frames = 0;
  int bins = 320;
  FrameSpec spec;
  bool compressed = false;

  std::complex<double>& at(int frame, int bin) {
    return data[static_cast<std::size_t>(frame) * bins + bin];
  }
  const std::complex<double>& at(int frame, int bin) const {
    return data[static_cast<std::size_t>(frame) * bins + bin];
  }
};

class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // time (n reals) -> n/2+1 complex bins
  void forward(const double* in, std::complex<double>* out);
  // n/2+1 complex bins -> n reals (normalized by 1/n)
  void inverse(const std::complex<double>* in, double* out);
  int size() const { return n_; }

 private:
  int n_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Streaming analysis; emits frame k once sample k*hop + window_len - 1
/// arrives. Matches the batch stft() bit for bit.
class StftStream {
 public:
  explicit StftStream(const FrameSpec& spec);
  // Returns zero or more complete frames (each spec.bins() long).
  std::vector<std::vector<std::complex<double>>> push(
      const double* samples, std::size_t count);

 private:
  FrameSpec spec_;
  RealFft fft_;
  std::vector<double> buf_;
};

/// Streaming weighted overlap-add synthesis with per-sample normalization by
/// the summed squared window.
class IstftStream {
 public:
  explicit IstftStream(const FrameSpec& spec);
  std::vector<double> push(const std::vector<std::complex<double>>& frame);
  std::vector<double> finish();

 private:
  std::vector<double> emit_ready(long long ready_end);
  FrameSpec spec_;
  RealFft fft_;
  std::vector<double> acc_, norm_;
  long long base_ = 0;       // absolute sample index of acc_[0]
  long long next_frame_ = 0;
  std::vector<double> frame_time_;
};

Spectrogram stft(const std::vector<double>& signal, const FrameSpec& spec);
std::vector<double> istft(const Spectrogram& s);

/// Zeroes bins 0 and 1 of every frame (DC / low-frequency removal).
Spectrogram zero_low_bins(Spectrogram s);

/// z -> c * |z|^a * exp(i angle z), and its exact inverse.
Spectrogram compress_amplitude(Spectrogram s, double a = 0.5, double c = 0.15);
Spectrogram expand_amplitude(Spectrogram s, double a = 0.5, double c = 0.15);

/// Flat binary dump: header (frames, bins, rate, hop as LE u32) then
/// interleaved (re, im) float32, row-major by frame.
void dump_spectrogram(const std::string& path, const Spectrogram& s);

}  // namespace sse

#endif  // SSE_STFT_HPP
