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

#ifndef SSE_AGC_HPP
#define SSE_AGC_HPP

#include <deque>
#include <vector>

#include "sse/audio.hpp"
#include "sse/stft.hpp"

namespace sse {

struct AgcConfig {
  double tau = 0.8;             // SPP threshold
  double hold_ms = 100.0;       // consecutive-activity requirement
  int spp_smooth_frames = 10;   // causal moving average on SPP
  double ramp_time_ms = 50.0;   // exponential ramp toward a new max
  double xi_h1_db = 15.0;       // fixed a-priori SNR of the SPP model
  double psd_alpha = 0.8;       // noise-PSD smoothing
  int psd_init_frames = 5;      // frames assumed speech-absent at start
};

/// Single-stream causal AGC: SPP-based VAD gates the start of gain tracking;
/// afterwards the divisor is the running max of per-frame frequency-mean
/// magnitude, smoothed by a one-pole exponential ramp.
class Agc {
 public:
  Agc(const AgcConfig& cfg, const FrameSpec& spec);

  // Per-bin SPP posterior averaged over bins >= 2; updates the noise PSD.
  double estimate_spp(const std::vector<double>& mag);
  // Smoothed-SPP threshold with hold; true once activity persisted hold_ms.
  bool update_vad(double p);
  // Gain for the current frame (1 before tracking starts).
  double track_gain(const std::vector<double>& mag, bool active);
  // One frame of the full chain; returns the gain applied.
  double process_frame(std::vector<std::complex<double>>& frame);

  bool tracking() const { return tracking_; }
  double current_max() const { return current_max_; }
  int hold_frames_required() const { return hold_frames_; }

 private:
  AgcConfig cfg_;
  FrameSpec spec_;
  std::vector<double> noise_psd_;
  std::vector<double> p_running_;  // per-bin smoothed SPP (stagnation guard)
  std::deque<double> spp_window_;
  int frames_seen_ = 0;
  int hold_counter_ = 0;
  int hold_frames_ = 0;
  bool tracking_ = false;
  double current_max_ = 0.0;  // ramp target
  double ramped_max_ = 0.0;   // current divisor
  double ramp_coeff_ = 0.0;
};

/// Applies causal AGC to an uncompressed spectrogram (frame k gain depends on
/// frames <= k only).
Spectrogram apply_agc(const Spectrogram& s, const AgcConfig& cfg);

/// Feed-forward peak compressor with one-pole attack/release envelope.
AudioBuffer compress_peaks(const AudioBuffer& in, double threshold_db,
                           double ratio, double attack_ms, double release_ms);

}  // namespace sse

#endif  // SSE_AGC_HPP
