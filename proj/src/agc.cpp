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

#include "sse/agc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sse {

namespace {
constexpr double kPsdFloor = 1e-10;
}

Agc::Agc(const AgcConfig& cfg, const FrameSpec& spec)
    : cfg_(cfg), spec_(spec) {
  if (cfg.tau <= 0.0 || cfg.tau >= 1.0)
    throw std::runtime_error("Agc: tau out of (0,1)");
  if (cfg.psd_alpha <= 0.0 || cfg.psd_alpha >= 1.0)
    throw std::runtime_error("Agc: psd_alpha out of (0,1)");
  if (cfg.hold_ms <= 0.0) throw std::runtime_error("Agc: hold_ms <= 0");
  noise_psd_.assign(spec.bins(), 0.0);
  p_running_.assign(spec.bins(), 0.0);
  const double frame_ms = 1000.0 * spec.hop / spec.rate;
  hold_frames_ = static_cast<int>(std::ceil(cfg.hold_ms / frame_ms));
  const double ramp_frames = std::max(cfg.ramp_time_ms / frame_ms, 0.0);
  ramp_coeff_ = ramp_frames > 0.0 ? std::exp(-1.0 / ramp_frames) : 0.0;
}

double Agc::estimate_spp(const std::vector<double>& mag) {
  const int bins = spec_.bins();
  if (static_cast<int>(mag.size()) != bins)
    throw std::runtime_error("Agc: wrong magnitude vector size");
  if (frames_seen_ < cfg_.psd_init_frames) {
    // Initialization period: assume speech absent, average the periodogram.
    for (int b = 0; b < bins; ++b) {
      const double pw = mag[b] * mag[b];
      noise_psd_[b] =
          (noise_psd_[b] * frames_seen_ + pw) / (frames_seen_ + 1);
    }
    ++frames_seen_;
    return 0.0;
  }
  ++frames_seen_;

  const double xi = std::pow(10.0, cfg_.xi_h1_db / 10.0);
  const double xi_gain = xi / (1.0 + xi);
  double sum_p = 0.0;
  int n_used = 0;
  for (int b = 0; b < bins; ++b) {
    const double psd = std::max(noise_psd_[b], kPsdFloor);
    const double snr_post = mag[b] * mag[b] / psd;
    double p = 1.0 / (1.0 + (1.0 + xi) * std::exp(-snr_post * xi_gain));
    if (b >= 2) {
      sum_p += p;
      ++n_used;
    }
    // Stagnation safeguard: cap p in the PSD update when it saturates.
    p_running_[b] = 0.9 * p_running_[b] + 0.1 * p;
    double p_upd = (p_running_[b] > 0.99) ? std::min(p, 0.99) : p;
    const double pw = mag[b] * mag[b];
    const double target = (1.0 - p_upd) * pw + p_upd * noise_psd_[b];
    noise_psd_[b] = std::max(
        cfg_.psd_alpha * noise_psd_[b] + (1.0 - cfg_.psd_alpha) * target,
        kPsdFloor);
  }
  return n_used > 0 ? sum_p / n_used : 0.0;
}

bool Agc::update_vad(double p) {
  spp_window_.push_back(p);
  if (static_cast<int>(spp_window_.size()) > cfg_.spp_smooth_frames)
    spp_window_.pop_front();
  double smoothed = 0.0;
  for (double v : spp_window_) smoothed += v;
  smoothed /= spp_window_.size();
  if (smoothed > cfg_.tau)
    ++hold_counter_;
  else
    hold_counter_ = 0;
  return hold_counter_ >= hold_frames_;
}

double Agc::track_gain(const std::vector<double>& mag, bool active) {
  if (active) tracking_ = true;
  if (!tracking_) return 1.0;
  double m = 0.0;
  for (double v : mag) m += v;
  m /= mag.size();
  if (!(current_max_ > 0.0)) {
    // First tracked frame: jump straight to its level.
    current_max_ = m;
    ramped_max_ = m;
  } else {
    if (m > current_max_) current_max_ = m;
    ramped_max_ = current_max_ + (ramped_max_ - current_max_) * ramp_coeff_;
  }
  return ramped_max_ > 0.0 ? 1.0 / ramped_max_ : 1.0;
}

double Agc::process_frame(std::vector<std::complex<double>>& frame) {
  std::vector<double> mag(frame.size());
  for (std::size_t b = 0; b < frame.size(); ++b) mag[b] = std::abs(frame[b]);
  const double p = estimate_spp(mag);
  const bool active = update_vad(p);
  const double gain = track_gain(mag, active);
  for (auto& z : frame) z *= gain;
  return gain;
}

Spectrogram apply_agc(const Spectrogram& s, const AgcConfig& cfg) {
  if (s.compressed)
    throw std::runtime_error("apply_agc: expects uncompressed spectrogram");
  Spectrogram out = s;
  Agc agc(cfg, s.spec);
  std::vector<std::complex<double>> frame(s.bins);
  for (int k = 0; k < s.frames; ++k) {
    for (int b = 0; b < s.bins; ++b) frame[b] = s.at(k, b);
    agc.process_frame(frame);
    for (int b = 0; b < s.bins; ++b) out.at(k, b) = frame[b];
  }
  return out;
}

AudioBuffer compress_peaks(const AudioBuffer& in, double threshold_db,
                           double ratio, double attack_ms, double release_ms) {
  if (ratio < 1.0) throw std::runtime_error("compress_peaks: ratio < 1");
  AudioBuffer out;
  out.rate = in.rate;
  out.samples.resize(in.samples.size());
  auto coeff = [&](double ms) {
    const double n = ms * in.rate / 1000.0;
    return n > 0.0 ? std::exp(-1.0 / n) : 0.0;
  };
  const double a_att = coeff(attack_ms);
  const double a_rel = coeff(release_ms);
  double env = 0.0;
  for (std::size_t n = 0; n < in.samples.size(); ++n) {
    const double level = std::abs(in.samples[n]);
    const double a = level > env ? a_att : a_rel;
    env = a * env + (1.0 - a) * level;
    double gain_db = 0.0;
    const double env_db = 20.0 * std::log10(std::max(env, 1e-12));
    if (env_db > threshold_db)
      gain_db = threshold_db + (env_db - threshold_db) / ratio - env_db;
    out.samples[n] = in.samples[n] * std::pow(10.0, gain_db / 20.0);
  }
  return out;
}

}  // namespace sse
