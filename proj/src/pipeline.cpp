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

#include "sse/pipeline.hpp"

#include <stdexcept>

#include "sse/agc.hpp"
#include "sse/diffusion.hpp"

namespace sse {

EnhanceResult enhance_file(const AudioBuffer& input, ScoreNet& net,
                           const RunConfig& cfg, std::uint64_t seed) {
  const int in_rate = input.rate;
  AudioBuffer work = input;
  if (in_rate == 48000) work = resample(work, 32000);
  if (work.rate != cfg.io.rate)
    throw std::runtime_error("enhance: unsupported input rate " +
                             std::to_string(in_rate));

  const FrameSpec spec = cfg.io.frame_spec();
  Spectrogram y = zero_low_bins(stft(work.samples, spec));
  y = apply_agc(y, cfg.agc);
  y = compress_amplitude(std::move(y), cfg.train.amp_a, cfg.train.amp_c);

  Rng rng(mix_seed(seed, 0xe4a));
  ScoreFn score = [&](const std::vector<std::complex<double>>& x_t,
                      const std::vector<std::complex<double>>& yy, double t) {
    return net.score(x_t, yy, y.frames, y.bins, t, /*use_ema=*/true);
  };
  Spectrogram x = y.frames > 0 ? enhance_spectrogram(y, score, cfg.sde, rng)
                               : y;

  x = expand_amplitude(std::move(x), cfg.train.amp_a, cfg.train.amp_c);
  AudioBuffer enhanced{istft(x), cfg.io.rate};
  if (enhanced.samples.size() > work.samples.size())
    enhanced.samples.resize(work.samples.size());

  // Loudness pass: the same AGC machinery on the enhanced signal, then a
  // limiter-like compressor against clipping.
  Spectrogram loud = apply_agc(stft(enhanced.samples, spec), cfg.agc);
  AudioBuffer leveled{istft(loud), cfg.io.rate};
  leveled = compress_peaks(leveled, cfg.io.compressor_threshold_db,
                           cfg.io.compressor_ratio, cfg.io.compressor_attack_ms,
                           cfg.io.compressor_release_ms);

  if (in_rate == 48000) leveled = resample(leveled, 48000);
  return {std::move(leveled), spec.latency_ms()};
}

}  // namespace sse
