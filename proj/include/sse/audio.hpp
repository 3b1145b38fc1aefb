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

#ifndef SSE_AUDIO_HPP
#define SSE_AUDIO_HPP

#include <string>
#include <vector>

namespace sse {

/// Mono audio at a known sample rate; samples nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int rate = 32000;
};

// WAV RIFF I/O. Read handles PCM16/PCM24/float32, mono or multichannel
// (downmixed by channel mean). Write emits 16-bit PCM with saturation.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& buffer);

// Rational-rate conversion between 48 kHz and 32 kHz (polyphase windowed-sinc
// FIR). Output length = round(n * target / source).
AudioBuffer resample(const AudioBuffer& buffer, int target_rate);

// Kaiser-windowed-sinc lowpass, linear phase, unity DC gain. cutoff_hz is the
// -6 dB point; transition_hz the full passband-to-stopband width;
// atten_db the stopband attenuation. Used by the resampler and codec_sim.
std::vector<double> design_lowpass(double cutoff_hz, double transition_hz,
                                   double atten_db, double sample_rate);

// Zero-phase-compensated FIR filtering (delay of (taps-1)/2 removed),
// output truncated to input length.
std::vector<double> fir_filter_aligned(const std::vector<double>& x,
                                       const std::vector<double>& h);

}  // namespace sse

#endif  // SSE_AUDIO_HPP
