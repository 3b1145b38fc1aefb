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

#include "sse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sse {

double si_sdr(const std::vector<double>& reference,
              const std::vector<double>& degraded) {
  const std::size_t n = std::min(reference.size(), degraded.size());
  if (n == 0) throw std::runtime_error("si_sdr: empty input");
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += degraded[i] * reference[i];
    ref_energy += reference[i] * reference[i];
  }
  if (ref_energy <= 0.0) throw std::runtime_error("si_sdr: silent reference");
  const double alpha = dot / ref_energy;
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = alpha * reference[i];
    const double e = degraded[i] - s;
    sig += s * s;
    err += e * e;
  }
  if (err <= 0.0 || sig / err >= 1e6) return 60.0;
  return std::min(60.0, 10.0 * std::log10(sig / err));
}

double log_spectral_distance(const std::vector<double>& reference,
                             const std::vector<double>& degraded,
                             const FrameSpec& spec) {
  Spectrogram r = stft(reference, spec);
  Spectrogram d = stft(degraded, spec);
  const int frames = std::min(r.frames, d.frames);
  if (frames == 0) throw std::runtime_error("log_spectral_distance: too short");
  const double eps = 1e-10;
  double total = 0.0;
  for (int k = 0; k < frames; ++k) {
    double acc = 0.0;
    int n = 0;
    for (int b = 2; b < r.bins; ++b) {
      const double lr = 20.0 * std::log10(std::abs(r.at(k, b)) + eps);
      const double ld = 20.0 * std::log10(std::abs(d.at(k, b)) + eps);
      acc += (lr - ld) * (lr - ld);
      ++n;
    }
    total += std::sqrt(acc / n);
  }
  return total / frames;
}

}  // namespace sse
