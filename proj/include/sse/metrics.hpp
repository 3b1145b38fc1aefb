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

#ifndef SSE_METRICS_HPP
#define SSE_METRICS_HPP

#include <vector>

#include "sse/stft.hpp"

namespace sse {

/// Scale-invariant signal-to-distortion ratio in dB, capped at +60.
double si_sdr(const std::vector<double>& reference,
              const std::vector<double>& degraded);

/// Log-spectral distance in dB on the 320-bin magnitude grid, excluding the
/// two zeroed low bins.
double log_spectral_distance(const std::vector<double>& reference,
                             const std::vector<double>& degraded,
                             const FrameSpec& spec);

}  // namespace sse

#endif  // SSE_METRICS_HPP
