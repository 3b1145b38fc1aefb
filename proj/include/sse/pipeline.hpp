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

#ifndef SSE_PIPELINE_HPP
#define SSE_PIPELINE_HPP

#include "sse/config.hpp"
#include "sse/scorenet.hpp"

namespace sse {

struct EnhanceResult {
  AudioBuffer audio;
  double latency_ms = 0.0;
};

/// Full inference chain: (48->32 kHz) -> STFT -> low-bin zeroing -> causal
/// AGC -> amplitude compression -> reverse diffusion with the EMA score
/// model -> expansion -> iSTFT -> loudness AGC pass -> peak compressor ->
/// (32->48 kHz). Output rate matches input rate.
EnhanceResult enhance_file(const AudioBuffer& input, ScoreNet& net,
                           const RunConfig& cfg, std::uint64_t seed);

}  // namespace sse

#endif  // SSE_PIPELINE_HPP
