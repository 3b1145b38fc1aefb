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

#ifndef SSE_CORRUPTION_HPP
#define SSE_CORRUPTION_HPP

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "sse/audio.hpp"
#include "sse/rng.hpp"

namespace sse {

struct ReverbStage {
  std::string rir_id;
  double drr_db = 0.0;  // direct-to-reverberant ratio adjustment
};
struct NoiseStage {
  std::string noise_id;
  double snr_db = 10.0;
  bool stationary = true;
};
struct ClipStage {
  double threshold = 0.5;
};
struct GainReduceStage {
  double db = -6.0;  // <= 0
};
struct PacketLossStage {
  double loss_rate = 0.1;
  double burst_mean_packets = 2.0;
};
struct CodecStage {
  double bandwidth_hz = 8000.0;
  int bits = 8;
};

using Stage = std::variant<ReverbStage, NoiseStage, ClipStage, GainReduceStage,
                           PacketLossStage, CodecStage>;

struct CorruptionChain {
  std::vector<Stage> stages;
};

/// Parameter range [lo, hi]; degenerate (lo == hi) pins the value.
struct Range {
  double lo = 0.0, hi = 0.0;
};

struct StageTemplate {
  std::string type;  // reverb | noise | clip | gain_reduce | packet_loss | codec
  Range snr_db{0, 20};
  Range clip_threshold{0.1, 0.9};
  Range gain_db{-24, -3};
  Range loss_rate{0.05, 0.3};
  Range burst_mean{1, 4};
  Range bandwidth_hz{3500, 16000};
  Range bits{6, 16};
  Range drr_db{-6, 6};
};

struct ChainCandidate {
  std::vector<StageTemplate> stages;
  double weight = 1.0;
};

struct ChainGrammar {
  std::vector<ChainCandidate> candidates;
};

/// Named noise/RIR audio pools. Built-in synthetic assets cover desk-scale
/// use; manifests of WAV paths extend them.
struct Assets {
  std::map<std::string, AudioBuffer> noises;
  std::map<std::string, AudioBuffer> rirs;

  static Assets builtin(int rate = 32000, std::uint64_t seed = 1234);
  void load_noise_manifest(const std::string& path);
  void load_rir_manifest(const std::string& path);
};

ChainGrammar default_grammar();

CorruptionChain sample_chain(const ChainGrammar& grammar, const Assets& assets,
                             std::uint64_t seed);

AudioBuffer apply_reverb(const AudioBuffer& x, const AudioBuffer& rir,
                         double drr_db = 0.0);
AudioBuffer add_noise(const AudioBuffer& x, const AudioBuffer& noise,
                      double snr_db);
AudioBuffer clip(const AudioBuffer& x, double threshold);
AudioBuffer gain_reduce(const AudioBuffer& x, double db);
AudioBuffer packet_loss(const AudioBuffer& x, double loss_rate,
                        double burst_mean_packets, std::uint64_t rng_seed);
AudioBuffer codec_sim(const AudioBuffer& x, double bandwidth_hz, int bits);

AudioBuffer apply_chain(const AudioBuffer& x, const CorruptionChain& chain,
                        const Assets& assets, std::uint64_t rng_seed);

/// Sidecar metadata: key-value text, one stage per line.
std::string describe_chain(const CorruptionChain& chain, std::uint64_t seed);

}  // namespace sse

#endif  // SSE_CORRUPTION_HPP
