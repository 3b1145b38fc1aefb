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

#ifndef SSE_SCORENET_HPP
#define SSE_SCORENET_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sse/nn/ops.hpp"

namespace sse {

struct ScoreNetConfig {
  int base_channels = 16;
  std::vector<int> channel_multipliers = {1, 2, 2};
  int resblocks_per_resolution = 1;
  int time_kernel = 3;
  int freq_kernel = 3;
  int groups = 4;
  int embed_dim = 32;
  nn::PadMode pad = nn::PadMode::kCausal;

  int levels() const { return static_cast<int>(channel_multipliers.size()); }
  std::string digest() const;  // hex config fingerprint for checkpoints
};

/// Causal encoder-decoder score model over complex spectrograms. Real and
/// imaginary parts of (x_t, y) enter as 4 channels; the output 2 channels are
/// reinterpreted as the complex score. No attention, no progressive growing.
class ScoreNet {
 public:
  ScoreNet(const ScoreNetConfig& cfg, std::uint64_t seed);

  // Builds the autograd graph; input matrices are row-major [frames x bins].
  nn::VarPtr forward(const std::vector<std::complex<double>>& x_t,
                     const std::vector<std::complex<double>>& y, int frames,
                     int bins, double t);

  // Inference entry point; use_ema selects the EMA shadow weights.
  std::vector<std::complex<double>> score(
      const std::vector<std::complex<double>>& x_t,
      const std::vector<std::complex<double>>& y, int frames, int bins,
      double t, bool use_ema = false);

  const ScoreNetConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, nn::VarPtr>>& params() { return params_; }
  std::map<std::string, nn::Tensor>& ema() { return ema_; }
  void reset_ema_to_params();
  void ema_update(double decay);
  void zero_grads();

  std::size_t param_count() const;
  std::string describe() const;

 private:
  nn::VarPtr param(const std::string& name) const;
  nn::VarPtr resblock(const nn::VarPtr& h, const nn::VarPtr& emb,
                      const std::string& prefix);

  ScoreNetConfig cfg_;
  std::vector<std::pair<std::string, nn::VarPtr>> params_;
  std::map<std::string, nn::Tensor> ema_;
  std::vector<double> fourier_freqs_;  // frozen random Fourier frequencies
};

}  // namespace sse

#endif  // SSE_SCORENET_HPP
