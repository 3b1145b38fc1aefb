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

#ifndef SSE_TRAINING_HPP
#define SSE_TRAINING_HPP

#include <map>
#include <string>
#include <vector>

#include "sse/corruption.hpp"
#include "sse/diffusion.hpp"
#include "sse/scorenet.hpp"
#include "sse/stft.hpp"

namespace sse {

struct TrainConfig {
  int batch_size = 8;
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double ema_decay = 0.999;
  int steps = 1000;
  std::uint64_t seed = 0;
  int crop_frames = 128;
  int log_every = 10;
  int ckpt_every = 0;  // 0: final only
  double amp_a = 0.5, amp_c = 0.15;  // spectrogram amplitude transform
};

/// Clean/corrupted spectrogram pair in the compressed domain, jointly scaled
/// by the y-derived unit-scale gain.
struct TrainingPair {
  std::vector<std::complex<double>> x0, y;
  int frames = 0, bins = 0;
  double norm_gain = 1.0;
};

TrainingPair make_training_pair(const AudioBuffer& clean,
                                const CorruptionChain& chain,
                                const Assets& assets, std::uint64_t seed,
                                const TrainConfig& cfg, const FrameSpec& spec);

/// sigma^2-weighted denoising score matching loss, evaluated with an
/// arbitrary score callback (used with oracles in tests).
double dsm_loss(const std::vector<TrainingPair>& batch, const ScoreFn& score,
                const SdeParams& sde, Rng& rng);

/// Same loss through the network graph; accumulates parameter gradients
/// (batch mean). Draws (t, z) identically to dsm_loss given the same rng.
double dsm_loss_backward(ScoreNet& net, const std::vector<TrainingPair>& batch,
                         const SdeParams& sde, Rng& rng);

struct AdamState {
  std::map<std::string, std::pair<nn::Tensor, nn::Tensor>> moments;
  long long step = 0;
};

void adam_step(ScoreNet& net, AdamState& state, const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> losses;  // per step
  std::string checkpoint_path;
};

/// Full loop: sample pairs -> loss/grads -> Adam -> EMA; logs
/// "step <n> loss <float>" lines to metrics_path (empty: no log).
TrainResult train(const std::vector<std::string>& clean_paths,
                  const ChainGrammar& grammar, const Assets& assets,
                  const TrainConfig& tcfg, const SdeParams& sde,
                  const ScoreNetConfig& ncfg, const FrameSpec& spec,
                  const std::string& checkpoint_path,
                  const std::string& metrics_path);

}  // namespace sse

#endif  // SSE_TRAINING_HPP
