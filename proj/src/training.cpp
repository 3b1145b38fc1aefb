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

#include "sse/training.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sse/checkpoint.hpp"

namespace sse {

TrainingPair make_training_pair(const AudioBuffer& clean,
                                const CorruptionChain& chain,
                                const Assets& assets, std::uint64_t seed,
                                const TrainConfig& cfg, const FrameSpec& spec) {
  AudioBuffer corrupted = apply_chain(clean, chain, assets, seed);
  Spectrogram sx = zero_low_bins(stft(clean.samples, spec));
  Spectrogram sy = zero_low_bins(stft(corrupted.samples, spec));
  if (sx.frames < cfg.crop_frames)
    throw std::runtime_error("make_training_pair: clean too short for crop (" +
                             std::to_string(sx.frames) + " < " +
                             std::to_string(cfg.crop_frames) + " frames)");

  // Unit-scale normalization: offline max of frame-mean magnitude of y, the
  // batch analogue of the causal AGC, shared by both spectrograms and
  // applied before amplitude compression.
  double max_mean = 0.0;
  for (int k = 0; k < sy.frames; ++k) {
    double m = 0.0;
    for (int b = 0; b < sy.bins; ++b) m += std::abs(sy.at(k, b));
    max_mean = std::max(max_mean, m / sy.bins);
  }
  const double gain = max_mean > 0.0 ? 1.0 / max_mean : 1.0;
  for (auto& z : sx.data) z *= gain;
  for (auto& z : sy.data) z *= gain;

  sx = compress_amplitude(std::move(sx), cfg.amp_a, cfg.amp_c);
  sy = compress_amplitude(std::move(sy), cfg.amp_a, cfg.amp_c);

  Rng rng(mix_seed(seed, 0xc809));
  const int max_start = sx.frames - cfg.crop_frames;
  const int start = max_start > 0 ? static_cast<int>(rng.index(max_start + 1)) : 0;

  TrainingPair pair;
  pair.frames = cfg.crop_frames;
  pair.bins = sx.bins;
  pair.norm_gain = gain;
  pair.x0.resize(static_cast<std::size_t>(pair.frames) * pair.bins);
  pair.y.resize(pair.x0.size());
  for (int k = 0; k < pair.frames; ++k)
    for (int b = 0; b < pair.bins; ++b) {
      pair.x0[static_cast<std::size_t>(k) * pair.bins + b] =
          sx.at(start + k, b);
      pair.y[static_cast<std::size_t>(k) * pair.bins + b] = sy.at(start + k, b);
    }
  return pair;
}

namespace {

struct Draw {
  double t;
  double sigma;
  std::vector<std::complex<double>> x_t, z;
};

Draw draw_item(const TrainingPair& item, const SdeParams& sde, Rng& rng) {
  Draw d;
  d.t = rng.uniform(sde.t_eps, sde.t_horizon);
  d.sigma = perturbation_std(d.t, sde);
  auto [xt, z] = sample_forward(item.x0, item.y, d.t, sde, rng);
  d.x_t = std::move(xt);
  d.z = std::move(z);
  return d;
}

}  // namespace

double dsm_loss(const std::vector<TrainingPair>& batch, const ScoreFn& score,
                const SdeParams& sde, Rng& rng) {
  if (batch.empty()) throw std::runtime_error("dsm_loss: empty batch");
  double total = 0.0;
  for (const auto& item : batch) {
    Draw d = draw_item(item, sde, rng);
    auto s = score(d.x_t, item.y, d.t);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      acc += std::norm(d.sigma * s[i] + d.z[i]);
    total += acc / s.size();
  }
  const double loss = total / batch.size();
  if (!std::isfinite(loss)) throw std::runtime_error("dsm_loss: nonfinite");
  return loss;
}

double dsm_loss_backward(ScoreNet& net, const std::vector<TrainingPair>& batch,
                         const SdeParams& sde, Rng& rng) {
  if (batch.empty())
    throw std::runtime_error("dsm_loss_backward: empty batch");
  double total = 0.0;
  std::size_t item_idx = 0;
  for (const auto& item : batch) {
    Draw d = draw_item(item, sde, rng);
    auto out = net.forward(d.x_t, item.y, item.frames, item.bins, d.t);
    // Pack z as a [2,T,F] (re, im) tensor matching the network output.
    nn::Tensor zt({2, item.frames, item.bins});
    for (int k = 0; k < item.frames; ++k)
      for (int b = 0; b < item.bins; ++b) {
        const auto& z = d.z[static_cast<std::size_t>(k) * item.bins + b];
        zt.at3(0, k, b) = z.real();
        zt.at3(1, k, b) = z.imag();
      }
    auto loss = nn::dsm_residual_loss(out, zt, d.sigma);
    if (!std::isfinite(loss->v.d[0]))
      throw std::runtime_error("dsm_loss_backward: nonfinite loss at item " +
                               std::to_string(item_idx));
    // Batch-mean scaling folded into the seed gradient.
    loss->ensure_grad();
    total += loss->v.d[0];
    auto scaled = nn::make_var(nn::Tensor({1}), true);
    scaled->v.d[0] = loss->v.d[0] / batch.size();
    scaled->prev = {loss};
    const double inv_b = 1.0 / batch.size();
    scaled->back = [inv_b](nn::Var& self) {
      self.prev[0]->g.d[0] += self.g.d[0] * inv_b;
    };
    nn::backward(scaled);
    ++item_idx;
  }
  return total / batch.size();
}

void adam_step(ScoreNet& net, AdamState& state, const TrainConfig& cfg) {
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (auto& [name, p] : net.params()) {
    if (!p->requires_grad) continue;
    p->ensure_grad();
    auto& [m, v] = state.moments[name];
    if (m.d.size() != p->v.d.size()) {
      m = nn::Tensor(p->v.shape);
      v = nn::Tensor(p->v.shape);
    }
    for (std::size_t i = 0; i < p->v.d.size(); ++i) {
      const double g = p->g.d[i];
      m.d[i] = b1 * m.d[i] + (1.0 - b1) * g;
      v.d[i] = b2 * v.d[i] + (1.0 - b2) * g * g;
      const double mhat = m.d[i] / bc1;
      const double vhat = v.d[i] / bc2;
      p->v.d[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

TrainResult train(const std::vector<std::string>& clean_paths,
                  const ChainGrammar& grammar, const Assets& assets,
                  const TrainConfig& tcfg, const SdeParams& sde,
                  const ScoreNetConfig& ncfg, const FrameSpec& spec,
                  const std::string& checkpoint_path,
                  const std::string& metrics_path) {
  if (clean_paths.empty()) throw std::runtime_error("train: empty dataset");
  std::vector<AudioBuffer> clean;
  clean.reserve(clean_paths.size());
  for (const auto& p : clean_paths) {
    AudioBuffer b = read_wav(p);
    if (b.rate == 48000) b = resample(b, 32000);
    if (b.rate != 32000)
      throw std::runtime_error("train: unsupported rate in " + p);
    clean.push_back(std::move(b));
  }

  ScoreNet net(ncfg, tcfg.seed);
  AdamState adam;
  Rng rng(mix_seed(tcfg.seed, 0x7121));

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path);
    if (!metrics) throw std::runtime_error("train: cannot open metrics file");
  }

  TrainResult result;
  result.checkpoint_path = checkpoint_path;
  for (int step = 0; step < tcfg.steps; ++step) {
    std::vector<TrainingPair> batch;
    batch.reserve(tcfg.batch_size);
    for (int i = 0; i < tcfg.batch_size; ++i) {
      const auto& utt = clean[rng.index(clean.size())];
      const std::uint64_t item_seed = rng.next_u64();
      auto chain = sample_chain(grammar, assets, item_seed);
      batch.push_back(
          make_training_pair(utt, chain, assets, item_seed, tcfg, spec));
    }
    net.zero_grads();
    double loss;
    try {
      loss = dsm_loss_backward(net, batch, sde, rng);
    } catch (const std::exception&) {
      if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, net);
      throw;
    }
    adam_step(net, adam, tcfg);
    net.ema_update(tcfg.ema_decay);
    result.losses.push_back(loss);
    if (metrics.is_open() &&
        (step % std::max(tcfg.log_every, 1) == 0 || step + 1 == tcfg.steps))
      metrics << "step " << step << " loss " << loss << "\n";
    if (tcfg.ckpt_every > 0 && (step + 1) % tcfg.ckpt_every == 0 &&
        !checkpoint_path.empty())
      save_checkpoint(checkpoint_path, net);
  }
  if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, net);
  return result;
}

}  // namespace sse
