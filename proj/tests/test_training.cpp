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

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "sse/checkpoint.hpp"
#include "sse/training.hpp"

using namespace sse;
using cvec = std::vector<std::complex<double>>;

namespace {

AudioBuffer speech_like(int n, std::uint64_t seed) {
  // Modulated harmonics: enough structure for nontrivial spectra.
  AudioBuffer b;
  b.rate = 32000;
  b.samples.resize(n);
  Rng rng(seed);
  double ph1 = rng.uniform(0, 6.28), ph2 = rng.uniform(0, 6.28);
  for (int i = 0; i < n; ++i) {
    const double env = 0.5 + 0.5 * std::sin(2 * M_PI * 3.0 * i / 32000.0);
    b.samples[i] = 0.3 * env *
                   (std::sin(2 * M_PI * 220 * i / 32000.0 + ph1) +
                    0.5 * std::sin(2 * M_PI * 660 * i / 32000.0 + ph2) +
                    0.1 * rng.normal());
  }
  return b;
}

TrainingPair random_pair(int frames, int bins, std::uint64_t seed) {
  TrainingPair p;
  p.frames = frames;
  p.bins = bins;
  Rng rng(seed);
  p.x0.resize(static_cast<std::size_t>(frames) * bins);
  p.y.resize(p.x0.size());
  for (auto& z : p.x0) z = 0.1 * rng.complex_normal();
  for (auto& z : p.y) z = 0.1 * rng.complex_normal();
  return p;
}

ScoreNetConfig tiny_net() {
  ScoreNetConfig cfg;
  cfg.base_channels = 4;
  cfg.channel_multipliers = {1, 2};
  cfg.embed_dim = 8;
  cfg.groups = 2;
  return cfg;
}

}  // namespace

TEST_CASE("pair normalization gain comes from the uncompressed corrupted max") {
  TrainConfig cfg;
  cfg.crop_frames = 32;
  FrameSpec spec;
  auto clean = speech_like(8000, 4);
  CorruptionChain chain;
  chain.stages.push_back(GainReduceStage{0.0});  // identity corruption
  Assets assets;
  auto pair = make_training_pair(clean, chain, assets, 1, cfg, spec);
  CHECK(pair.frames == 32);
  CHECK(pair.bins == 320);
  CHECK(pair.x0.size() == 32u * 320u);

  // Oracle: gain = 1 / max_k mean_b |Y[k,b]| on the zeroed, uncompressed STFT.
  auto sy = zero_low_bins(stft(clean.samples, spec));
  double max_mean = 0.0;
  for (int k = 0; k < sy.frames; ++k) {
    double m = 0.0;
    for (int b = 0; b < sy.bins; ++b) m += std::abs(sy.at(k, b));
    max_mean = std::max(max_mean, m / sy.bins);
  }
  CHECK(pair.norm_gain == doctest::Approx(1.0 / max_mean).epsilon(1e-12));

  // Identity corruption: x0 and y coincide bin for bin.
  for (std::size_t i = 0; i < pair.x0.size(); ++i)
    CHECK(std::abs(pair.x0[i] - pair.y[i]) <= 1e-12);

  // The pair lives in the compressed domain: |z| = c (g |orig|)^a.
  // Spot-check one bin against the raw spectrogram over every crop offset.
  TrainConfig cfg2 = cfg;
  cfg2.crop_frames = sy.frames;  // no crop: offset 0
  auto pair2 = make_training_pair(clean, chain, assets, 1, cfg2, spec);
  for (int b = 2; b < 320; b += 37) {
    const double orig = std::abs(sy.at(10, b));
    const double expect = 0.15 * std::pow(pair2.norm_gain * orig, 0.5);
    CHECK(std::abs(pair2.y[10 * 320 + b]) ==
          doctest::Approx(expect).epsilon(1e-9));
  }

  TrainConfig big = cfg;
  big.crop_frames = 10000;
  CHECK_THROWS_AS(make_training_pair(clean, chain, assets, 1, big, spec),
                  std::runtime_error);
}

TEST_CASE("DSM loss is 1 for a zero score and 0 for the oracle score") {
  SdeParams sde;
  std::vector<TrainingPair> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(random_pair(8, 16, 100 + i));

  ScoreFn zero = [](const cvec& x, const cvec&, double) {
    return cvec(x.size(), 0.0);
  };
  Rng r1(9);
  const double l_zero = dsm_loss(batch, zero, sde, r1);
  // E |z|^2 = 1 per bin; 6*128 bins make the estimate tight.
  CHECK(l_zero == doctest::Approx(1.0).epsilon(0.1));

  // Oracle: with x_t = mu + sigma z, s = -(x_t - mu)/sigma^2 cancels z
  // exactly, so the loss vanishes for any draw.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng probe(33 + i);
    const std::vector<TrainingPair> one = {batch[i]};
    const auto& item = batch[i];
    ScoreFn oracle = [&](const cvec& x, const cvec& y, double t) {
      auto mu = perturbation_mean(item.x0, y, t, sde);
      const double s2 = std::pow(perturbation_std(t, sde), 2);
      cvec s(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) s[j] = -(x[j] - mu[j]) / s2;
      return s;
    };
    const double l = dsm_loss(one, oracle, sde, probe);
    CHECK(l <= 1e-18);
  }
}

TEST_CASE("graph loss equals the callback loss for a fresh network") {
  SdeParams sde;
  std::vector<TrainingPair> batch = {random_pair(8, 8, 1),
                                     random_pair(8, 8, 2)};
  ScoreNet net(tiny_net(), 77);  // zero-init output: score identically 0
  Rng r1(123), r2(123);
  ScoreFn zero = [](const cvec& x, const cvec&, double) {
    return cvec(x.size(), 0.0);
  };
  const double l_cb = dsm_loss(batch, zero, sde, r1);
  net.zero_grads();
  const double l_net = dsm_loss_backward(net, batch, sde, r2);
  CHECK(l_net == doctest::Approx(l_cb).epsilon(1e-12));
}

TEST_CASE("Adam: zero gradient is a no-op, first step follows sign(g)") {
  ScoreNet net(tiny_net(), 5);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  AdamState state;
  net.zero_grads();
  auto before = net.params()[1].second->v.d;  // skip frozen embed.freqs
  adam_step(net, state, cfg);
  CHECK(net.params()[1].second->v.d == before);

  // Constant gradient 0.5 on one tensor: first Adam step is
  // -lr * g / (|g| + eps) ~ -lr.
  auto& p = net.params()[1].second;
  p->zero_grad();
  const double w0 = p->v.d[0];
  for (auto& g : p->g.d) g = 0.5;
  AdamState s2;
  adam_step(net, s2, cfg);
  const double expect = w0 - cfg.lr * 0.5 / (0.5 + cfg.adam_eps);
  CHECK(p->v.d[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("EMA shadow follows a geometric series") {
  ScoreNet net(tiny_net(), 8);
  net.reset_ema_to_params();
  // Bump one live weight, then run k EMA updates.
  auto& p = net.params()[1].second;
  const std::string name = net.params()[1].first;
  const double e0 = net.ema()[name].d[0];
  p->v.d[0] = e0 + 1.0;
  const double decay = 0.9;
  const int k = 7;
  for (int i = 0; i < k; ++i) net.ema_update(decay);
  const double expect =
      std::pow(decay, k) * e0 + (1.0 - std::pow(decay, k)) * (e0 + 1.0);
  CHECK(net.ema()[name].d[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("toy training is deterministic and reduces the loss") {
  // Two runs with the same seed produce identical loss traces; a fresh model
  // starts at ~1 and must move below it within a few steps on an easy task.
  auto clean = speech_like(12000, 9);
  const std::string wav = "/tmp/sse_test_train.wav";
  write_wav(wav, clean);

  ChainGrammar grammar;
  ChainCandidate cand;
  StageTemplate noise;
  noise.type = "noise";
  noise.snr_db = {5, 15};
  cand.stages.push_back(noise);
  grammar.candidates.push_back(cand);
  auto assets = Assets::builtin();

  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.steps = 4;
  tcfg.seed = 3;
  tcfg.crop_frames = 16;
  tcfg.lr = 1e-2;
  SdeParams sde;
  FrameSpec spec;
  auto r1 = train({wav}, grammar, assets, tcfg, sde, tiny_net(), spec,
                  "/tmp/sse_test_train_ckpt.bin", "");
  auto r2 = train({wav}, grammar, assets, tcfg, sde, tiny_net(), spec,
                  "/tmp/sse_test_train_ckpt.bin", "");
  REQUIRE(r1.losses.size() == 4);
  CHECK(r1.losses == r2.losses);
  CHECK(r1.losses[0] == doctest::Approx(1.0).epsilon(0.3));

  // The saved checkpoint reloads into a compatible model.
  ScoreNet net(tiny_net(), 0);
  load_checkpoint("/tmp/sse_test_train_ckpt.bin", net);
}
