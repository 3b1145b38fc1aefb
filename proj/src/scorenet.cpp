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

#include "sse/scorenet.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sse/rng.hpp"

namespace sse {

using nn::Tensor;
using nn::Var;
using nn::VarPtr;

std::string ScoreNetConfig::digest() const {
  std::ostringstream os;
  os << base_channels << '|';
  for (int m : channel_multipliers) os << m << ',';
  os << '|' << resblocks_per_resolution << '|' << time_kernel << '|'
     << freq_kernel << '|' << groups << '|' << embed_dim;
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : os.str()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

namespace {

Tensor init_conv(int co, int ci, int kt, int kf, Rng& rng, bool zero = false) {
  Tensor w({co, ci, kt, kf});
  if (!zero) {
    const double scale = std::sqrt(2.0 / (ci * kt * kf));
    for (auto& v : w.d) v = scale * rng.normal();
  }
  return w;
}

Tensor init_linear(int out, int in, Rng& rng) {
  Tensor w({out, in});
  const double scale = std::sqrt(2.0 / in);
  for (auto& v : w.d) v = scale * rng.normal();
  return w;
}

}  // namespace

ScoreNet::ScoreNet(const ScoreNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.embed_dim % 2 != 0)
    throw std::runtime_error("ScoreNet: embed_dim must be even");
  Rng rng(mix_seed(seed, 0x5c03e));
  const int kt = cfg.time_kernel, kf = cfg.freq_kernel;
  const int L = cfg.levels();
  auto ch = [&](int l) { return cfg.base_channels * cfg.channel_multipliers[l]; };

  auto add_param = [&](const std::string& name, Tensor t) {
    auto v = nn::make_var(std::move(t), true);
    v->ensure_grad();
    params_.emplace_back(name, v);
  };
  auto add_conv = [&](const std::string& p, int co, int ci, bool zero = false) {
    add_param(p + ".w", init_conv(co, ci, kt, kf, rng, zero));
    add_param(p + ".b", Tensor({co}));
  };
  auto add_norm = [&](const std::string& p, int c) {
    Tensor g({c});
    std::fill(g.d.begin(), g.d.end(), 1.0);
    add_param(p + ".gamma", std::move(g));
    add_param(p + ".beta", Tensor({c}));
  };
  auto add_resblock = [&](const std::string& p, int c) {
    add_norm(p + ".gn1", c);
    add_conv(p + ".conv1", c, c);
    add_param(p + ".emb.w", init_linear(c, cfg.embed_dim, rng));
    add_param(p + ".emb.b", Tensor({c}));
    add_norm(p + ".gn2", c);
    add_conv(p + ".conv2", c, c);
  };

  // Frozen random Fourier frequencies for the process-time features.
  fourier_freqs_.resize(cfg.embed_dim / 2);
  for (auto& f : fourier_freqs_) f = std::exp(rng.normal());  // log-normal spread
  {
    Tensor fr({cfg.embed_dim / 2});
    for (int i = 0; i < cfg.embed_dim / 2; ++i) fr.d[i] = fourier_freqs_[i];
    auto v = nn::make_var(std::move(fr), false);  // stored, never trained
    params_.emplace_back("embed.freqs", v);
  }
  add_param("embed.w1", init_linear(cfg.embed_dim, cfg.embed_dim, rng));
  add_param("embed.b1", Tensor({cfg.embed_dim}));
  add_param("embed.w2", init_linear(cfg.embed_dim, cfg.embed_dim, rng));
  add_param("embed.b2", Tensor({cfg.embed_dim}));

  add_conv("stem", ch(0), 4);
  for (int l = 0; l < L; ++l) {
    for (int r = 0; r < cfg.resblocks_per_resolution; ++r)
      add_resblock("enc" + std::to_string(l) + ".res" + std::to_string(r),
                   ch(l));
    if (l + 1 < L) add_conv("down" + std::to_string(l), ch(l + 1), ch(l));
  }
  for (int l = L - 2; l >= 0; --l) {
    add_conv("up" + std::to_string(l), ch(l), ch(l + 1));
    add_conv("merge" + std::to_string(l), ch(l), 2 * ch(l));
    for (int r = 0; r < cfg.resblocks_per_resolution; ++r)
      add_resblock("dec" + std::to_string(l) + ".res" + std::to_string(r),
                   ch(l));
  }
  add_conv("out", 2, ch(0), /*zero=*/true);  // score == 0 at initialization

  reset_ema_to_params();
}

VarPtr ScoreNet::param(const std::string& name) const {
  for (const auto& [n, v] : params_)
    if (n == name) return v;
  throw std::runtime_error("ScoreNet: no parameter " + name);
}

VarPtr ScoreNet::resblock(const VarPtr& h, const VarPtr& emb,
                          const std::string& p) {
  using namespace nn;
  auto a = cumulative_group_norm(h, param(p + ".gn1.gamma"),
                                 param(p + ".gn1.beta"), cfg_.groups);
  a = silu(a);
  a = conv2d(a, param(p + ".conv1.w"), param(p + ".conv1.b"), 1, cfg_.pad);
  auto bias = linear(emb, param(p + ".emb.w"), param(p + ".emb.b"));
  a = add_channel_bias(a, bias);
  a = cumulative_group_norm(a, param(p + ".gn2.gamma"),
                            param(p + ".gn2.beta"), cfg_.groups);
  a = silu(a);
  a = conv2d(a, param(p + ".conv2.w"), param(p + ".conv2.b"), 1, cfg_.pad);
  return add(h, a);
}

VarPtr ScoreNet::forward(const std::vector<std::complex<double>>& x_t,
                         const std::vector<std::complex<double>>& y,
                         int frames, int bins, double t) {
  using namespace nn;
  if (x_t.size() != y.size() ||
      x_t.size() != static_cast<std::size_t>(frames) * bins)
    throw std::runtime_error("ScoreNet::forward: shape mismatch");
  const int L = cfg_.levels();
  if (bins % (1 << (L - 1)) != 0)
    throw std::runtime_error("ScoreNet::forward: bins not divisible by 2^(levels-1)");
  for (const auto& [n, p] : params_)
    for (double v : p->v.d)
      if (!std::isfinite(v))
        throw std::runtime_error("ScoreNet::forward: nonfinite parameter " + n);

  // Stack (Re x_t, Im x_t, Re y, Im y) as input channels.
  Tensor in({4, frames, bins});
  for (int k = 0; k < frames; ++k)
    for (int b = 0; b < bins; ++b) {
      const std::size_t i = static_cast<std::size_t>(k) * bins + b;
      in.at3(0, k, b) = x_t[i].real();
      in.at3(1, k, b) = x_t[i].imag();
      in.at3(2, k, b) = y[i].real();
      in.at3(3, k, b) = y[i].imag();
    }
  auto x = make_var(std::move(in), false);

  // Process-time embedding from frozen random Fourier features. Read the
  // frequencies from the parameter store so checkpoint loads take effect.
  const auto& freqs = param("embed.freqs")->v.d;
  Tensor feat({cfg_.embed_dim});
  for (int i = 0; i < cfg_.embed_dim / 2; ++i) {
    feat.d[2 * i] = std::sin(2.0 * M_PI * freqs[i] * t);
    feat.d[2 * i + 1] = std::cos(2.0 * M_PI * freqs[i] * t);
  }
  auto emb = make_var(std::move(feat), false);
  emb = silu(linear(emb, param("embed.w1"), param("embed.b1")));
  emb = silu(linear(emb, param("embed.w2"), param("embed.b2")));

  auto h = conv2d(x, param("stem.w"), param("stem.b"), 1, cfg_.pad);
  std::vector<VarPtr> skips;
  for (int l = 0; l < L; ++l) {
    for (int r = 0; r < cfg_.resblocks_per_resolution; ++r)
      h = resblock(h, emb,
                   "enc" + std::to_string(l) + ".res" + std::to_string(r));
    if (l + 1 < L) {
      skips.push_back(h);
      h = conv2d(h, param("down" + std::to_string(l) + ".w"),
                 param("down" + std::to_string(l) + ".b"), 2, cfg_.pad);
      h = freq_down(h);
    }
  }
  for (int l = L - 2; l >= 0; --l) {
    h = freq_up(h);
    h = zero_stuff_time(h);
    h = conv2d(h, param("up" + std::to_string(l) + ".w"),
               param("up" + std::to_string(l) + ".b"), 1, cfg_.pad);
    auto skip = skips.back();
    skips.pop_back();
    // Ceil-division frame mismatches: crop the latest frames of the longer.
    const int tf = std::min(h->v.shape[1], skip->v.shape[1]);
    h = crop_time(h, tf);
    skip = crop_time(skip, tf);
    h = conv2d(concat_channels(h, skip),
               param("merge" + std::to_string(l) + ".w"),
               param("merge" + std::to_string(l) + ".b"), 1, cfg_.pad);
    for (int r = 0; r < cfg_.resblocks_per_resolution; ++r)
      h = resblock(h, emb,
                   "dec" + std::to_string(l) + ".res" + std::to_string(r));
  }
  h = conv2d(h, param("out.w"), param("out.b"), 1, cfg_.pad);
  if (h->v.shape[1] != frames || h->v.shape[2] != bins)
    throw std::runtime_error("ScoreNet::forward: output shape mismatch");
  return h;
}

std::vector<std::complex<double>> ScoreNet::score(
    const std::vector<std::complex<double>>& x_t,
    const std::vector<std::complex<double>>& y, int frames, int bins, double t,
    bool use_ema) {
  std::vector<Tensor> saved;
  if (use_ema) {
    saved.reserve(params_.size());
    for (auto& [n, p] : params_) {
      saved.push_back(p->v);
      auto it = ema_.find(n);
      if (it != ema_.end()) p->v = it->second;
    }
  }
  VarPtr out;
  try {
    out = forward(x_t, y, frames, bins, t);
  } catch (...) {
    if (use_ema) {
      std::size_t i = 0;
      for (auto& [n, p] : params_) p->v = saved[i++];
    }
    throw;
  }
  if (use_ema) {
    std::size_t i = 0;
    for (auto& [n, p] : params_) p->v = saved[i++];
  }
  std::vector<std::complex<double>> s(static_cast<std::size_t>(frames) * bins);
  for (int k = 0; k < frames; ++k)
    for (int b = 0; b < bins; ++b)
      s[static_cast<std::size_t>(k) * bins + b] = {out->v.at3(0, k, b),
                                                   out->v.at3(1, k, b)};
  return s;
}

void ScoreNet::reset_ema_to_params() {
  ema_.clear();
  for (const auto& [n, p] : params_) ema_[n] = p->v;
}

void ScoreNet::ema_update(double decay) {
  for (const auto& [n, p] : params_) {
    auto& e = ema_[n];
    for (std::size_t i = 0; i < e.d.size(); ++i)
      e.d[i] = decay * e.d[i] + (1.0 - decay) * p->v.d[i];
  }
}

void ScoreNet::zero_grads() {
  for (auto& [n, p] : params_) p->zero_grad();
}

std::size_t ScoreNet::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_)
    if (p->requires_grad) n += p->v.numel();
  return n;
}

std::string ScoreNet::describe() const {
  std::ostringstream os;
  os << "scorenet config digest " << cfg_.digest() << "\n";
  os << "levels " << cfg_.levels() << " base_channels " << cfg_.base_channels
     << " resblocks " << cfg_.resblocks_per_resolution << "\n";
  for (const auto& [name, p] : params_) {
    os << name << " [";
    for (std::size_t i = 0; i < p->v.shape.size(); ++i)
      os << (i ? "x" : "") << p->v.shape[i];
    os << "]\n";
  }
  os << "trainable parameters " << param_count() << "\n";
  return os.str();
}

}  // namespace sse
