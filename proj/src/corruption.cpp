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

#include "sse/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sse {

namespace {

constexpr int kPacketMs = 20;
constexpr double kFadeMs = 2.0;

double power(const std::vector<double>& v) {
  double p = 0.0;
  for (double s : v) p += s * s;
  return v.empty() ? 0.0 : p / v.size();
}

}  // namespace

Assets Assets::builtin(int rate, std::uint64_t seed) {
  Assets a;
  Rng rng(seed);
  const int n = rate * 4;  // 4 s of each noise type

  AudioBuffer white{.samples = std::vector<double>(n), .rate = rate};
  for (auto& s : white.samples) s = 0.1 * rng.normal();
  a.noises["white"] = std::move(white);

  // Pink-ish noise: one-pole lowpassed white mixture (-3 dB/oct approx).
  AudioBuffer pink{.samples = std::vector<double>(n), .rate = rate};
  double b0 = 0, b1 = 0, b2 = 0;
  for (int i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    pink.samples[i] = 0.02 * (b0 + b1 + b2 + w * 0.1848);
  }
  a.noises["pink"] = std::move(pink);

  // Babble-like: amplitude-modulated band-limited noise.
  AudioBuffer babble{.samples = std::vector<double>(n), .rate = rate};
  double lp = 0.0;
  for (int i = 0; i < n; ++i) {
    lp = 0.995 * lp + 0.005 * rng.normal() * 10.0;
    const double am = 0.5 + 0.5 * std::sin(2.0 * M_PI * 3.0 * i / rate +
                                           2.0 * std::sin(2.0 * M_PI * 0.7 *
                                                          i / rate));
    babble.samples[i] = 0.15 * am * lp;
  }
  a.noises["babble"] = std::move(babble);

  // Synthetic exponential-decay RIRs with different T60s.
  const double t60s[3] = {0.15, 0.3, 0.6};
  for (int r = 0; r < 3; ++r) {
    const int len = static_cast<int>(rate * t60s[r] * 1.2);
    AudioBuffer rir{.samples = std::vector<double>(len, 0.0), .rate = rate};
    rir.samples[0] = 1.0;  // direct path
    const double decay = std::log(1000.0) / (t60s[r] * rate);
    Rng rr(mix_seed(seed, 77 + r));
    for (int i = rate / 200; i < len; ++i)  // 5 ms early gap
      rir.samples[i] = 0.3 * rr.normal() * std::exp(-decay * i);
    a.rirs["rir_synth_" + std::to_string(r)] = std::move(rir);
  }
  return a;
}

static void load_manifest(const std::string& path,
                          std::map<std::string, AudioBuffer>& pool) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("manifest: cannot open " + path);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::string id = line.substr(line.find_last_of('/') + 1);
    pool[id] = read_wav(line);
  }
}

void Assets::load_noise_manifest(const std::string& path) {
  load_manifest(path, noises);
}
void Assets::load_rir_manifest(const std::string& path) {
  load_manifest(path, rirs);
}

ChainGrammar default_grammar() {
  auto st = [](const std::string& type) {
    StageTemplate t;
    t.type = type;
    return t;
  };
  ChainGrammar g;
  g.candidates.push_back({{st("noise")}, 1.0});
  g.candidates.push_back({{st("reverb")}, 1.0});
  g.candidates.push_back({{st("reverb"), st("noise")}, 1.0});
  g.candidates.push_back({{st("noise"), st("clip")}, 1.0});
  g.candidates.push_back({{st("reverb"), st("noise"), st("packet_loss")}, 1.0});
  g.candidates.push_back({{st("codec")}, 1.0});
  g.candidates.push_back({{st("gain_reduce"), st("noise")}, 1.0});
  return g;
}

CorruptionChain sample_chain(const ChainGrammar& grammar, const Assets& assets,
                             std::uint64_t seed) {
  if (grammar.candidates.empty())
    throw std::runtime_error("sample_chain: empty grammar");
  Rng rng(mix_seed(seed, 0xc0ffee));
  double total = 0.0;
  for (const auto& c : grammar.candidates) total += c.weight;
  if (total <= 0.0) throw std::runtime_error("sample_chain: zero weights");
  double u = rng.uniform() * total;
  std::size_t pick = 0;
  for (std::size_t i = 0; i < grammar.candidates.size(); ++i) {
    u -= grammar.candidates[i].weight;
    if (u <= 0.0) {
      pick = i;
      break;
    }
  }

  auto draw = [&](const Range& r) { return rng.uniform(r.lo, r.hi); };
  auto pick_id = [&](const std::map<std::string, AudioBuffer>& pool,
                     const char* what) {
    if (pool.empty())
      throw std::runtime_error(std::string("sample_chain: no ") + what +
                               " assets");
    std::size_t k = rng.index(pool.size());
    auto it = pool.begin();
    std::advance(it, k);
    return it->first;
  };

  CorruptionChain chain;
  for (const auto& t : grammar.candidates[pick].stages) {
    if (t.type == "noise") {
      NoiseStage s;
      s.noise_id = pick_id(assets.noises, "noise");
      s.snr_db = draw(t.snr_db);
      s.stationary = (s.noise_id != "babble");
      chain.stages.emplace_back(s);
    } else if (t.type == "reverb") {
      chain.stages.emplace_back(
          ReverbStage{pick_id(assets.rirs, "rir"), draw(t.drr_db)});
    } else if (t.type == "clip") {
      chain.stages.emplace_back(ClipStage{draw(t.clip_threshold)});
    } else if (t.type == "gain_reduce") {
      chain.stages.emplace_back(GainReduceStage{draw(t.gain_db)});
    } else if (t.type == "packet_loss") {
      chain.stages.emplace_back(
          PacketLossStage{draw(t.loss_rate), draw(t.burst_mean)});
    } else if (t.type == "codec") {
      chain.stages.emplace_back(CodecStage{
          draw(t.bandwidth_hz), static_cast<int>(std::lround(draw(t.bits)))});
    } else {
      throw std::runtime_error("sample_chain: unknown stage type " + t.type);
    }
  }
  if (chain.stages.empty() || chain.stages.size() > 4)
    throw std::runtime_error("sample_chain: candidate length out of [1,4]");
  return chain;
}

AudioBuffer apply_reverb(const AudioBuffer& x, const AudioBuffer& rir,
                         double drr_db) {
  if (rir.samples.empty()) throw std::runtime_error("apply_reverb: empty rir");
  if (rir.rate != x.rate)
    throw std::runtime_error("apply_reverb: rate mismatch");

  // Normalize to unit direct-path peak and apply the DRR adjustment to the
  // tail after the direct path.
  std::vector<double> h = rir.samples;
  std::size_t d0 = 0;
  double peak = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (std::abs(h[i]) > peak) {
      peak = std::abs(h[i]);
      d0 = i;
    }
  if (peak <= 0.0) throw std::runtime_error("apply_reverb: all-zero rir");
  const double direct_sign = h[d0] >= 0 ? 1.0 : -1.0;
  const double tail_gain = std::pow(10.0, -drr_db / 20.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] /= peak * direct_sign;
    if (i > d0) h[i] *= tail_gain;
  }

  // Full convolution, aligned to the direct path and truncated.
  AudioBuffer out;
  out.rate = x.rate;
  out.samples.assign(x.samples.size(), 0.0);
  const long long n = static_cast<long long>(x.samples.size());
  const long long m = static_cast<long long>(h.size());
  for (long long i = 0; i < n; ++i) {
    const double xi = x.samples[i];
    if (xi == 0.0) continue;
    const long long j_hi = std::min(m - 1, n - 1 + (long long)d0 - i);
    for (long long j = 0; j <= j_hi; ++j) {
      const long long k = i + j - static_cast<long long>(d0);
      if (k >= 0 && k < n) out.samples[k] += xi * h[j];
    }
  }
  return out;
}

AudioBuffer add_noise(const AudioBuffer& x, const AudioBuffer& noise,
                      double snr_db) {
  if (snr_db >= 100.0) return x;  // effectively clean
  const double px = power(x.samples);
  if (px <= 0.0) throw std::runtime_error("add_noise: zero-power signal");
  std::vector<double> n(x.samples.size());
  if (noise.samples.empty())
    throw std::runtime_error("add_noise: zero-power noise");
  for (std::size_t i = 0; i < n.size(); ++i)
    n[i] = noise.samples[i % noise.samples.size()];
  const double pn = power(n);
  if (pn <= 0.0) throw std::runtime_error("add_noise: zero-power noise");
  const double beta = std::sqrt(px / (pn * std::pow(10.0, snr_db / 10.0)));
  AudioBuffer out;
  out.rate = x.rate;
  out.samples.resize(x.samples.size());
  for (std::size_t i = 0; i < n.size(); ++i)
    out.samples[i] = x.samples[i] + beta * n[i];
  return out;
}

AudioBuffer clip(const AudioBuffer& x, double threshold) {
  if (threshold <= 0.0) throw std::runtime_error("clip: threshold <= 0");
  AudioBuffer out = x;
  for (auto& s : out.samples) s = std::clamp(s, -threshold, threshold);
  return out;
}

AudioBuffer gain_reduce(const AudioBuffer& x, double db) {
  if (db > 0.0) throw std::runtime_error("gain_reduce: db > 0");
  AudioBuffer out = x;
  const double g = std::pow(10.0, db / 20.0);
  for (auto& s : out.samples) s *= g;
  return out;
}

AudioBuffer packet_loss(const AudioBuffer& x, double loss_rate,
                        double burst_mean_packets, std::uint64_t rng_seed) {
  if (loss_rate < 0.0 || loss_rate >= 1.0)
    throw std::runtime_error("packet_loss: loss_rate out of [0,1)");
  AudioBuffer out = x;
  if (loss_rate == 0.0 || x.samples.empty()) return out;
  const int packet = x.rate * kPacketMs / 1000;
  const std::size_t n_packets = (x.samples.size() + packet - 1) / packet;

  // Gilbert model: q = P(bad->good) = 1/burst, p = P(good->bad) so that the
  // stationary bad probability equals loss_rate.
  double q = 1.0 / std::max(burst_mean_packets, 1.0);
  double p = loss_rate * q / (1.0 - loss_rate);
  if (p > 1.0) {
    // Requested (rate, burst) pair is infeasible; keep the stationary rate
    // and let bursts lengthen instead.
    p = 1.0;
    q = (1.0 - loss_rate) / loss_rate;
  }
  Rng rng(mix_seed(rng_seed, 0x9104e7));
  std::vector<char> lost(n_packets, 0);
  bool bad = rng.uniform() < loss_rate;  // start in the stationary law
  for (std::size_t k = 0; k < n_packets; ++k) {
    lost[k] = bad ? 1 : 0;
    bad = bad ? (rng.uniform() >= q) : (rng.uniform() < p);
  }

  // Zero lost packets; half-cosine fades inside each burst boundary.
  const int fade = static_cast<int>(x.rate * kFadeMs / 1000.0);
  std::vector<double> gain(x.samples.size(), 1.0);
  for (std::size_t k = 0; k < n_packets; ++k) {
    if (!lost[k]) continue;
    const std::size_t lo = k * packet;
    const std::size_t hi = std::min(lo + packet, x.samples.size());
    for (std::size_t i = lo; i < hi; ++i) gain[i] = 0.0;
  }
  for (std::size_t k = 0; k < n_packets; ++k) {
    if (!lost[k]) continue;
    const bool burst_start = (k == 0) || !lost[k - 1];
    const bool burst_end = (k + 1 >= n_packets) || !lost[k + 1];
    const std::size_t lo = k * packet;
    const std::size_t hi = std::min(lo + packet, x.samples.size());
    if (burst_start)
      for (int i = 0; i < fade && lo + i < hi; ++i)
        gain[lo + i] = 0.5 + 0.5 * std::cos(M_PI * i / fade);
    if (burst_end)
      for (int i = 0; i < fade && hi >= static_cast<std::size_t>(i + 1) &&
                      hi - i - 1 >= lo;
           ++i)
        gain[hi - i - 1] =
            std::max(gain[hi - i - 1], 0.5 + 0.5 * std::cos(M_PI * i / fade));
  }
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] *= gain[i];
  return out;
}

AudioBuffer codec_sim(const AudioBuffer& x, double bandwidth_hz, int bits) {
  if (bandwidth_hz > 16000.0)
    throw std::runtime_error("codec_sim: bandwidth above Nyquist");
  if (bits < 6 || bits > 16)
    throw std::runtime_error("codec_sim: bits out of [6,16]");
  AudioBuffer out = x;
  if (bandwidth_hz < 0.5 * x.rate * 0.999) {
    const double transition = std::min(0.2 * bandwidth_hz, 2000.0);
    auto h = design_lowpass(bandwidth_hz, transition, 70.0, x.rate);
    out.samples = fir_filter_aligned(out.samples, h);
  }
  // mu-law companded quantization.
  const double mu = 255.0;
  const double levels = std::pow(2.0, bits) - 1.0;
  for (auto& s : out.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const double y =
        std::copysign(std::log1p(mu * std::abs(c)) / std::log1p(mu), c);
    const double q = std::round(0.5 * (y + 1.0) * levels) / levels * 2.0 - 1.0;
    s = std::copysign((std::pow(1.0 + mu, std::abs(q)) - 1.0) / mu, q);
  }
  return out;
}

AudioBuffer apply_chain(const AudioBuffer& x, const CorruptionChain& chain,
                        const Assets& assets, std::uint64_t rng_seed) {
  AudioBuffer cur = x;
  std::uint64_t stage_idx = 0;
  for (const auto& stage : chain.stages) {
    const std::uint64_t seed = mix_seed(rng_seed, stage_idx++);
    cur = std::visit(
        [&](const auto& s) -> AudioBuffer {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ReverbStage>) {
            auto it = assets.rirs.find(s.rir_id);
            if (it == assets.rirs.end())
              throw std::runtime_error("apply_chain: unknown rir " + s.rir_id);
            return apply_reverb(cur, it->second, s.drr_db);
          } else if constexpr (std::is_same_v<T, NoiseStage>) {
            auto it = assets.noises.find(s.noise_id);
            if (it == assets.noises.end())
              throw std::runtime_error("apply_chain: unknown noise " +
                                       s.noise_id);
            return add_noise(cur, it->second, s.snr_db);
          } else if constexpr (std::is_same_v<T, ClipStage>) {
            return clip(cur, s.threshold);
          } else if constexpr (std::is_same_v<T, GainReduceStage>) {
            return gain_reduce(cur, s.db);
          } else if constexpr (std::is_same_v<T, PacketLossStage>) {
            return packet_loss(cur, s.loss_rate, s.burst_mean_packets, seed);
          } else {
            return codec_sim(cur, s.bandwidth_hz, s.bits);
          }
        },
        stage);
  }
  return cur;
}

std::string describe_chain(const CorruptionChain& chain, std::uint64_t seed) {
  std::ostringstream os;
  os << "seed " << seed << "\n";
  os << "stages " << chain.stages.size() << "\n";
  int i = 0;
  for (const auto& stage : chain.stages) {
    os << "stage " << i++ << " ";
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ReverbStage>)
            os << "type reverb rir " << s.rir_id << " drr_db " << s.drr_db;
          else if constexpr (std::is_same_v<T, NoiseStage>)
            os << "type noise id " << s.noise_id << " snr_db " << s.snr_db
               << " stationary " << (s.stationary ? 1 : 0);
          else if constexpr (std::is_same_v<T, ClipStage>)
            os << "type clip threshold " << s.threshold;
          else if constexpr (std::is_same_v<T, GainReduceStage>)
            os << "type gain_reduce db " << s.db;
          else if constexpr (std::is_same_v<T, PacketLossStage>)
            os << "type packet_loss loss_rate " << s.loss_rate
               << " burst_mean " << s.burst_mean_packets;
          else
            os << "type codec bandwidth_hz " << s.bandwidth_hz << " bits "
               << s.bits;
        },
        stage);
    os << "\n";
  }
  return os.str();
}

}  // namespace sse
