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

#include "sse/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace sse {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::runtime_error("config: unknown key \"" + it.key() +
                               "\" in section " + where);
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Range get_range(const json& j) {
  if (j.is_array() && j.size() == 2)
    return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v};
  }
  throw std::runtime_error("config: range must be [lo, hi] or scalar");
}

StageTemplate parse_stage(const json& j) {
  check_keys(j,
             {"type", "snr_db", "clip_threshold", "gain_db", "loss_rate",
              "burst_mean", "bandwidth_hz", "bits", "drr_db"},
             "corruption.grammar stage");
  StageTemplate t;
  t.type = j.at("type").get<std::string>();
  if (j.contains("snr_db")) t.snr_db = get_range(j["snr_db"]);
  if (j.contains("clip_threshold"))
    t.clip_threshold = get_range(j["clip_threshold"]);
  if (j.contains("gain_db")) t.gain_db = get_range(j["gain_db"]);
  if (j.contains("loss_rate")) t.loss_rate = get_range(j["loss_rate"]);
  if (j.contains("burst_mean")) t.burst_mean = get_range(j["burst_mean"]);
  if (j.contains("bandwidth_hz")) t.bandwidth_hz = get_range(j["bandwidth_hz"]);
  if (j.contains("bits")) t.bits = get_range(j["bits"]);
  if (j.contains("drr_db")) t.drr_db = get_range(j["drr_db"]);
  return t;
}

}  // namespace

Assets CorruptionConfig::make_assets() const {
  Assets a = Assets::builtin(32000, asset_seed);
  if (!noise_manifest.empty()) a.load_noise_manifest(noise_manifest);
  if (!rir_manifest.empty()) a.load_rir_manifest(rir_manifest);
  return a;
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  check_keys(j, {"io", "agc", "sde", "net", "train", "corruption"}, "(root)");
  RunConfig c;

  if (j.contains("io")) {
    const auto& s = j["io"];
    check_keys(s,
               {"rate", "window_len", "hop", "compressor_threshold_db",
                "compressor_ratio", "compressor_attack_ms",
                "compressor_release_ms"},
               "io");
    get(s, "rate", c.io.rate);
    get(s, "window_len", c.io.window_len);
    get(s, "hop", c.io.hop);
    get(s, "compressor_threshold_db", c.io.compressor_threshold_db);
    get(s, "compressor_ratio", c.io.compressor_ratio);
    get(s, "compressor_attack_ms", c.io.compressor_attack_ms);
    get(s, "compressor_release_ms", c.io.compressor_release_ms);
  }
  if (j.contains("agc")) {
    const auto& s = j["agc"];
    check_keys(s,
               {"tau", "hold_ms", "spp_smooth_frames", "ramp_time_ms",
                "xi_h1_db", "psd_alpha", "psd_init_frames"},
               "agc");
    get(s, "tau", c.agc.tau);
    get(s, "hold_ms", c.agc.hold_ms);
    get(s, "spp_smooth_frames", c.agc.spp_smooth_frames);
    get(s, "ramp_time_ms", c.agc.ramp_time_ms);
    get(s, "xi_h1_db", c.agc.xi_h1_db);
    get(s, "psd_alpha", c.agc.psd_alpha);
    get(s, "psd_init_frames", c.agc.psd_init_frames);
  }
  if (j.contains("sde")) {
    const auto& s = j["sde"];
    check_keys(s,
               {"gamma", "sigma_min", "sigma_max", "t_horizon", "t_eps",
                "n_steps", "corrector_snr", "corrector_steps"},
               "sde");
    get(s, "gamma", c.sde.gamma);
    get(s, "sigma_min", c.sde.sigma_min);
    get(s, "sigma_max", c.sde.sigma_max);
    get(s, "t_horizon", c.sde.t_horizon);
    get(s, "t_eps", c.sde.t_eps);
    get(s, "n_steps", c.sde.n_steps);
    get(s, "corrector_snr", c.sde.corrector_snr);
    get(s, "corrector_steps", c.sde.corrector_steps);
  }
  if (j.contains("net")) {
    const auto& s = j["net"];
    check_keys(s,
               {"base_channels", "channel_multipliers",
                "resblocks_per_resolution", "time_kernel", "freq_kernel",
                "groups", "embed_dim", "padding"},
               "net");
    get(s, "base_channels", c.net.base_channels);
    get(s, "channel_multipliers", c.net.channel_multipliers);
    get(s, "resblocks_per_resolution", c.net.resblocks_per_resolution);
    get(s, "time_kernel", c.net.time_kernel);
    get(s, "freq_kernel", c.net.freq_kernel);
    get(s, "groups", c.net.groups);
    get(s, "embed_dim", c.net.embed_dim);
    if (s.contains("padding")) {
      const std::string p = s["padding"].get<std::string>();
      if (p == "causal")
        c.net.pad = nn::PadMode::kCausal;
      else if (p == "symmetric")
        c.net.pad = nn::PadMode::kSymmetric;
      else
        throw std::runtime_error("config: net.padding must be causal|symmetric");
    }
  }
  if (j.contains("train")) {
    const auto& s = j["train"];
    check_keys(s,
               {"batch_size", "lr", "adam_beta1", "adam_beta2", "adam_eps",
                "ema_decay", "steps", "seed", "crop_frames", "log_every",
                "ckpt_every", "amp_a", "amp_c"},
               "train");
    get(s, "batch_size", c.train.batch_size);
    get(s, "lr", c.train.lr);
    get(s, "adam_beta1", c.train.adam_beta1);
    get(s, "adam_beta2", c.train.adam_beta2);
    get(s, "adam_eps", c.train.adam_eps);
    get(s, "ema_decay", c.train.ema_decay);
    get(s, "steps", c.train.steps);
    get(s, "seed", c.train.seed);
    get(s, "crop_frames", c.train.crop_frames);
    get(s, "log_every", c.train.log_every);
    get(s, "ckpt_every", c.train.ckpt_every);
    get(s, "amp_a", c.train.amp_a);
    get(s, "amp_c", c.train.amp_c);
  }
  if (j.contains("corruption")) {
    const auto& s = j["corruption"];
    check_keys(s, {"grammar", "noise_manifest", "rir_manifest", "asset_seed"},
               "corruption");
    get(s, "noise_manifest", c.corruption.noise_manifest);
    get(s, "rir_manifest", c.corruption.rir_manifest);
    get(s, "asset_seed", c.corruption.asset_seed);
    if (s.contains("grammar")) {
      c.corruption.grammar.candidates.clear();
      for (const auto& cand : s["grammar"]) {
        check_keys(cand, {"stages", "weight"}, "corruption.grammar");
        ChainCandidate cc;
        if (cand.contains("weight")) cc.weight = cand["weight"].get<double>();
        for (const auto& st : cand.at("stages")) cc.stages.push_back(parse_stage(st));
        c.corruption.grammar.candidates.push_back(std::move(cc));
      }
    }
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json_text() const {
  json j;
  j["io"] = {{"rate", io.rate},
             {"window_len", io.window_len},
             {"hop", io.hop},
             {"compressor_threshold_db", io.compressor_threshold_db},
             {"compressor_ratio", io.compressor_ratio},
             {"compressor_attack_ms", io.compressor_attack_ms},
             {"compressor_release_ms", io.compressor_release_ms}};
  j["agc"] = {{"tau", agc.tau},
              {"hold_ms", agc.hold_ms},
              {"spp_smooth_frames", agc.spp_smooth_frames},
              {"ramp_time_ms", agc.ramp_time_ms},
              {"xi_h1_db", agc.xi_h1_db},
              {"psd_alpha", agc.psd_alpha},
              {"psd_init_frames", agc.psd_init_frames}};
  j["sde"] = {{"gamma", sde.gamma},
              {"sigma_min", sde.sigma_min},
              {"sigma_max", sde.sigma_max},
              {"t_horizon", sde.t_horizon},
              {"t_eps", sde.t_eps},
              {"n_steps", sde.n_steps},
              {"corrector_snr", sde.corrector_snr},
              {"corrector_steps", sde.corrector_steps}};
  j["net"] = {{"base_channels", net.base_channels},
              {"channel_multipliers", net.channel_multipliers},
              {"resblocks_per_resolution", net.resblocks_per_resolution},
              {"time_kernel", net.time_kernel},
              {"freq_kernel", net.freq_kernel},
              {"groups", net.groups},
              {"embed_dim", net.embed_dim},
              {"padding",
               net.pad == nn::PadMode::kCausal ? "causal" : "symmetric"}};
  j["train"] = {{"batch_size", train.batch_size},
                {"lr", train.lr},
                {"adam_beta1", train.adam_beta1},
                {"adam_beta2", train.adam_beta2},
                {"adam_eps", train.adam_eps},
                {"ema_decay", train.ema_decay},
                {"steps", train.steps},
                {"seed", train.seed},
                {"crop_frames", train.crop_frames},
                {"log_every", train.log_every},
                {"ckpt_every", train.ckpt_every},
                {"amp_a", train.amp_a},
                {"amp_c", train.amp_c}};
  j["corruption"] = {{"noise_manifest", corruption.noise_manifest},
                     {"rir_manifest", corruption.rir_manifest},
                     {"asset_seed", corruption.asset_seed}};
  return j.dump(2);
}

}  // namespace sse
