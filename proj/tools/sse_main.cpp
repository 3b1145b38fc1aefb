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
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "sse/agc.hpp"
#include "sse/checkpoint.hpp"
#include "sse/config.hpp"
#include "sse/metrics.hpp"
#include "sse/pipeline.hpp"
#include "sse/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitProcessing = 2;

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

sse::RunConfig load_config(const std::string& path) {
  auto cfg = path.empty() ? sse::RunConfig{} : sse::RunConfig::from_file(path);
  std::cerr << "effective config:\n" << cfg.to_json_text() << "\n";
  return cfg;
}

int cmd_corrupt(const std::string& manifest, const std::string& out_dir,
                const std::string& config_path, std::uint64_t seed,
                int threads) {
  auto cfg = load_config(config_path);
  auto assets = cfg.corruption.make_assets();
  auto files = read_manifest(manifest);
  fs::create_directories(out_dir);

  std::vector<int> fail(files.size(), 0);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < files.size(); i += step) {
      try {
        sse::AudioBuffer in = sse::read_wav(files[i]);
        if (in.rate == 48000) in = sse::resample(in, 32000);
        const std::uint64_t file_seed = sse::mix_seed(seed, i);
        auto chain =
            sse::sample_chain(cfg.corruption.grammar, assets, file_seed);
        auto out = sse::apply_chain(in, chain, assets, file_seed);
        const std::string stem = fs::path(files[i]).stem().string();
        const std::string wav_path = out_dir + "/" + stem + ".wav";
        sse::write_wav(wav_path, out);
        std::ofstream meta(out_dir + "/" + stem + ".meta");
        meta << sse::describe_chain(chain, file_seed);
      } catch (const std::exception& e) {
        std::cerr << "corrupt: " << files[i] << ": " << e.what() << "\n";
        fail[i] = 1;
      }
    }
  };
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work, static_cast<std::size_t>(t), threads);
    for (auto& t : pool) t.join();
  }
  for (int f : fail)
    if (f) return kExitProcessing;
  return kExitOk;
}

int cmd_train(const std::string& manifest, const std::string& config_path,
              const std::string& out_ckpt, std::uint64_t seed, bool has_seed) {
  auto cfg = load_config(config_path);
  if (has_seed) cfg.train.seed = seed;
  auto assets = cfg.corruption.make_assets();
  auto files = read_manifest(manifest);
  const std::string metrics = out_ckpt + ".metrics.txt";
  auto result =
      sse::train(files, cfg.corruption.grammar, assets, cfg.train, cfg.sde,
                 cfg.net, cfg.io.frame_spec(), out_ckpt, metrics);
  std::cout << "trained " << result.losses.size() << " steps; checkpoint "
            << result.checkpoint_path << "\n";
  return kExitOk;
}

int cmd_enhance(const std::string& in_path, const std::string& out_path,
                const std::string& ckpt, const std::string& config_path,
                std::uint64_t seed) {
  auto cfg = load_config(config_path);
  const std::string digest = sse::checkpoint_digest(ckpt);
  if (digest != cfg.net.digest())
    throw std::runtime_error("checkpoint digest " + digest +
                             " does not match net config " + cfg.net.digest());
  sse::ScoreNet net(cfg.net, 0);
  sse::load_checkpoint(ckpt, net);
  sse::AudioBuffer in = sse::read_wav(in_path);
  auto result = sse::enhance_file(in, net, cfg, seed);
  sse::write_wav(out_path, result.audio);
  std::cout << "algorithmic latency " << std::setprecision(6)
            << result.latency_ms << " ms\n";
  return kExitOk;
}

int cmd_eval(const std::string& ref_dir, const std::string& deg_dir,
             const std::string& report_path) {
  std::map<std::string, fs::path> refs, degs;
  for (const auto& e : fs::directory_iterator(ref_dir))
    if (e.path().extension() == ".wav") refs[e.path().filename()] = e.path();
  for (const auto& e : fs::directory_iterator(deg_dir))
    if (e.path().extension() == ".wav") degs[e.path().filename()] = e.path();

  std::ofstream report(report_path);
  if (!report) throw std::runtime_error("cannot open report " + report_path);
  bool unpaired = false;
  for (const auto& [name, p] : refs)
    if (!degs.count(name)) {
      report << "unpaired ref " << name << "\n";
      unpaired = true;
    }
  for (const auto& [name, p] : degs)
    if (!refs.count(name)) {
      report << "unpaired deg " << name << "\n";
      unpaired = true;
    }

  sse::FrameSpec spec;
  report << std::left << std::setw(32) << "file" << std::right << std::setw(12)
         << "sisdr_db" << std::setw(12) << "lsd_db" << "\n";
  for (const auto& [name, rp] : refs) {
    if (!degs.count(name)) continue;
    auto ref = sse::read_wav(rp.string());
    auto deg = sse::read_wav(degs[name].string());
    const double sisdr = sse::si_sdr(ref.samples, deg.samples);
    const double lsd =
        sse::log_spectral_distance(ref.samples, deg.samples, spec);
    report << std::left << std::setw(32) << name << std::right << std::fixed
           << std::setprecision(3) << std::setw(12) << sisdr << std::setw(12)
           << lsd << "\n";
    report << "file " << name << " sisdr " << sisdr << " lsd " << lsd << "\n";
  }
  return unpaired ? kExitInput : kExitOk;
}

int cmd_selfcheck(const std::string& config_path) {
  auto cfg = load_config(config_path);
  int failures = 0;
  auto check = [&](const char* name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  // Latency budget.
  double latency = -1.0;
  try {
    latency = cfg.io.frame_spec().latency_ms();
    check("latency", latency < 20.0,
          std::to_string(latency) + " ms algorithmic latency");
  } catch (const std::exception& e) {
    check("latency", false, e.what());
  }
  if (failures > 0) return kExitProcessing;  // cannot run frame-based checks

  const sse::FrameSpec spec = cfg.io.frame_spec();
  sse::Rng rng(20230217);

  // STFT streaming/offline equivalence and round-trip SNR.
  {
    std::vector<double> sig(spec.rate / 2);
    for (auto& s : sig) s = 0.5 * rng.normal();
    auto off = sse::stft(sig, spec);
    sse::StftStream stream(spec);
    bool equal = true;
    int frame_idx = 0;
    std::size_t pos = 0;
    while (pos < sig.size()) {
      const std::size_t n = std::min<std::size_t>(123, sig.size() - pos);
      for (auto& f : stream.push(sig.data() + pos, n)) {
        for (int b = 0; b < off.bins; ++b)
          if (f[b] != off.at(frame_idx, b)) equal = false;
        ++frame_idx;
      }
      pos += n;
    }
    check("stft_streaming_offline_equal", equal && frame_idx == off.frames);
    auto rec = sse::istft(off);
    double se = 0.0, pe = 0.0;
    for (std::size_t i = spec.window_len;
         i + spec.window_len < std::min(rec.size(), sig.size()); ++i) {
      se += (rec[i] - sig[i]) * (rec[i] - sig[i]);
      pe += sig[i] * sig[i];
    }
    const double snr = 10.0 * std::log10(pe / std::max(se, 1e-300));
    check("stft_roundtrip_snr", snr >= 60.0,
          std::to_string(snr) + " dB interior SNR");
  }

  // Perturbation kernel Monte-Carlo at t = 0.5.
  {
    const double t = 0.5;
    std::vector<std::complex<double>> x0{{0.8, -0.2}}, y{{0.1, 0.4}};
    const auto mu = sse::perturbation_mean(x0, y, t, cfg.sde);
    const double sd = sse::perturbation_std(t, cfg.sde);
    const int n = 10000;
    std::complex<double> mean = 0.0;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      auto [xt, z] = sse::sample_forward(x0, y, t, cfg.sde, rng);
      mean += xt[0];
      var += std::norm(xt[0] - mu[0]);
    }
    mean /= static_cast<double>(n);
    var /= static_cast<double>(n);
    const bool ok = std::abs(mean - mu[0]) < 5.0 * sd / std::sqrt(double(n)) &&
                    std::abs(var - sd * sd) < 0.05 * sd * sd;
    check("perturbation_kernel_mc", ok);
  }

  // End-to-end causality probe through AGC -> STFT -> score network.
  {
    sse::ScoreNet net(cfg.net, 7);
    std::vector<double> sig(spec.window_len + 40 * spec.hop);
    for (auto& s : sig) s = 0.3 * rng.normal();
    auto run = [&](const std::vector<double>& x) {
      auto spec_full = sse::zero_low_bins(sse::stft(x, spec));
      spec_full = sse::apply_agc(spec_full, cfg.agc);
      spec_full = sse::compress_amplitude(std::move(spec_full));
      std::vector<std::complex<double>> xt = spec_full.data;
      return net.score(xt, spec_full.data, spec_full.frames, spec_full.bins,
                       0.5);
    };
    auto full = run(sig);
    const int plen_frames = 16;
    std::vector<double> prefix(
        sig.begin(), sig.begin() + spec.window_len + (plen_frames - 1) * spec.hop);
    auto pre = run(prefix);
    double max_err = 0.0;
    for (int k = 0; k < plen_frames; ++k)
      for (int b = 0; b < spec.bins(); ++b)
        max_err = std::max(
            max_err, std::abs(pre[k * spec.bins() + b] -
                              full[k * spec.bins() + b]));
    check("causality_prefix_equality", max_err <= 1e-6,
          "max prefix deviation " + std::to_string(max_err));
  }

  return failures == 0 ? kExitOk : kExitProcessing;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sse: causal streaming speech signal improvement toolkit"};
  app.require_subcommand(1);

  std::string manifest, out_dir, config_path, in_path, out_path, ckpt,
      ref_dir, deg_dir, report_path;
  std::uint64_t seed = 0;
  int threads = 1;

  auto* corrupt = app.add_subcommand("corrupt", "apply random corruption chains");
  corrupt->add_option("--in", manifest, "manifest of clean WAVs")->required();
  corrupt->add_option("--out", out_dir, "output directory")->required();
  corrupt->add_option("--config", config_path, "run config JSON");
  corrupt->add_option("--seed", seed, "rng seed");
  corrupt->add_option("--threads", threads, "file-level parallelism");

  auto* train = app.add_subcommand("train", "train the score model");
  train->add_option("--manifest", manifest, "manifest of clean WAVs")->required();
  train->add_option("--config", config_path, "run config JSON");
  train->add_option("--out", ckpt, "output checkpoint")->required();
  auto* seed_opt = train->add_option("--seed", seed, "rng seed");

  auto* enhance = app.add_subcommand("enhance", "enhance a WAV file");
  enhance->add_option("--in", in_path, "input WAV")->required();
  enhance->add_option("--out", out_path, "output WAV")->required();
  enhance->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
  enhance->add_option("--config", config_path, "run config JSON");
  enhance->add_option("--seed", seed, "rng seed");
  enhance->add_option("--threads", threads, "reserved for sampling parallelism");

  auto* eval = app.add_subcommand("eval", "SI-SDR / LSD report");
  eval->add_option("--ref", ref_dir, "reference directory")->required();
  eval->add_option("--deg", deg_dir, "degraded directory")->required();
  eval->add_option("--report", report_path, "report file")->required();

  auto* selfcheck = app.add_subcommand("selfcheck", "causality/latency checks");
  selfcheck->add_option("--config", config_path, "run config JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(corrupt))
      return cmd_corrupt(manifest, out_dir, config_path, seed, threads);
    if (app.got_subcommand(train))
      return cmd_train(manifest, config_path, ckpt, seed, seed_opt->count() > 0);
    if (app.got_subcommand(enhance))
      return cmd_enhance(in_path, out_path, ckpt, config_path, seed);
    if (app.got_subcommand(eval)) return cmd_eval(ref_dir, deg_dir, report_path);
    if (app.got_subcommand(selfcheck)) return cmd_selfcheck(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
