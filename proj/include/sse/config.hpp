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

#ifndef SSE_CONFIG_HPP
#define SSE_CONFIG_HPP

#include <string>

#include "sse/agc.hpp"
#include "sse/corruption.hpp"
#include "sse/diffusion.hpp"
#include "sse/scorenet.hpp"
#include "sse/stft.hpp"
#include "sse/training.hpp"

namespace sse {

struct IoConfig {
  int rate = 32000;
  int window_len = 638;
  int hop = 160;
  double compressor_threshold_db = -1.0;
  double compressor_ratio = 20.0;
  double compressor_attack_ms = 1.0;
  double compressor_release_ms = 100.0;

  FrameSpec frame_spec() const { return FrameSpec(rate, window_len, hop); }
};

struct CorruptionConfig {
  ChainGrammar grammar = default_grammar();
  std::string noise_manifest;  // optional WAV pools
  std::string rir_manifest;
  std::uint64_t asset_seed = 1234;

  Assets make_assets() const;
};

/// Whole-run configuration; single JSON document, unknown keys rejected.
struct RunConfig {
  IoConfig io;
  AgcConfig agc;
  SdeParams sde;
  ScoreNetConfig net;
  TrainConfig train;
  CorruptionConfig corruption;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_json_text() const;  // effective config echo
};

}  // namespace sse

#endif  // SSE_CONFIG_HPP
