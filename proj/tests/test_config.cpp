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

#include <stdexcept>

#include "doctest.h"
#include "sse/config.hpp"

using namespace sse;

TEST_CASE("defaults survive an empty document") {
  auto c = RunConfig::from_json_text("{}");
  CHECK(c.io.rate == 32000);
  CHECK(c.io.window_len == 638);
  CHECK(c.io.hop == 160);
  CHECK(c.sde.gamma == 1.5);
  CHECK(c.sde.n_steps == 30);
  CHECK(c.net.base_channels == 16);
  CHECK(c.net.pad == nn::PadMode::kCausal);
  CHECK(c.train.batch_size == 8);
  CHECK(c.corruption.grammar.candidates.size() == 7);
}

TEST_CASE("values round-trip through the effective-config echo") {
  const char* text = R"({
    "sde": {"gamma": 2.0, "n_steps": 12},
    "net": {"base_channels": 8, "channel_multipliers": [1, 2],
            "padding": "symmetric"},
    "train": {"lr": 0.01, "crop_frames": 64}
  })";
  auto c = RunConfig::from_json_text(text);
  CHECK(c.sde.gamma == 2.0);
  CHECK(c.sde.n_steps == 12);
  CHECK(c.net.base_channels == 8);
  CHECK(c.net.channel_multipliers == std::vector<int>({1, 2}));
  CHECK(c.net.pad == nn::PadMode::kSymmetric);
  CHECK(c.train.lr == 0.01);
  // Echo parses back to the same values.
  auto c2 = RunConfig::from_json_text(c.to_json_text());
  CHECK(c2.sde.gamma == 2.0);
  CHECK(c2.net.pad == nn::PadMode::kSymmetric);
  CHECK(c2.train.crop_frames == 64);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"bogus": 1})"),
                  std::runtime_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"io": {"rte": 32000}})"),
                  std::runtime_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"sde": {"gama": 1.5}})"),
                  std::runtime_error);
  CHECK_THROWS_AS(
      RunConfig::from_json_text(R"({"net": {"padding": "noncausal"}})"),
      std::runtime_error);
  CHECK_THROWS_AS(
      RunConfig::from_json_text(
          R"({"corruption": {"grammar": [{"stages": [{"type": "noise", "snr": 3}]}]}})"),
      std::runtime_error);
}

TEST_CASE("grammar parsing supports ranges and pinned scalars") {
  const char* text = R"({
    "corruption": {"grammar": [
      {"weight": 2.0, "stages": [
        {"type": "noise", "snr_db": [0, 20]},
        {"type": "clip", "clip_threshold": 0.3}
      ]}
    ]}
  })";
  auto c = RunConfig::from_json_text(text);
  REQUIRE(c.corruption.grammar.candidates.size() == 1);
  const auto& cand = c.corruption.grammar.candidates[0];
  CHECK(cand.weight == 2.0);
  REQUIRE(cand.stages.size() == 2);
  CHECK(cand.stages[0].type == "noise");
  CHECK(cand.stages[0].snr_db.lo == 0.0);
  CHECK(cand.stages[0].snr_db.hi == 20.0);
  CHECK(cand.stages[1].clip_threshold.lo == 0.3);
  CHECK(cand.stages[1].clip_threshold.hi == 0.3);
}

TEST_CASE("io section builds a valid frame spec") {
  auto c = RunConfig::from_json_text("{}");
  auto spec = c.io.frame_spec();
  CHECK(spec.bins() == 320);
  // An over-budget window is rejected when the spec is constructed.
  auto bad = RunConfig::from_json_text(R"({"io": {"window_len": 700}})");
  CHECK_THROWS_AS(bad.io.frame_spec(), std::runtime_error);
}
