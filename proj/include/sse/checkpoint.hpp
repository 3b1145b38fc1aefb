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

#ifndef SSE_CHECKPOINT_HPP
#define SSE_CHECKPOINT_HPP

#include <string>

#include "sse/scorenet.hpp"

namespace sse {

// Checkpoint file: text header line "ssenet v1 <config-digest>\n" followed by
// per-tensor records (name length u32 LE, name bytes, rank u32, dims u32...,
// float32 payload). EMA shadow tensors carry an "ema/" name prefix.
void save_checkpoint(const std::string& path, ScoreNet& net);
void load_checkpoint(const std::string& path, ScoreNet& net);

/// Reads just the digest from a checkpoint header.
std::string checkpoint_digest(const std::string& path);

}  // namespace sse

#endif  // SSE_CHECKPOINT_HPP
