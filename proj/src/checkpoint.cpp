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

#include "sse/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace sse {

namespace {

void wr_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t rd_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void write_tensor(std::ofstream& os, const std::string& name,
                  const nn::Tensor& t) {
  wr_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  wr_u32(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) wr_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.d) {
    float f = static_cast<float>(v);
    os.write(reinterpret_cast<const char*>(&f), 4);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, ScoreNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os << "ssenet v1 " << net.config().digest() << "\n";
  for (const auto& [name, p] : net.params()) write_tensor(os, name, p->v);
  for (const auto& [name, t] : net.ema()) write_tensor(os, "ema/" + name, t);
  if (!os) throw std::runtime_error("save_checkpoint: write failed");
}

std::string checkpoint_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string header;
  std::getline(is, header);
  if (header.rfind("ssenet v1 ", 0) != 0)
    throw std::runtime_error("checkpoint: bad header in " + path);
  return header.substr(10);
}

void load_checkpoint(const std::string& path, ScoreNet& net) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string header;
  std::getline(is, header);
  if (header.rfind("ssenet v1 ", 0) != 0)
    throw std::runtime_error("load_checkpoint: bad header");
  const std::string digest = header.substr(10);
  if (digest != net.config().digest())
    throw std::runtime_error("load_checkpoint: config digest mismatch (" +
                             digest + " vs " + net.config().digest() + ")");

  while (true) {
    std::uint32_t name_len = rd_u32(is);
    if (!is) break;
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    std::uint32_t rank = rd_u32(is);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(rd_u32(is));
    std::size_t n = nn::Tensor::numel_of(shape);
    std::vector<double> vals(n);
    for (auto& v : vals) {
      float f;
      is.read(reinterpret_cast<char*>(&f), 4);
      v = f;
    }
    if (!is) throw std::runtime_error("load_checkpoint: truncated record");

    const bool is_ema = name.rfind("ema/", 0) == 0;
    const std::string base = is_ema ? name.substr(4) : name;
    bool found = false;
    for (auto& [pn, p] : net.params()) {
      if (pn != base) continue;
      if (p->v.shape != shape)
        throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
      if (is_ema) {
        net.ema()[base].shape = shape;
        net.ema()[base].d = vals;
      } else {
        p->v.d = vals;
      }
      found = true;
      break;
    }
    if (!found)
      throw std::runtime_error("load_checkpoint: unknown tensor " + name);
  }
}

}  // namespace sse
