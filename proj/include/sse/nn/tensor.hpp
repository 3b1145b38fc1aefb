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

#ifndef SSE_NN_TENSOR_HPP
#define SSE_NN_TENSOR_HPP

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sse::nn {

/// Dense row-major tensor of doubles. Activations are [C, T, F]; conv kernels
/// [C_out, C_in, k_t, k_f]; vectors [n].
struct Tensor {
  std::vector<int> shape;
  std::vector<double> d;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    d.assign(numel_of(shape), 0.0);
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int v : s) {
      if (v <= 0) throw std::runtime_error("Tensor: nonpositive dim");
      n *= static_cast<std::size_t>(v);
    }
    return s.empty() ? 0 : n;
  }

  std::size_t numel() const { return d.size(); }

  // 3D accessors for [C, T, F].
  double& at3(int c, int t, int f) {
    return d[(static_cast<std::size_t>(c) * shape[1] + t) * shape[2] + f];
  }
  double at3(int c, int t, int f) const {
    return d[(static_cast<std::size_t>(c) * shape[1] + t) * shape[2] + f];
  }
  // 4D accessors for [O, I, kt, kf].
  double& at4(int o, int i, int a, int b) {
    return d[((static_cast<std::size_t>(o) * shape[1] + i) * shape[2] + a) *
                 shape[3] +
             b];
  }
  double at4(int o, int i, int a, int b) const {
    return d[((static_cast<std::size_t>(o) * shape[1] + i) * shape[2] + a) *
                 shape[3] +
             b];
  }
};

}  // namespace sse::nn

#endif  // SSE_NN_TENSOR_HPP
