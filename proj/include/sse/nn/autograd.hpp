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

#ifndef SSE_NN_AUTOGRAD_HPP
#define SSE_NN_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <vector>

#include "sse/nn/tensor.hpp"

namespace sse::nn {

/// Node of the define-by-run tape. `back` reads this node's grad and
/// accumulates into the parents' grads.
struct Var {
  Tensor v;
  Tensor g;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Var>> prev;
  std::function<void(Var&)> back;

  void ensure_grad() {
    if (g.d.size() != v.d.size()) {
      g.shape = v.shape;
      g.d.assign(v.d.size(), 0.0);
    }
  }
  void zero_grad() {
    ensure_grad();
    std::fill(g.d.begin(), g.d.end(), 0.0);
  }
};

using VarPtr = std::shared_ptr<Var>;

inline VarPtr make_var(Tensor t, bool requires_grad = false) {
  auto v = std::make_shared<Var>();
  v->v = std::move(t);
  v->requires_grad = requires_grad;
  return v;
}

/// Reverse-mode sweep from a scalar root (grad seeded with 1).
void backward(const VarPtr& root);

}  // namespace sse::nn

#endif  // SSE_NN_AUTOGRAD_HPP
