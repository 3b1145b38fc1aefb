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

#include "sse/nn/autograd.hpp"

#include <stdexcept>
#include <unordered_set>

namespace sse::nn {

void backward(const VarPtr& root) {
  if (root->v.numel() != 1)
    throw std::runtime_error("backward: root must be scalar");

  // Iterative post-order topological sort, then reverse sweep.
  std::vector<Var*> order;
  std::unordered_set<Var*> visited;
  std::vector<std::pair<Var*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->prev.size()) {
      Var* child = node->prev[idx++].get();
      if (visited.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Var* n : order) n->ensure_grad();
  root->g.d[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->back) (*it)->back(**it);
}

}  // namespace sse::nn
