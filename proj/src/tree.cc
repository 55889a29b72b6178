/*
 * Copyright 2026 The Flowgate Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "flowgate/tree.h"

#include <algorithm>
#include <cmath>

namespace flowgate::models {

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  // Children always follow their parent in the node array.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      best = std::max(best, d[i]);
      continue;
    }
    d[n.left] = d[i] + 1;
    d[n.right] = d[i] + 1;
  }
  return best;
}

std::size_t DecisionTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

void DecisionTree::validate() const {
  if (nodes_.empty()) throw Error("tree: no nodes");
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes_[i];
    if (node.value.size() != output_dim_) throw Error("tree: value size mismatch");
    if (node.is_leaf()) continue;
    if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
      throw Error("tree: bad child index");
    }
    const double sum = nodes_[node.left].cover + nodes_[node.right].cover;
    if (std::abs(sum - node.cover) > 1e-9 * std::max(1.0, node.cover)) {
      throw Error("tree: cover of children does not add up to parent cover");
    }
    if (node.gain < 0) throw Error("tree: negative split gain");
  }
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"value", n.value},
                     {"cover", n.cover},
                     {"gain", n.gain}});
  }
  return {{"output_dim", output_dim_}, {"nodes", std::move(nodes)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    n.value = jn.at("value").get<std::vector<double>>();
    n.cover = jn.at("cover").get<double>();
    n.gain = jn.at("gain").get<double>();
    nodes.push_back(std::move(n));
  }
  DecisionTree t(std::move(nodes), j.at("output_dim").get<std::size_t>());
  t.validate();
  return t;
}

}  // namespace flowgate::models
