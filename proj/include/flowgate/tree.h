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

#ifndef FLOWGATE_TREE_H_
#define FLOWGATE_TREE_H_

#include <span>
#include <vector>

#include "flowgate/common.h"
#include "json.hpp"

namespace flowgate::models {

struct TreeNode {
  // -1 marks a leaf.
  int feature = -1;
  // Go left iff x[feature] < threshold.
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaf output; one entry for regression trees, one per class for
  // classification trees. Internal nodes keep their would-be leaf value.
  std::vector<double> value;
  // Training rows (with bootstrap multiplicity) that reached the node.
  double cover = 0.0;
  // Impurity decrease (forest) or loss reduction (boosting) of the split;
  // zero for leaves.
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t output_dim)
      : nodes_(std::move(nodes)), output_dim_(output_dim) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }
  std::size_t output_dim() const { return output_dim_; }

  int leaf_index(std::span<const double> x) const {
    int n = 0;
    while (!nodes_[n].is_leaf()) {
      const TreeNode& node = nodes_[n];
      n = x[node.feature] < node.threshold ? node.left : node.right;
    }
    return n;
  }
  const std::vector<double>& predict(std::span<const double> x) const {
    return nodes_[leaf_index(x)].value;
  }

  // Longest root-to-leaf edge count.
  int depth() const;
  std::size_t num_leaves() const;

  // Checks child links, leaf value sizes and cover additivity
  // (parent cover = left + right within a relative 1e-9).
  void validate() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t output_dim_ = 1;
};

}  // namespace flowgate::models

#endif  // FLOWGATE_TREE_H_
