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

#include "flowgate/random_forest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace flowgate::models {
namespace {

class ClassificationTreeBuilder {
 public:
  ClassificationTreeBuilder(const Matrix& x, std::span<const ClassId> y,
                            const std::vector<double>& weight, std::size_t num_classes,
                            const ForestParams& params, std::size_t mtry, Rng& rng)
      : x_(x), y_(y), w_(weight), classes_(num_classes), params_(params), mtry_(mtry),
        rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return DecisionTree(std::move(nodes_), classes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
  };

  int grow(std::vector<std::size_t>& rows, int depth) {
    std::vector<double> counts(classes_, 0.0);
    double total = 0.0;
    for (std::size_t r : rows) {
      counts[y_[r]] += w_[r];
      total += w_[r];
    }
    const int id = static_cast<int>(nodes_.size());
    TreeNode node;
    node.cover = total;
    node.value.resize(classes_);
    for (std::size_t c = 0; c < classes_; ++c) node.value[c] = counts[c] / total;
    nodes_.push_back(std::move(node));

    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_ok = params_.max_depth <= 0 || depth < params_.max_depth;
    if (pure || !depth_ok || rows.size() < 2 || total < params_.min_samples_split) {
      return id;
    }
    const Split split = find_split(rows, counts, total);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(r, split.feature) < split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    nodes_[id].gain = split.decrease;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& rows, const std::vector<double>& counts,
                   double total) {
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);

    double parent_sq = 0.0;
    for (double c : counts) parent_sq += c * c;

    Split best;
    std::size_t examined = 0;
    std::vector<std::pair<double, std::size_t>> sorted(rows.size());
    std::vector<double> left(classes_);
    for (std::size_t f : features) {
      if (examined >= mtry_) break;
      for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {x_(rows[i], f), rows[i]};
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant here
      ++examined;

      std::fill(left.begin(), left.end(), 0.0);
      double wl = 0.0, left_sq = 0.0, right_sq = parent_sq;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t r = sorted[i].second;
        const double w = w_[r];
        const ClassId k = y_[r];
        const double right_k = counts[k] - left[k];
        left_sq += 2.0 * left[k] * w + w * w;
        right_sq += -2.0 * right_k * w + w * w;
        left[k] += w;
        wl += w;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double wr = total - wl;
        // Weighted Gini decrease: sum c_L^2/W_L + sum c_R^2/W_R - sum c^2/W.
        const double decrease = left_sq / wl + right_sq / wr - parent_sq / total;
        if (decrease > best.decrease + 1e-12) {
          const double a = sorted[i].first, b = sorted[i + 1].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid > a)) mid = b;
          best = {static_cast<int>(f), mid, decrease};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const ClassId> y_;
  const std::vector<double>& w_;
  std::size_t classes_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Matrix RandomForestModel::predict_proba(const Matrix& x) const {
  if (x.cols() != num_features && x.rows() > 0) {
    throw Error("random forest: expected " + std::to_string(num_features) + " features");
  }
  Matrix out(x.rows(), num_classes, 0.0);
  for (const auto& tree : trees) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto& v = tree.predict(x.row(r));
      for (std::size_t c = 0; c < num_classes; ++c) out(r, c) += v[c];
    }
  }
  const double inv = trees.empty() ? 0.0 : 1.0 / static_cast<double>(trees.size());
  for (double& v : out.data()) v *= inv;
  return out;
}

nlohmann::json RandomForestModel::to_json() const {
  nlohmann::json jt = nlohmann::json::array();
  for (const auto& t : trees) jt.push_back(t.to_json());
  return {{"num_classes", num_classes},
          {"num_features", num_features},
          {"params",
           {{"trees", params.trees},
            {"max_depth", params.max_depth},
            {"bootstrap", params.bootstrap},
            {"bootstrap_fraction", params.bootstrap_fraction},
            {"max_features", params.max_features},
            {"min_samples_split", params.min_samples_split}}},
          {"trees", std::move(jt)}};
}

RandomForestModel RandomForestModel::from_json(const nlohmann::json& j) {
  RandomForestModel m;
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.num_features = j.at("num_features").get<std::size_t>();
  const auto& p = j.at("params");
  m.params.trees = p.at("trees").get<int>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.bootstrap = p.at("bootstrap").get<bool>();
  m.params.bootstrap_fraction = p.at("bootstrap_fraction").get<double>();
  m.params.max_features = p.at("max_features").get<int>();
  m.params.min_samples_split = p.at("min_samples_split").get<int>();
  for (const auto& jt : j.at("trees")) m.trees.push_back(DecisionTree::from_json(jt));
  return m;
}

RandomForestModel train_random_forest(const Matrix& x, std::span<const ClassId> y,
                                      std::size_t num_classes, const ForestParams& params,
                                      std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (n != y.size()) throw Error("train_random_forest: row/label count mismatch");
  if (std::set<ClassId>(y.begin(), y.end()).size() < 2) {
    throw Error("train_random_forest: training data must contain at least 2 classes");
  }
  if (params.trees < 1) throw Error("train_random_forest: need at least one tree");
  RandomForestModel model;
  model.num_classes = num_classes;
  model.num_features = x.cols();
  model.params = params;
  const std::size_t mtry =
      params.max_features > 0
          ? std::min<std::size_t>(static_cast<std::size_t>(params.max_features), x.cols())
          : std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));

  model.trees.resize(static_cast<std::size_t>(params.trees));
  parallel_for(model.trees.size(), params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<double> weight(n, 0.0);
    if (params.bootstrap) {
      const std::size_t draws = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(params.bootstrap_fraction * n)));
      for (std::size_t i = 0; i < draws; ++i) weight[rng.uniform_below(n)] += 1.0;
    } else {
      std::fill(weight.begin(), weight.end(), 1.0);
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      if (weight[r] > 0) rows.push_back(r);
    }
    ClassificationTreeBuilder builder(x, y, weight, num_classes, params, mtry, rng);
    model.trees[t] = builder.build(std::move(rows));
  });
  return model;
}

}  // namespace flowgate::models
