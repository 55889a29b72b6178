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

#include "flowgate/explain.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace flowgate::explain {
namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one_fraction * path[i].weight * (i + 1) / (depth + 1.0);
    path[i].weight = zero_fraction * path[i].weight * (depth - i) / (depth + 1.0);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next_one * (depth + 1.0) / ((i + 1.0) * one);
      next_one = tmp - path[i].weight * zero * (depth - i) / (depth + 1.0);
    } else {
      path[i].weight = path[i].weight * (depth + 1.0) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight of the path with element `index` removed.
double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one = path[depth].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next_one * (depth + 1.0) / ((i + 1.0) * one);
      total += tmp;
      next_one = path[i].weight - tmp * zero * (depth - i) / (depth + 1.0);
    } else if (zero != 0.0) {
      total += path[i].weight / zero / ((depth - i) / (depth + 1.0));
    }
  }
  return total;
}

class TreeShapRunner {
 public:
  TreeShapRunner(const models::DecisionTree& tree, std::span<const double> x,
                 std::span<double> phi, std::size_t num_features, double scale)
      : nodes_(tree.nodes()), x_(x), phi_(phi), d_(num_features), scale_(scale) {
    const int depth = tree.depth();
    buffer_.resize(static_cast<std::size_t>((depth + 2) * (depth + 3) / 2));
  }

  void run() { recurse(0, buffer_.data(), 0, 1.0, 1.0, -1); }

 private:
  void recurse(int n, PathElement* parent, int depth, double zero_fraction,
               double one_fraction, int feature) {
    PathElement* path = parent + depth + 1;
    std::copy(parent, parent + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);
    const models::TreeNode& node = nodes_[n];

    if (node.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        const PathElement& el = path[i];
        const double contrib = w * (el.one_fraction - el.zero_fraction) * scale_;
        for (std::size_t o = 0; o < node.value.size(); ++o) {
          phi_[o * d_ + static_cast<std::size_t>(el.feature)] += contrib * node.value[o];
        }
      }
      return;
    }

    const int hot = x_[node.feature] < node.threshold ? node.left : node.right;
    const int cold = hot == node.left ? node.right : node.left;
    const double hot_fraction = nodes_[hot].cover / node.cover;
    const double cold_fraction = nodes_[cold].cover / node.cover;
    double incoming_zero = 1.0, incoming_one = 1.0;

    // A feature already on the path is folded into one element.
    int k = 1;
    for (; k <= depth; ++k) {
      if (path[k].feature == node.feature) break;
    }
    if (k <= depth) {
      incoming_zero = path[k].zero_fraction;
      incoming_one = path[k].one_fraction;
      unwind_path(path, depth, k);
      --depth;
    }
    recurse(hot, path, depth + 1, hot_fraction * incoming_zero, incoming_one, node.feature);
    recurse(cold, path, depth + 1, cold_fraction * incoming_zero, 0.0, node.feature);
  }

  const std::vector<models::TreeNode>& nodes_;
  std::span<const double> x_;
  std::span<double> phi_;
  std::size_t d_;
  double scale_;
  std::vector<PathElement> buffer_;
};

void check_covers(const models::DecisionTree& tree) {
  for (const auto& node : tree.nodes()) {
    if (!(node.cover > 0.0)) throw Error("treeshap: tree node lacks cover statistics");
  }
}

double node_expectation(const std::vector<models::TreeNode>& nodes, int n, std::size_t o) {
  const auto& node = nodes[n];
  if (node.is_leaf()) return node.value[o];
  return (nodes[node.left].cover * node_expectation(nodes, node.left, o) +
          nodes[node.right].cover * node_expectation(nodes, node.right, o)) /
         node.cover;
}

ShapExplanation make_explanation(std::size_t rows, std::size_t classes, std::size_t features) {
  ShapExplanation e;
  e.num_rows = rows;
  e.num_classes = classes;
  e.num_features = features;
  e.values.assign(rows * classes * features, 0.0);
  e.base_values.assign(classes, 0.0);
  e.row_index.resize(rows);
  std::iota(e.row_index.begin(), e.row_index.end(), 0);
  return e;
}

void check_width(const Matrix& x, std::size_t expected) {
  if (x.rows() > 0 && x.cols() != expected) {
    throw Error("explain: model expects " + std::to_string(expected) + " features, got " +
                std::to_string(x.cols()));
  }
}

}  // namespace

double ShapExplanation::reconstructed_margin(std::size_t r, std::size_t c) const {
  double s = base_values[c];
  for (std::size_t f = 0; f < num_features; ++f) s += at(r, c, f);
  return s;
}

void tree_shap(const models::DecisionTree& tree, std::span<const double> x,
               std::span<double> phi, std::size_t num_features, double scale) {
  TreeShapRunner(tree, x, phi, num_features, scale).run();
}

std::vector<double> expected_value(const models::DecisionTree& tree) {
  check_covers(tree);
  std::vector<double> out(tree.output_dim());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = node_expectation(tree.nodes(), 0, o);
  return out;
}

ShapExplanation treeshap(const models::GbdtModel& model, const Matrix& x, int threads) {
  check_width(x, model.num_features);
  const std::size_t C = model.num_classes, d = model.num_features;
  ShapExplanation e = make_explanation(x.rows(), C, d);
  e.base_values = model.base_score;
  for (const auto& round : model.rounds) {
    for (std::size_t c = 0; c < C; ++c) {
      e.base_values[c] += model.learning_rate * expected_value(round[c])[0];
    }
  }
  parallel_for(x.rows(), threads, [&](std::size_t r) {
    const auto row = x.row(r);
    for (const auto& round : model.rounds) {
      for (std::size_t c = 0; c < C; ++c) {
        std::span<double> phi(e.values.data() + (r * C + c) * d, d);
        tree_shap(round[c], row, phi, d, model.learning_rate);
      }
    }
  });
  return e;
}

ShapExplanation treeshap(const models::RandomForestModel& model, const Matrix& x,
                         int threads) {
  check_width(x, model.num_features);
  const std::size_t C = model.num_classes, d = model.num_features;
  ShapExplanation e = make_explanation(x.rows(), C, d);
  if (model.trees.empty()) return e;
  const double scale = 1.0 / static_cast<double>(model.trees.size());
  for (const auto& tree : model.trees) {
    const auto ev = expected_value(tree);
    for (std::size_t c = 0; c < C; ++c) e.base_values[c] += scale * ev[c];
  }
  parallel_for(x.rows(), threads, [&](std::size_t r) {
    const auto row = x.row(r);
    // Per-row slice is already [class][feature], matching the [output][feature]
    // layout tree_shap accumulates into.
    std::span<double> phi(e.values.data() + r * C * d, C * d);
    for (const auto& tree : model.trees) tree_shap(tree, row, phi, d, scale);
  });
  return e;
}

ShapExplanation linear_shap(const models::LogisticModel& model, const Matrix& x,
                            std::span<const double> background) {
  check_width(x, model.num_features);
  const std::size_t C = model.num_classes, d = model.num_features;
  if (background.size() != d) throw Error("linear_shap: background has wrong dimension");
  ShapExplanation e = make_explanation(x.rows(), C, d);
  for (std::size_t c = 0; c < C; ++c) {
    double base = model.bias[c];
    for (std::size_t j = 0; j < d; ++j) base += model.weights(c, j) * background[j];
    e.base_values[c] = base;
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        e.at(r, c, j) = model.weights(c, j) * (x(r, j) - background[j]);
      }
    }
  }
  return e;
}

ShapExplanation explain_model(const models::Model& model, const Matrix& x,
                              std::span<const double> background, int threads) {
  return std::visit(
      [&](const auto& m) -> ShapExplanation {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, models::LogisticModel>) {
          return linear_shap(m, x, background);
        } else {
          return treeshap(m, x, threads);
        }
      },
      model.variant());
}

GiniImportance gini_importance(std::span<const models::DecisionTree> trees,
                               std::size_t num_features) {
  GiniImportance g;
  g.values.assign(num_features, 0.0);
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes()) {
      if (!node.is_leaf()) g.values[static_cast<std::size_t>(node.feature)] += node.gain;
    }
  }
  const double total = std::accumulate(g.values.begin(), g.values.end(), 0.0);
  if (total > 0.0) {
    for (double& v : g.values) v /= total;
  } else {
    g.no_splits = true;
  }
  return g;
}

GiniImportance gini_importance(const models::GbdtModel& model) {
  std::vector<models::DecisionTree> all;
  for (const auto& round : model.rounds) all.insert(all.end(), round.begin(), round.end());
  return gini_importance(all, model.num_features);
}

GiniImportance gini_importance(const models::RandomForestModel& model) {
  return gini_importance(model.trees, model.num_features);
}

std::vector<std::size_t> ImportanceSummary::ranked() const {
  std::vector<std::size_t> order(global.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return global[a] > global[b]; });
  return order;
}

nlohmann::json ImportanceSummary::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t f : ranked()) {
    nlohmann::json pc = nlohmann::json::object();
    for (std::size_t c = 0; c < class_names.size(); ++c) pc[class_names[c]] = per_class[f][c];
    nlohmann::json item = {{"feature", feature_names[f]}, {"global", global[f]},
                           {"per_class", std::move(pc)}};
    if (!gini.empty()) item["gini"] = gini[f];
    features.push_back(std::move(item));
  }
  return {{"features", std::move(features)}, {"gini_no_splits", gini_no_splits}};
}

ImportanceSummary aggregate_importance(const ShapExplanation& e,
                                       std::vector<std::string> feature_names,
                                       std::vector<std::string> class_names) {
  if (feature_names.size() != e.num_features || class_names.size() != e.num_classes) {
    throw Error("aggregate_importance: name counts do not match the explanation");
  }
  ImportanceSummary s;
  s.feature_names = std::move(feature_names);
  s.class_names = std::move(class_names);
  s.global.assign(e.num_features, 0.0);
  s.per_class.assign(e.num_features, std::vector<double>(e.num_classes, 0.0));
  if (e.num_rows == 0) return s;
  for (std::size_t r = 0; r < e.num_rows; ++r) {
    for (std::size_t c = 0; c < e.num_classes; ++c) {
      for (std::size_t f = 0; f < e.num_features; ++f) s.per_class[f][c] += std::abs(e.at(r, c, f));
    }
  }
  const double rows = static_cast<double>(e.num_rows);
  for (std::size_t f = 0; f < e.num_features; ++f) {
    double sum = 0.0;
    for (double& v : s.per_class[f]) {
      sum += v;
      v /= rows;
    }
    s.global[f] = sum / (rows * static_cast<double>(e.num_classes));
  }
  return s;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) rank[order[t]] = r;
    i = j;
  }
  return rank;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("spearman: length mismatch");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

nlohmann::json ImportanceComparison::to_json() const {
  return {{"top_k", top_k},
          {"top_shap", top_shap},
          {"top_gini", top_gini},
          {"intersection", intersection},
          {"spearman", std::isfinite(spearman) ? nlohmann::json(spearman) : nlohmann::json()}};
}

ImportanceComparison compare_importance(std::span<const double> shap,
                                        std::span<const double> gini,
                                        const std::vector<std::string>& feature_names,
                                        std::size_t top_k) {
  if (shap.size() != gini.size() || shap.size() != feature_names.size()) {
    throw Error("compare_importance: feature universes differ");
  }
  auto top = [&](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    order.resize(std::min(top_k, order.size()));
    return order;
  };
  ImportanceComparison out;
  out.top_k = std::min(top_k, shap.size());
  const auto ts = top(shap), tg = top(gini);
  for (std::size_t f : ts) out.top_shap.push_back(feature_names[f]);
  for (std::size_t f : tg) out.top_gini.push_back(feature_names[f]);
  for (std::size_t f : ts) {
    if (std::find(tg.begin(), tg.end(), f) != tg.end()) out.intersection.push_back(feature_names[f]);
  }
  out.spearman = shap.size() < 2 ? std::nan("") : spearman(shap, gini);
  return out;
}

void write_shap_csv(std::ostream& out, const ShapExplanation& e,
                    const std::vector<std::string>& feature_names,
                    const std::vector<std::string>& class_names) {
  out << "row,class,feature,value\n";
  char buf[64];
  for (std::size_t r = 0; r < e.num_rows; ++r) {
    for (std::size_t c = 0; c < e.num_classes; ++c) {
      for (std::size_t f = 0; f < e.num_features; ++f) {
        auto res = std::to_chars(buf, buf + sizeof buf, e.at(r, c, f));
        out << e.row_index[r] << ',' << class_names[c] << ',' << feature_names[f] << ','
            << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
      }
    }
  }
}

}  // namespace flowgate::explain
