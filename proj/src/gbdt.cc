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

#include "flowgate/gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace flowgate::models {

BinMapper BinMapper::fit(const Matrix& x, int max_bins) {
  if (max_bins < 2 || max_bins > 256) throw Error("BinMapper: max_bins must be in [2, 256]");
  BinMapper m;
  m.cuts_.resize(x.cols());
  const std::size_t n = x.rows();
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto col = x.column(j);
    if (col.empty()) continue;
    std::sort(col.begin(), col.end());
    std::vector<double> distinct = col;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> cuts;
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      cuts.assign(distinct.begin() + 1, distinct.end());
    } else {
      for (int b = 1; b < max_bins; ++b) {
        cuts.push_back(col[static_cast<std::size_t>(b) * n / static_cast<std::size_t>(max_bins)]);
      }
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                                [&](double c) { return c <= col.front(); }),
                 cuts.end());
    }
    m.cuts_[j] = std::move(cuts);
  }
  return m;
}

std::uint8_t BinMapper::bin(std::size_t feature, double value) const {
  const auto& c = cuts_[feature];
  return static_cast<std::uint8_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

namespace {

struct HistBin {
  double g = 0.0;
  double h = 0.0;
  double n = 0.0;
};

// Histogram of one node: [feature][bin].
using Histogram = std::vector<std::vector<HistBin>>;

struct SplitCandidate {
  int feature = -1;
  int bin = -1;  // left = bins <= bin
  double gain = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<std::uint8_t>>& bins, const BinMapper& mapper,
             const std::vector<double>& grad, const std::vector<double>& hess,
             const GbdtParams& params)
      : bins_(bins), mapper_(mapper), grad_(grad), hess_(hess), params_(params) {}

  // Grows one tree over `rows`; writes each row's leaf weight to leaf_out.
  DecisionTree grow(std::vector<std::size_t> rows, std::vector<double>& leaf_out) {
    nodes_.clear();
    leaf_out_ = &leaf_out;
    Histogram hist = build_histogram(rows);
    grow_node(rows, hist, 0);
    return DecisionTree(std::move(nodes_), 1);
  }

 private:
  double leaf_weight(double g, double h) const { return -g / (h + params_.lambda); }
  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  Histogram build_histogram(const std::vector<std::size_t>& rows) const {
    Histogram hist(bins_.size());
    for (std::size_t f = 0; f < bins_.size(); ++f) {
      auto& hf = hist[f];
      hf.assign(mapper_.cuts(f).size() + 1, HistBin{});
      const auto& col = bins_[f];
      for (std::size_t r : rows) {
        HistBin& b = hf[col[r]];
        b.g += grad_[r];
        b.h += hess_[r];
        b.n += 1.0;
      }
    }
    return hist;
  }

  SplitCandidate best_split(const Histogram& hist, double G, double H) const {
    SplitCandidate best;
    const double parent = score(G, H);
    for (std::size_t f = 0; f < hist.size(); ++f) {
      const auto& hf = hist[f];
      double gl = 0, hl = 0, nl = 0;
      double total_n = 0;
      for (const auto& b : hf) total_n += b.n;
      for (std::size_t b = 0; b + 1 < hf.size(); ++b) {
        gl += hf[b].g;
        hl += hf[b].h;
        nl += hf[b].n;
        const double gr = G - gl, hr = H - hl, nr = total_n - nl;
        if (nl < 1 || nr < 1) continue;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent);
        if (gain - params_.min_split_gain > 1e-12 && gain > best.gain) {
          best = {static_cast<int>(f), static_cast<int>(b), gain};
        }
      }
    }
    return best;
  }

  int grow_node(const std::vector<std::size_t>& rows, const Histogram& hist, int depth) {
    double G = 0, H = 0;
    for (std::size_t r : rows) {
      G += grad_[r];
      H += hess_[r];
    }
    const int id = static_cast<int>(nodes_.size());
    TreeNode node;
    node.value = {leaf_weight(G, H)};
    node.cover = static_cast<double>(rows.size());
    nodes_.push_back(node);

    SplitCandidate split;
    if (depth < params_.max_depth && rows.size() >= 2) split = best_split(hist, G, H);
    if (split.feature < 0) {
      for (std::size_t r : rows) (*leaf_out_)[r] = nodes_[id].value[0];
      return id;
    }

    std::vector<std::size_t> left, right;
    const auto& col = bins_[split.feature];
    for (std::size_t r : rows) {
      (col[r] <= split.bin ? left : right).push_back(r);
    }
    // Histogram subtraction: scan only the smaller child.
    const bool left_small = left.size() <= right.size();
    Histogram small = build_histogram(left_small ? left : right);
    Histogram large = hist;
    for (std::size_t f = 0; f < large.size(); ++f) {
      for (std::size_t b = 0; b < large[f].size(); ++b) {
        large[f][b].g -= small[f][b].g;
        large[f][b].h -= small[f][b].h;
        large[f][b].n -= small[f][b].n;
      }
    }
    const Histogram& hl = left_small ? small : large;
    const Histogram& hr = left_small ? large : small;

    nodes_[id].feature = split.feature;
    nodes_[id].threshold = mapper_.cuts(split.feature)[split.bin];
    nodes_[id].gain = split.gain;
    const int l = grow_node(left, hl, depth + 1);
    const int r = grow_node(right, hr, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const std::vector<std::vector<std::uint8_t>>& bins_;
  const BinMapper& mapper_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  const GbdtParams& params_;
  std::vector<TreeNode> nodes_;
  std::vector<double>* leaf_out_ = nullptr;
};

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

Matrix GbdtModel::margins(const Matrix& x) const {
  if (x.cols() != num_features && x.rows() > 0) {
    throw Error("gbdt: expected " + std::to_string(num_features) + " features");
  }
  Matrix out(x.rows(), num_classes);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < num_classes; ++c) out(r, c) = base_score[c];
  }
  // Tree-major traversal keeps one tree hot in cache across all rows.
  for (const auto& round : rounds) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      const auto& nodes = round[c].nodes();
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* row = x.row(r).data();
        int n = 0;
        while (nodes[n].feature >= 0) {
          n = row[nodes[n].feature] < nodes[n].threshold ? nodes[n].left : nodes[n].right;
        }
        out(r, c) += learning_rate * nodes[n].value[0];
      }
    }
  }
  return out;
}

std::vector<double> GbdtModel::margin_row(std::span<const double> x) const {
  std::vector<double> out = base_score;
  for (const auto& round : rounds) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      out[c] += learning_rate * round[c].predict(x)[0];
    }
  }
  return out;
}

nlohmann::json GbdtModel::to_json() const {
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& round : rounds) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : round) trees.push_back(t.to_json());
    jr.push_back(std::move(trees));
  }
  return {{"num_classes", num_classes},
          {"num_features", num_features},
          {"learning_rate", learning_rate},
          {"base_score", base_score},
          {"params",
           {{"rounds", params.rounds},
            {"max_depth", params.max_depth},
            {"learning_rate", params.learning_rate},
            {"lambda", params.lambda},
            {"min_child_weight", params.min_child_weight},
            {"min_split_gain", params.min_split_gain},
            {"max_bins", params.max_bins}}},
          {"rounds", std::move(jr)}};
}

GbdtModel GbdtModel::from_json(const nlohmann::json& j) {
  GbdtModel m;
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.num_features = j.at("num_features").get<std::size_t>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.base_score = j.at("base_score").get<std::vector<double>>();
  const auto& p = j.at("params");
  m.params.rounds = p.at("rounds").get<int>();
  m.params.max_depth = p.at("max_depth").get<int>();
  m.params.learning_rate = p.at("learning_rate").get<double>();
  m.params.lambda = p.at("lambda").get<double>();
  m.params.min_child_weight = p.at("min_child_weight").get<double>();
  m.params.min_split_gain = p.at("min_split_gain").get<double>();
  m.params.max_bins = p.at("max_bins").get<int>();
  for (const auto& jr : j.at("rounds")) {
    std::vector<DecisionTree> round;
    for (const auto& jt : jr) round.push_back(DecisionTree::from_json(jt));
    if (round.size() != m.num_classes) throw Error("gbdt JSON: round size mismatch");
    m.rounds.push_back(std::move(round));
  }
  return m;
}

GbdtModel train_gbdt(const Matrix& x, std::span<const ClassId> y, std::size_t num_classes,
                     const GbdtParams& params, std::uint64_t /*seed*/) {
  const std::size_t n = x.rows();
  if (n != y.size()) throw Error("train_gbdt: row/label count mismatch");
  if (std::set<ClassId>(y.begin(), y.end()).size() < 2) {
    throw Error("train_gbdt: training data must contain at least 2 classes");
  }
  if (params.max_depth < 0 || params.rounds < 0) throw Error("train_gbdt: bad parameters");

  GbdtModel model;
  model.num_classes = num_classes;
  model.num_features = x.cols();
  model.learning_rate = params.learning_rate;
  model.params = params;

  std::vector<double> counts(num_classes, 0.0);
  for (ClassId c : y) counts.at(c) += 1.0;
  model.base_score.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double p = (counts[c] > 0 ? counts[c] : 0.5) / static_cast<double>(n);
    model.base_score[c] = std::log(p);
  }

  const BinMapper mapper = BinMapper::fit(x, params.max_bins);
  std::vector<std::vector<std::uint8_t>> bins(x.cols(), std::vector<std::uint8_t>(n));
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t r = 0; r < n; ++r) bins[f][r] = mapper.bin(f, x(r, f));
  }

  Matrix margin(n, num_classes);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < num_classes; ++c) margin(r, c) = model.base_score[c];
  }
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  Matrix prob(n, num_classes);
  std::vector<std::vector<double>> grad(num_classes, std::vector<double>(n)),
      hess(num_classes, std::vector<double>(n)), leaf(num_classes, std::vector<double>(n));

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      auto p = prob.row(r);
      auto m = margin.row(r);
      std::copy(m.begin(), m.end(), p.begin());
      softmax_inplace(p);
      for (std::size_t c = 0; c < num_classes; ++c) {
        const double target = y[r] == c ? 1.0 : 0.0;
        grad[c][r] = p[c] - target;
        hess[c][r] = std::max(p[c] * (1.0 - p[c]), 1e-16);
      }
    }
    std::vector<DecisionTree> trees(num_classes);
    parallel_for(num_classes, params.threads, [&](std::size_t c) {
      TreeGrower grower(bins, mapper, grad[c], hess[c], params);
      trees[c] = grower.grow(all_rows, leaf[c]);
    });
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < num_classes; ++c) {
        margin(r, c) += params.learning_rate * leaf[c][r];
      }
    }
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

}  // namespace flowgate::models
