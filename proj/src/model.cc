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

#include "flowgate/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace flowgate::models {
namespace {

constexpr const char* kFormat = "flowgate-model";
constexpr int kVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::kGbdt: return "gbdt";
    case Family::kRandomForest: return "random_forest";
    case Family::kLogistic: return "logistic";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  if (text == "gbdt" || text == "xgboost") return Family::kGbdt;
  if (text == "random_forest" || text == "rf") return Family::kRandomForest;
  if (text == "logistic" || text == "logreg") return Family::kLogistic;
  throw Error("unknown model family: " + text);
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j = {{"family", to_string(family)}};
  switch (family) {
    case Family::kGbdt:
      j["rounds"] = gbdt.rounds;
      j["max_depth"] = gbdt.max_depth;
      j["learning_rate"] = gbdt.learning_rate;
      j["lambda"] = gbdt.lambda;
      j["min_child_weight"] = gbdt.min_child_weight;
      j["min_split_gain"] = gbdt.min_split_gain;
      j["max_bins"] = gbdt.max_bins;
      break;
    case Family::kRandomForest:
      j["trees"] = forest.trees;
      j["max_depth"] = forest.max_depth;
      j["bootstrap"] = forest.bootstrap;
      j["bootstrap_fraction"] = forest.bootstrap_fraction;
      j["max_features"] = forest.max_features;
      j["min_samples_split"] = forest.min_samples_split;
      break;
    case Family::kLogistic:
      j["l2"] = logistic.l2;
      j["max_iterations"] = logistic.max_iterations;
      j["tolerance"] = logistic.tolerance;
      j["memory"] = logistic.memory;
      break;
  }
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  switch (s.family) {
    case Family::kGbdt:
      get("rounds", s.gbdt.rounds);
      get("max_depth", s.gbdt.max_depth);
      get("learning_rate", s.gbdt.learning_rate);
      get("lambda", s.gbdt.lambda);
      get("min_child_weight", s.gbdt.min_child_weight);
      get("min_split_gain", s.gbdt.min_split_gain);
      get("max_bins", s.gbdt.max_bins);
      if (s.gbdt.max_bins < 2 || s.gbdt.max_bins > 256) {
        throw Error("gbdt max_bins must be in [2, 256]");
      }
      break;
    case Family::kRandomForest:
      get("trees", s.forest.trees);
      get("max_depth", s.forest.max_depth);
      get("bootstrap", s.forest.bootstrap);
      get("bootstrap_fraction", s.forest.bootstrap_fraction);
      get("max_features", s.forest.max_features);
      get("min_samples_split", s.forest.min_samples_split);
      break;
    case Family::kLogistic:
      get("l2", s.logistic.l2);
      get("max_iterations", s.logistic.max_iterations);
      get("tolerance", s.logistic.tolerance);
      get("memory", s.logistic.memory);
      break;
  }
  return s;
}

Family Model::family() const {
  return std::visit(Overloaded{[](const GbdtModel&) { return Family::kGbdt; },
                               [](const RandomForestModel&) { return Family::kRandomForest; },
                               [](const LogisticModel&) { return Family::kLogistic; }},
                    v_);
}

std::size_t Model::num_classes() const {
  return std::visit([](const auto& m) { return m.num_classes; }, v_);
}

std::size_t Model::num_features() const {
  return std::visit([](const auto& m) { return m.num_features; }, v_);
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

Matrix Model::predict_proba(const Matrix& x) const {
  if (x.cols() != num_features()) {
    throw Error("predict_proba: model expects " + std::to_string(num_features()) +
                " features, got " + std::to_string(x.cols()));
  }
  return std::visit(Overloaded{[&](const RandomForestModel& m) { return m.predict_proba(x); },
                               [&](const auto& m) {
                                 Matrix p = m.margins(x);
                                 softmax_rows(p);
                                 return p;
                               }},
                    v_);
}

std::vector<ClassId> Model::predict(const Matrix& x) const {
  const Matrix p = predict_proba(x);
  std::vector<ClassId> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    out[r] = static_cast<ClassId>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

nlohmann::json Model::to_json() const {
  return {{"format", kFormat},
          {"version", kVersion},
          {"kind", to_string(family())},
          {"model", std::visit([](const auto& m) { return m.to_json(); }, v_)}};
}

Model Model::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kFormat) throw Error("not a flowgate model document");
  if (j.at("version").get<int>() != kVersion) {
    throw Error("unsupported model version " + j.at("version").dump());
  }
  const auto& body = j.at("model");
  switch (parse_family(j.at("kind").get<std::string>())) {
    case Family::kGbdt: return Model(GbdtModel::from_json(body));
    case Family::kRandomForest: return Model(RandomForestModel::from_json(body));
    case Family::kLogistic: return Model(LogisticModel::from_json(body));
  }
  throw Error("unreachable model kind");
}

void Model::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json().dump() << '\n';
  if (!out) throw Error("write failed: " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return from_json(j);
}

TrainedModel train(const ModelSpec& spec, const Matrix& x, std::span<const ClassId> y,
                   std::size_t num_classes, std::uint64_t seed) {
  const double start = wall_seconds();
  TrainedModel out;
  switch (spec.family) {
    case Family::kGbdt: {
      GbdtParams p = spec.gbdt;
      p.threads = spec.threads;
      out.model = Model(train_gbdt(x, y, num_classes, p, seed));
      break;
    }
    case Family::kRandomForest: {
      ForestParams p = spec.forest;
      p.threads = spec.threads;
      out.model = Model(train_random_forest(x, y, num_classes, p, seed));
      break;
    }
    case Family::kLogistic:
      out.model = Model(train_logistic(x, y, num_classes, spec.logistic, seed));
      break;
  }
  out.training_seconds = wall_seconds() - start;
  return out;
}

Throughput measure_throughput(const Model& model, const Matrix& x, int repetitions,
                              double training_seconds) {
  Throughput t;
  t.training_seconds = training_seconds;
  t.rows = x.rows();
  if (x.rows() == 0 || repetitions <= 0) return t;
  for (int i = 0; i < repetitions; ++i) {
    const double start = wall_seconds();
    const auto labels = model.predict(x);
    const double elapsed = std::max(wall_seconds() - start, 1e-9);
    t.samples.push_back(static_cast<double>(labels.size()) / elapsed);
  }
  std::vector<double> sorted = t.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  t.predictions_per_second =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return t;
}

}  // namespace flowgate::models
