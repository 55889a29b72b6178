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

#include "flowgate/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "flowgate/preprocess.h"

namespace flowgate::metrics {
namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

// Means compared with this slack count as tied.
constexpr double kTieTolerance = 1e-12;

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  return std::accumulate(counts[c].begin(), counts[c].end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (const auto& row : counts) s += row[c];
  return s;
}

double ConfusionMatrix::per_class_accuracy(std::size_t c) const {
  return ratio(static_cast<double>(counts[c][c]), static_cast<double>(row_sum(c)));
}

nlohmann::json ConfusionMatrix::to_json() const {
  return {{"class_names", class_names}, {"counts", counts}};
}

ConfusionMatrix ConfusionMatrix::from_json(const nlohmann::json& j) {
  ConfusionMatrix cm;
  cm.class_names = j.at("class_names").get<std::vector<std::string>>();
  cm.counts = j.at("counts").get<std::vector<std::vector<std::uint64_t>>>();
  return cm;
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> truth,
                                 std::span<const ClassId> predictions, std::size_t num_classes,
                                 std::vector<std::string> class_names) {
  if (truth.size() != predictions.size()) {
    throw Error("confusion_matrix: truth and predictions differ in length");
  }
  ConfusionMatrix cm;
  cm.counts.assign(num_classes, std::vector<std::uint64_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predictions[i] >= num_classes) {
      throw Error("confusion_matrix: label out of range at row " + std::to_string(i));
    }
    ++cm.counts[truth[i]][predictions[i]];
  }
  if (class_names.empty()) {
    for (std::size_t c = 0; c < num_classes; ++c) class_names.push_back(std::to_string(c));
  }
  if (class_names.size() != num_classes) throw Error("confusion_matrix: class name count");
  cm.class_names = std::move(class_names);
  return cm;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  const std::size_t C = cm.num_classes();
  ClassificationMetrics m;
  m.precision.resize(C);
  m.recall.resize(C);
  m.f1.resize(C);
  m.support.resize(C);
  const double total = static_cast<double>(cm.total());
  double trace = 0.0;
  std::size_t macro_n = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    trace += tp;
    m.support[c] = cm.row_sum(c);
    m.precision[c] = ratio(tp, static_cast<double>(cm.col_sum(c)));
    m.recall[c] = ratio(tp, static_cast<double>(m.support[c]));
    m.f1[c] = ratio(2.0 * m.precision[c] * m.recall[c], m.precision[c] + m.recall[c]);
    const double w = ratio(static_cast<double>(m.support[c]), total);
    m.precision_weighted += w * m.precision[c];
    m.recall_weighted += w * m.recall[c];
    m.f1_weighted += w * m.f1[c];
    if (m.support[c] == 0) {
      m.excluded_from_macro.push_back(c);
      continue;
    }
    m.precision_macro += m.precision[c];
    m.recall_macro += m.recall[c];
    m.f1_macro += m.f1[c];
    ++macro_n;
  }
  m.accuracy = ratio(trace, total);
  const double n = static_cast<double>(macro_n);
  m.precision_macro = ratio(m.precision_macro, n);
  m.recall_macro = ratio(m.recall_macro, n);
  m.f1_macro = ratio(m.f1_macro, n);
  return m;
}

double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nan("");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1) / 2.0) / (p * static_cast<double>(neg));
}

RocAuc roc_auc_ovr(std::span<const ClassId> truth, const Matrix& probabilities) {
  if (truth.size() != probabilities.rows()) {
    throw Error("roc_auc_ovr: truth and probability rows differ");
  }
  const std::size_t n = truth.size(), C = probabilities.cols();
  RocAuc out;
  out.per_class.resize(C);
  std::vector<double> scores(n);
  std::vector<std::uint8_t> ind(n);
  double macro_sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      scores[r] = probabilities(r, c);
      ind[r] = truth[r] == c;
    }
    out.per_class[c] = binary_auc(scores, ind);
    if (std::isnan(out.per_class[c])) {
      out.undefined_classes.push_back(c);
    } else {
      macro_sum += out.per_class[c];
    }
  }
  const std::size_t defined = C - out.undefined_classes.size();
  out.macro = defined == 0 ? std::nan("") : macro_sum / static_cast<double>(defined);

  std::vector<std::uint8_t> flat_ind(n * C);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < C; ++c) flat_ind[r * C + c] = truth[r] == c;
  }
  out.micro = binary_auc(probabilities.data(), flat_ind);
  return out;
}

const char* to_string(Metric m) {
  switch (m) {
    case Metric::kF1Macro: return "f1_macro";
    case Metric::kAccuracy: return "accuracy";
    case Metric::kF1Weighted: return "f1_weighted";
    case Metric::kRocAucMacro: return "roc_auc_macro";
  }
  return "?";
}

Metric parse_metric(const std::string& text) {
  for (Metric m : {Metric::kF1Macro, Metric::kAccuracy, Metric::kF1Weighted,
                   Metric::kRocAucMacro}) {
    if (text == to_string(m)) return m;
  }
  throw Error("unknown metric: " + text);
}

double MetricBundle::value(Metric m) const {
  switch (m) {
    case Metric::kF1Macro: return f1_macro;
    case Metric::kAccuracy: return accuracy;
    case Metric::kF1Weighted: return f1_weighted;
    case Metric::kRocAucMacro: return roc_auc_macro;
  }
  return 0.0;
}

nlohmann::json MetricBundle::to_json(bool include_timing) const {
  auto finite_or_null = [](double v) -> nlohmann::json {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  nlohmann::json j = {{"accuracy", accuracy},
                      {"f1_macro", f1_macro},
                      {"f1_weighted", f1_weighted},
                      {"precision_macro", precision_macro},
                      {"recall_macro", recall_macro},
                      {"roc_auc_per_class", roc_auc_per_class},
                      {"roc_auc_undefined", roc_auc_undefined},
                      {"roc_auc_micro", finite_or_null(roc_auc_micro)},
                      {"roc_auc_macro", finite_or_null(roc_auc_macro)},
                      {"confusion_matrix", confusion.to_json()}};
  if (include_timing) {
    j["training_time_s"] = training_time_s;
    j["predictions_per_s"] = predictions_per_s;
  }
  return j;
}

MetricBundle MetricBundle::from_json(const nlohmann::json& j) {
  auto number = [](const nlohmann::json& v) {
    return v.is_null() ? std::nan("") : v.get<double>();
  };
  MetricBundle b;
  b.accuracy = j.at("accuracy").get<double>();
  b.f1_macro = j.at("f1_macro").get<double>();
  b.f1_weighted = j.at("f1_weighted").get<double>();
  b.precision_macro = j.at("precision_macro").get<double>();
  b.recall_macro = j.at("recall_macro").get<double>();
  b.roc_auc_per_class = j.at("roc_auc_per_class").get<std::map<std::string, double>>();
  b.roc_auc_undefined = j.at("roc_auc_undefined").get<std::vector<std::string>>();
  b.roc_auc_micro = number(j.at("roc_auc_micro"));
  b.roc_auc_macro = number(j.at("roc_auc_macro"));
  b.training_time_s = j.value("training_time_s", 0.0);
  b.predictions_per_s = j.value("predictions_per_s", 0.0);
  b.confusion = ConfusionMatrix::from_json(j.at("confusion_matrix"));
  return b;
}

MetricBundle evaluate(std::span<const ClassId> truth, const Matrix& probabilities,
                      const std::vector<std::string>& class_names) {
  const std::size_t C = probabilities.cols();
  std::vector<ClassId> pred(probabilities.rows());
  for (std::size_t r = 0; r < pred.size(); ++r) {
    auto row = probabilities.row(r);
    pred[r] = static_cast<ClassId>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  MetricBundle b;
  b.confusion = confusion_matrix(truth, pred, C, class_names);
  const auto m = classification_metrics(b.confusion);
  b.accuracy = m.accuracy;
  b.f1_macro = m.f1_macro;
  b.f1_weighted = m.f1_weighted;
  b.precision_macro = m.precision_macro;
  b.recall_macro = m.recall_macro;
  const RocAuc auc = roc_auc_ovr(truth, probabilities);
  for (std::size_t c = 0; c < C; ++c) {
    if (std::isnan(auc.per_class[c])) {
      b.roc_auc_undefined.push_back(b.confusion.class_names[c]);
    } else {
      b.roc_auc_per_class[b.confusion.class_names[c]] = auc.per_class[c];
    }
  }
  b.roc_auc_micro = auc.micro;
  b.roc_auc_macro = auc.macro;
  return b;
}

nlohmann::json CvSummary::to_json() const {
  return {{"metric", metric},          {"fold_scores", fold_scores},
          {"mean", mean},              {"stddev", stddev},
          {"t_quantile", t_quantile},  {"ci_half_width", ci_half_width},
          {"confidence", confidence},  {"warnings", warnings}};
}

CvSummary CvSummary::from_json(const nlohmann::json& j) {
  CvSummary s;
  s.metric = j.at("metric").get<std::string>();
  s.fold_scores = j.at("fold_scores").get<std::vector<double>>();
  s.mean = j.at("mean").get<double>();
  s.stddev = j.at("stddev").get<double>();
  s.t_quantile = j.at("t_quantile").get<double>();
  s.ci_half_width = j.at("ci_half_width").get<double>();
  s.confidence = j.at("confidence").get<double>();
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

double student_t_quantile(double p, double degrees_of_freedom) {
  boost::math::students_t dist(degrees_of_freedom);
  return boost::math::quantile(dist, p);
}

CvSummary summarize_folds(std::vector<double> fold_scores, double confidence) {
  const std::size_t k = fold_scores.size();
  if (k < 2) throw Error("summarize_folds: need at least 2 fold scores");
  CvSummary s;
  s.confidence = confidence;
  s.fold_scores = std::move(fold_scores);
  const double kd = static_cast<double>(k);
  s.mean = std::accumulate(s.fold_scores.begin(), s.fold_scores.end(), 0.0) / kd;
  double ss = 0.0;
  for (double v : s.fold_scores) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / (kd - 1.0));
  s.t_quantile = student_t_quantile(1.0 - (1.0 - confidence) / 2.0, kd - 1.0);
  s.ci_half_width = s.t_quantile * s.stddev / std::sqrt(kd);
  return s;
}

std::vector<std::size_t> stratified_fold_ids(std::span<const ClassId> labels,
                                             std::size_t num_classes, std::size_t k,
                                             std::uint64_t seed) {
  if (k < 2) throw Error("stratified k-fold needs k >= 2");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> fold(labels.size(), 0);
  const std::vector<double> equal(k, 1.0);
  std::size_t cursor = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    Rng rng(derive_seed(seed, c));
    rng.shuffle(rows);
    // Counts for folds cursor, cursor+1, ... so the extra rows land on
    // different folds for successive classes.
    const auto counts = apportion(rows.size(), equal);
    std::size_t next = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t f = (cursor + i) % k;
      for (std::size_t t = 0; t < counts[i]; ++t) fold[rows[next++]] = f;
    }
    cursor = (cursor + rows.size() % k) % k;
  }
  return fold;
}

CvSummary stratified_kfold_cv(const Dataset& data, const models::ModelSpec& spec,
                              const CvOptions& options) {
  if (options.k < 2) throw Error("stratified k-fold needs k >= 2");
  const std::size_t C = data.num_classes();
  const auto fold = stratified_fold_ids(data.labels, C, options.k, options.seed);

  std::vector<std::string> warnings;
  const auto dist = ingest::class_distribution(data);
  for (const auto& [c, n] : dist.counts) {
    if (n < options.k) {
      warnings.push_back("class '" + data.class_names[c] + "' has " + std::to_string(n) +
                         " rows, fewer than " + std::to_string(options.k) + " folds");
    }
  }

  std::vector<double> scores(options.k);
  parallel_for(options.k, options.threads, [&](std::size_t f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      (fold[i] == f ? test_rows : train_rows).push_back(i);
    }
    Matrix xtr = data.features.select_rows(train_rows);
    Matrix xte = data.features.select_rows(test_rows);
    std::vector<ClassId> ytr, yte;
    for (std::size_t i : train_rows) ytr.push_back(data.labels[i]);
    for (std::size_t i : test_rows) yte.push_back(data.labels[i]);
    if (options.standardize) {
      const auto scaler = preprocess::Standardizer::fit(xtr);
      xtr = scaler.transform(xtr);
      xte = scaler.transform(xte);
    }
    models::ModelSpec s = spec;
    s.threads = 1;
    const auto trained = models::train(s, xtr, ytr, C, derive_seed(options.seed, 1000 + f));
    scores[f] = evaluate(yte, trained.model.predict_proba(xte), data.class_names)
                    .value(options.metric);
  });
  CvSummary summary = summarize_folds(std::move(scores));
  summary.metric = to_string(options.metric);
  summary.warnings = std::move(warnings);
  return summary;
}

AlgorithmSelection select_best_algorithm(const std::vector<Cell>& cells, bool allow_missing) {
  if (cells.empty()) throw Error("select_best_algorithm: no cells");
  std::vector<std::string> algorithms, configurations;
  for (const auto& c : cells) {
    if (std::find(algorithms.begin(), algorithms.end(), c.algorithm) == algorithms.end()) {
      algorithms.push_back(c.algorithm);
    }
    if (std::find(configurations.begin(), configurations.end(), c.configuration) ==
        configurations.end()) {
      configurations.push_back(c.configuration);
    }
  }
  AlgorithmSelection out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : cells) {
    if (!seen.insert({c.algorithm, c.configuration}).second) {
      throw Error("select_best_algorithm: duplicate cell " + c.algorithm + " / " +
                  c.configuration);
    }
  }
  for (const auto& a : algorithms) {
    for (const auto& cfg : configurations) {
      if (!seen.count({a, cfg})) out.missing_cells.push_back(a + " / " + cfg);
    }
  }
  if (!out.missing_cells.empty() && !allow_missing) {
    throw Error("select_best_algorithm: missing cell " + out.missing_cells.front());
  }

  for (const auto& a : algorithms) {
    AlgorithmRank r;
    r.algorithm = a;
    for (const auto& c : cells) {
      if (c.algorithm != a) continue;
      r.mean_f1_macro += c.f1_macro;
      r.mean_roc_auc += c.roc_auc;
      r.mean_training_time_s += c.training_time_s;
      ++r.cells;
    }
    const double n = static_cast<double>(r.cells);
    r.mean_f1_macro /= n;
    r.mean_roc_auc /= n;
    r.mean_training_time_s /= n;
    out.ranking.push_back(r);
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const AlgorithmRank& a, const AlgorithmRank& b) {
                     if (std::abs(a.mean_f1_macro - b.mean_f1_macro) > kTieTolerance) {
                       return a.mean_f1_macro > b.mean_f1_macro;
                     }
                     if (std::abs(a.mean_roc_auc - b.mean_roc_auc) > kTieTolerance) {
                       return a.mean_roc_auc > b.mean_roc_auc;
                     }
                     return a.mean_training_time_s < b.mean_training_time_s;
                   });
  out.winner = out.ranking.front().algorithm;
  bool first = true;
  for (const auto& c : cells) {
    if (c.algorithm != out.winner) continue;
    if (first || c.f1_macro > out.best_configuration_f1_macro) {
      out.best_configuration = c.configuration;
      out.best_configuration_f1_macro = c.f1_macro;
      first = false;
    }
  }
  return out;
}

}  // namespace flowgate::metrics
