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

#include "flowgate/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace flowgate::synth {
namespace {

std::string indexed(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (classes < 2) throw Error("synth: need at least 2 classes");
  if (features == 0) throw Error("synth: need at least 1 clean feature");
  if (!class_weights.empty()) {
    if (class_weights.size() != classes) throw Error("synth: one weight per class required");
    double total = 0.0;
    for (double w : class_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error("synth: weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw Error("synth: weights sum to zero");
  }
  if (!class_names.empty() && class_names.size() != classes) {
    throw Error("synth: one name per class required");
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw Error("synth: separation must be >= 0");
  }
  if (leaks.label_copies < 0 || leaks.noisy_proxies < 0 || leaks.constants < 0) {
    throw Error("synth: leak counts must be >= 0");
  }
  if (!(leaks.proxy_noise >= 0.0)) throw Error("synth: proxy noise must be >= 0");
}

nlohmann::json SynthSpec::to_json() const {
  return {{"rows", rows},
          {"classes", classes},
          {"class_weights", class_weights},
          {"class_names", class_names},
          {"features", features},
          {"separation", separation},
          {"nonlinear", nonlinear},
          {"leaks",
           {{"label_copies", leaks.label_copies},
            {"noisy_proxies", leaks.noisy_proxies},
            {"proxy_noise", leaks.proxy_noise},
            {"constants", leaks.constants}}},
          {"timestamps", timestamps},
          {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.rows = j.value("rows", s.rows);
  s.classes = j.value("classes", s.classes);
  s.class_weights = j.value("class_weights", s.class_weights);
  s.class_names = j.value("class_names", s.class_names);
  if (j.value("profile", std::string()) == "cic-ids2017") {
    s.classes = 6;
    s.class_weights = cic_ids2017_weights();
    s.class_names = cic_ids2017_class_names();
  }
  s.features = j.value("features", s.features);
  s.separation = j.value("separation", s.separation);
  s.nonlinear = j.value("nonlinear", s.nonlinear);
  if (j.contains("leaks")) {
    const auto& l = j.at("leaks");
    s.leaks.label_copies = l.value("label_copies", 0);
    s.leaks.noisy_proxies = l.value("noisy_proxies", 0);
    s.leaks.proxy_noise = l.value("proxy_noise", s.leaks.proxy_noise);
    s.leaks.constants = l.value("constants", 0);
  }
  s.timestamps = j.value("timestamps", s.timestamps);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

std::vector<double> cic_ids2017_weights() { return {82.7, 7.4, 5.4, 3.8, 0.4, 0.2}; }

std::vector<std::string> cic_ids2017_class_names() {
  return {"BENIGN", "DoS Hulk", "DDoS", "PortScan", "DoS GoldenEye", "FTP-Patator"};
}

Dataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const std::size_t C = spec.classes, d = spec.features;
  const std::size_t copies = static_cast<std::size_t>(spec.leaks.label_copies);
  const std::size_t proxies = static_cast<std::size_t>(spec.leaks.noisy_proxies);
  const std::size_t constants = static_cast<std::size_t>(spec.leaks.constants);
  const std::size_t width = d + copies + proxies + constants;

  Dataset out;
  const int digits = d > 100 ? 3 : 2;
  for (std::size_t j = 0; j < d; ++j) out.feature_names.push_back(indexed("f", j, digits));
  for (std::size_t i = 0; i < copies; ++i) out.feature_names.push_back(indexed("leak_copy_", i, 1));
  for (std::size_t i = 0; i < proxies; ++i) out.feature_names.push_back(indexed("leak_proxy_", i, 1));
  for (std::size_t i = 0; i < constants; ++i) out.feature_names.push_back(indexed("leak_const_", i, 1));
  out.class_names = spec.class_names;
  if (out.class_names.empty()) {
    for (std::size_t c = 0; c < C; ++c) out.class_names.push_back(indexed("class_", c, 1));
  }

  // Centroids come from their own stream so they do not depend on row count.
  Rng centroid_rng(derive_seed(spec.seed, 0));
  Matrix centroid(C, d);
  for (double& v : centroid.data()) v = spec.separation * centroid_rng.normal();

  std::vector<double> cdf(C);
  if (spec.class_weights.empty()) {
    std::fill(cdf.begin(), cdf.end(), 1.0);
  } else {
    cdf = spec.class_weights;
  }
  std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
  for (double& v : cdf) v /= cdf.back();

  Rng rng(derive_seed(spec.seed, 1));
  out.features = Matrix(spec.rows, width);
  out.labels.resize(spec.rows);
  if (spec.timestamps) out.timestamps.emplace(spec.rows);
  std::vector<double> z(d);
  std::int64_t clock = 1'499'000'000;  // early July 2017
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const double u = rng.uniform01();
    const ClassId c = static_cast<ClassId>(
        std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), C - 1));
    out.labels[r] = c;
    const double sign = spec.nonlinear && rng.uniform01() < 0.5 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
    auto row = out.features.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double noise = j == 0 ? z[0] : 0.8 * z[j] + 0.6 * z[j - 1];
      row[j] = sign * centroid(c, j) + noise;
    }
    std::size_t k = d;
    for (std::size_t i = 0; i < copies; ++i) row[k++] = static_cast<double>(c);
    for (std::size_t i = 0; i < proxies; ++i) {
      const ClassId target = static_cast<ClassId>((i + 1) % C);
      row[k++] = (c == target ? 1.0 : 0.0) + spec.leaks.proxy_noise * rng.normal();
    }
    for (std::size_t i = 0; i < constants; ++i) row[k++] = 1.0;
    if (spec.timestamps) {
      clock += 1 + static_cast<std::int64_t>(rng.uniform_below(5));
      (*out.timestamps)[r] = clock;
    }
  }
  out.validate();
  return out;
}

}  // namespace flowgate::synth
