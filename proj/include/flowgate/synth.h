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

#ifndef FLOWGATE_SYNTH_H_
#define FLOWGATE_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "flowgate/dataset.h"
#include "json.hpp"

namespace flowgate::synth {

struct LeakPlants {
  // Feature equal to the class id.
  int label_copies = 0;
  // Indicator of one class plus N(0, proxy_noise) noise.
  int noisy_proxies = 0;
  double proxy_noise = 0.15;
  int constants = 0;
};

// Gaussian-mixture flow table. Class c has centroid separation * m_c with
// m_c ~ N(0, I); rows add unit noise with a first-order correlation between
// neighbouring features so the correlation matrix is not diagonal.
struct SynthSpec {
  std::size_t rows = 10000;
  std::size_t classes = 3;
  // Empty means uniform; otherwise one non-negative weight per class.
  std::vector<double> class_weights;
  std::vector<std::string> class_names;
  std::size_t features = 10;
  double separation = 3.0;
  // Each class becomes two clusters at +m_c and -m_c, which a linear model
  // cannot separate.
  bool nonlinear = false;
  LeakPlants leaks;
  bool timestamps = false;
  std::uint64_t seed = 0;

  // Throws Error on an invalid spec.
  void validate() const;
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

// Class weights of the sampled CIC-IDS2017 distribution (six classes).
std::vector<double> cic_ids2017_weights();
std::vector<std::string> cic_ids2017_class_names();

// Clean features come first ("f00", ...), then leaks in the order
// label copies ("leak_copy_<i>"), proxies ("leak_proxy_<i>") and constants
// ("leak_const_<i>").
Dataset generate_synthetic(const SynthSpec& spec);

}  // namespace flowgate::synth

#endif  // FLOWGATE_SYNTH_H_
