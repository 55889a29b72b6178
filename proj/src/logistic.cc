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

#include "flowgate/logistic.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace flowgate::models {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double logistic_objective(const Matrix& x, std::span<const ClassId> y,
                          std::size_t num_classes, double l2, std::span<const double> theta,
                          std::span<double> grad) {
  const std::size_t n = x.rows(), d = x.cols(), C = num_classes;
  const double* w = theta.data();
  const double* b = theta.data() + C * d;
  std::fill(grad.begin(), grad.end(), 0.0);
  double* gw = grad.data();
  double* gb = grad.data() + C * d;

  double loss = 0.0;
  std::vector<double> z(C);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    double mx = -INFINITY;
    for (std::size_t c = 0; c < C; ++c) {
      z[c] = b[c] + dot(row, {w + c * d, d});
      mx = std::max(mx, z[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(z[c] - mx);
    const double log_norm = mx + std::log(sum);
    loss += log_norm - z[y[r]];
    for (std::size_t c = 0; c < C; ++c) {
      const double residual = std::exp(z[c] - log_norm) - (y[r] == c ? 1.0 : 0.0);
      gb[c] += residual;
      double* g = gw + c * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += residual * row[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(n, 1));
  loss *= inv_n;
  for (double& g : grad) g *= inv_n;
  double penalty = 0.0;
  for (std::size_t i = 0; i < C * d; ++i) {
    penalty += w[i] * w[i];
    gw[i] += l2 * w[i];
  }
  return loss + 0.5 * l2 * penalty;
}

Matrix LogisticModel::margins(const Matrix& x) const {
  if (x.cols() != num_features && x.rows() > 0) {
    throw Error("logistic: expected " + std::to_string(num_features) + " features");
  }
  Matrix out(x.rows(), num_classes);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      out(r, c) = bias[c] + dot(x.row(r), weights.row(c));
    }
  }
  return out;
}

std::vector<double> LogisticModel::margin_row(std::span<const double> x) const {
  std::vector<double> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) out[c] = bias[c] + dot(x, weights.row(c));
  return out;
}

nlohmann::json LogisticModel::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto row = weights.row(c);
    w.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"num_classes", num_classes},
          {"num_features", num_features},
          {"weights", std::move(w)},
          {"bias", bias},
          {"params",
           {{"l2", params.l2},
            {"max_iterations", params.max_iterations},
            {"tolerance", params.tolerance},
            {"memory", params.memory}}},
          {"iterations", iterations},
          {"converged", converged}};
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
  LogisticModel m;
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.num_features = j.at("num_features").get<std::size_t>();
  m.weights = Matrix(m.num_classes, m.num_features);
  const auto& w = j.at("weights");
  if (w.size() != m.num_classes) throw Error("logistic JSON: weight rows mismatch");
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    const auto row = w[c].get<std::vector<double>>();
    if (row.size() != m.num_features) throw Error("logistic JSON: weight width mismatch");
    std::copy(row.begin(), row.end(), m.weights.row(c).begin());
  }
  m.bias = j.at("bias").get<std::vector<double>>();
  const auto& p = j.at("params");
  m.params.l2 = p.at("l2").get<double>();
  m.params.max_iterations = p.at("max_iterations").get<int>();
  m.params.tolerance = p.at("tolerance").get<double>();
  m.params.memory = p.at("memory").get<int>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
  return m;
}

LogisticModel train_logistic(const Matrix& x, std::span<const ClassId> y,
                             std::size_t num_classes, const LogisticParams& params,
                             std::uint64_t /*seed*/) {
  if (x.rows() != y.size()) throw Error("train_logistic: row/label count mismatch");
  if (std::set<ClassId>(y.begin(), y.end()).size() < 2) {
    throw Error("train_logistic: training data must contain at least 2 classes");
  }
  const std::size_t d = x.cols(), C = num_classes, dim = C * d + C;
  std::vector<double> theta(dim, 0.0), grad(dim), next(dim), next_grad(dim), dir(dim);
  auto f = [&](std::span<const double> t, std::span<double> g) {
    return logistic_objective(x, y, C, params.l2, t, g);
  };

  LogisticModel model;
  model.num_classes = C;
  model.num_features = d;
  model.params = params;

  double loss = f(theta, grad);
  model.loss_history.push_back(loss);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  int it = 0;
  for (; it < params.max_iterations; ++it) {
    const double gnorm = std::sqrt(dot(grad, grad));
    if (gnorm < params.tolerance) {
      model.converged = true;
      break;
    }
    // Two-loop recursion for the quasi-Newton direction.
    dir = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t i = 0; i < dim; ++i) dir[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    } else {
      gamma = 1.0 / std::max(1.0, gnorm);
    }
    for (double& v : dir) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t i = 0; i < dim; ++i) dir[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    for (double& v : dir) v = -v;
    double slope = dot(grad, dir);
    if (!(slope < 0)) {
      // Not a descent direction: fall back to steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < dim; ++i) dir[i] = -grad[i] / std::max(1.0, gnorm);
      slope = dot(grad, dir);
    }

    double step = 1.0;
    double next_loss = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < dim; ++i) next[i] = theta[i] + step * dir[i];
      next_loss = f(next, next_grad);
      if (next_loss <= loss + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable

    std::vector<double> s(dim), yv(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s[i] = next[i] - theta[i];
      yv[i] = next_grad[i] - grad[i];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > params.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(next);
    grad.swap(next_grad);
    loss = next_loss;
    model.loss_history.push_back(loss);
  }
  if (!model.converged && std::sqrt(dot(grad, grad)) < params.tolerance) model.converged = true;
  model.iterations = it;

  model.weights = Matrix(C, d);
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(C * d),
            model.weights.data().begin());
  model.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(C * d), theta.end());
  return model;
}

}  // namespace flowgate::models
