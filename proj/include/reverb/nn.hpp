// Copyright 2026 The REVERB Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include <json.hpp>

#include "reverb/core.hpp"
#include "reverb/random.hpp"

namespace reverb {

/// Fully connected network: tanh hidden layers, linear output. Batches are
/// column-major (one sample per column).
class Mlp {
 public:
  struct Tape {
    std::vector<Matrix> activations;  // input, then each layer's output
  };

  Mlp() = default;
  /// `sizes` = {in, hidden..., out}. Hidden weights are scaled by 1/sqrt(fan_in);
  /// the output layer is additionally multiplied by `output_gain`.
  Mlp(std::vector<int> sizes, RandomSource& rng, double output_gain = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& x, Tape* tape = nullptr) const;

  /// Flat gradient of Σ_ij grad_out_ij · out_ij with respect to the parameters.
  Vector backward(const Tape& tape, const Matrix& grad_out) const;
  /// Gradient of the same scalar with respect to the input batch.
  Matrix input_gradient(const Tape& tape, const Matrix& grad_out) const;

  Eigen::Index parameter_count() const;
  /// Layer by layer: weights (column-major), then bias.
  Vector parameters() const;
  void set_parameters(const Vector& flat);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  Matrix backprop(const Tape& tape, const Matrix& grad_out, Vector* param_grad) const;

  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// Adam on a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// params -= step(grad); `grad` is a descent direction's negative (a loss gradient).
  void step(Vector& params, const Vector& grad);
  double learning_rate() const { return lr_; }
  long steps() const { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  Vector m_, v_;
  long t_ = 0;
};

}  // namespace reverb
