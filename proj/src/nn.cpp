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

#include "reverb/nn.hpp"

#include <cmath>

namespace reverb {

Mlp::Mlp(std::vector<int> sizes, RandomSource& rng, double output_gain) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw InputError("mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw InputError("mlp: layer sizes must be >= 1");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    double scale = 1.0 / std::sqrt(static_cast<double>(in));
    if (l + 2 == sizes_.size()) scale *= output_gain;
    Matrix w(out, in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(out));
  }
}

Vector Mlp::forward(const Vector& x) const {
  return forward(Matrix(x), nullptr).col(0);
}

Matrix Mlp::forward(const Matrix& x, Tape* tape) const {
  if (x.rows() != input_dim()) throw InputError("mlp: input dimension mismatch");
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(x);
  }
  Matrix h = x;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = weights_[l] * h;
    z.colwise() += biases_[l];
    h = (l + 1 < layers) ? Matrix(z.array().tanh()) : z;
    if (tape) tape->activations.push_back(h);
  }
  return h;
}

Matrix Mlp::backprop(const Tape& tape, const Matrix& grad_out, Vector* param_grad) const {
  const std::size_t layers = weights_.size();
  if (tape.activations.size() != layers + 1) throw InputError("mlp: tape does not match network");
  if (grad_out.rows() != output_dim() || grad_out.cols() != tape.activations.back().cols()) {
    throw InputError("mlp: output gradient shape mismatch");
  }
  if (param_grad) param_grad->setZero(parameter_count());

  std::vector<Eigen::Index> offsets(layers);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += weights_[l].size() + biases_[l].size();
  }

  Matrix delta = grad_out;  // dL/dz of the current layer
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& in = tape.activations[l];
    if (param_grad) {
      const Eigen::Index nw = weights_[l].size();
      Eigen::Map<Matrix>(param_grad->data() + offsets[l], weights_[l].rows(), weights_[l].cols()) =
          delta * in.transpose();
      param_grad->segment(offsets[l] + nw, biases_[l].size()) = delta.rowwise().sum();
    }
    Matrix back = weights_[l].transpose() * delta;
    if (l > 0) back.array() *= 1.0 - in.array().square();
    delta = std::move(back);
  }
  return delta;
}

Vector Mlp::backward(const Tape& tape, const Matrix& grad_out) const {
  Vector g;
  backprop(tape, grad_out, &g);
  return g;
}

Matrix Mlp::input_gradient(const Tape& tape, const Matrix& grad_out) const {
  return backprop(tape, grad_out, nullptr);
}

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

Vector Mlp::parameters() const {
  Vector flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.segment(at, weights_[l].size()) = weights_[l].reshaped();
    at += weights_[l].size();
    flat.segment(at, biases_[l].size()) = biases_[l];
    at += biases_[l].size();
  }
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (flat.size() != parameter_count()) throw InputError("mlp: parameter vector has the wrong length");
  if (!all_finite(flat)) throw InputError("mlp: parameters must be finite");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l].reshaped() = flat.segment(at, weights_[l].size());
    at += weights_[l].size();
    biases_[l] = flat.segment(at, biases_[l].size());
    at += biases_[l].size();
  }
}

nlohmann::json Mlp::to_json() const {
  const Vector p = parameters();
  return {{"sizes", sizes_}, {"parameters", std::vector<double>(p.data(), p.data() + p.size())}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  net.sizes_ = j.at("sizes").get<std::vector<int>>();
  if (net.sizes_.size() < 2) throw InputError("mlp: need at least input and output sizes");
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    if (net.sizes_[l] < 1 || net.sizes_[l + 1] < 1) throw InputError("mlp: layer sizes must be >= 1");
    net.weights_.push_back(Matrix::Zero(net.sizes_[l + 1], net.sizes_[l]));
    net.biases_.push_back(Vector::Zero(net.sizes_[l + 1]));
  }
  const auto p = j.at("parameters").get<std::vector<double>>();
  net.set_parameters(Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())));
  return net;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {
  if (!(lr > 0)) throw InputError("adam: learning rate must be > 0");
}

void Adam::step(Vector& params, const Vector& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size()) throw InputError("adam: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace reverb
