// Copyright 2026 The vtex Authors
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

#include "vtex/mlp.hpp"

#include <cmath>

#include "vtex/error.hpp"

namespace vtex {

std::string MlpSpec::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(layer_sizes[i]);
  }
  return s + ")";
}

template <typename Scalar>
Mlp<Scalar>::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  require(spec_.layer_sizes.size() >= 2, "an MLP needs at least one layer");
  for (int size : spec_.layer_sizes) require(size > 0, "layer sizes must be positive");
  layers_.resize(static_cast<std::size_t>(spec_.num_layers()));
  for (int i = 0; i < spec_.num_layers(); ++i) {
    layers_[i].weight = Matrix<Scalar>::Zero(spec_.layer_sizes[i + 1], spec_.layer_sizes[i]);
    layers_[i].bias = Vector<Scalar>::Zero(spec_.layer_sizes[i + 1]);
  }
}

template <typename Scalar>
Mlp<Scalar> Mlp<Scalar>::random(MlpSpec spec, Rng& rng) {
  Mlp mlp(std::move(spec));
  for (auto& layer : mlp.layers_) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.weight.cols()));
    // Column-major fill order is part of the seeded contract.
    Scalar* w = layer.weight.data();
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      w[i] = static_cast<Scalar>(scale * rng.normal());
    }
  }
  return mlp;
}

template <typename Scalar>
Vector<Scalar> Mlp<Scalar>::forward(const Eigen::Ref<const Vector<Scalar>>& input) const {
  Vector<Scalar> x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vector<Scalar> y = layers_[i].bias;
    y.noalias() += layers_[i].weight * x;
    if (i + 1 < layers_.size()) y = y.cwiseMax(Scalar(0));
    x.swap(y);
  }
  return x;
}

template <typename Scalar>
Matrix<Scalar> Mlp<Scalar>::forward_batch(
    const Eigen::Ref<const Matrix<Scalar>>& inputs) const {
  Matrix<Scalar> x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix<Scalar> y = layers_[i].bias.replicate(1, x.cols());
    y.noalias() += layers_[i].weight * x;
    if (i + 1 < layers_.size()) y = y.cwiseMax(Scalar(0));
    x.swap(y);
  }
  return x;
}

template <typename Scalar>
bool Mlp<Scalar>::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

template <typename Scalar>
std::size_t Mlp<Scalar>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return total;
}

template class Mlp<float>;
template class Mlp<double>;

Vector<float> mlp_forward(const MlpSpec& spec, const MlpF& weights,
                          std::span<const float> input) {
  require(spec.layer_sizes.size() >= 2, "an MLP needs at least one layer");
  require(static_cast<int>(input.size()) == spec.input_size(),
          "input length " + std::to_string(input.size()) + " does not match " +
              spec.to_string());
  require(static_cast<int>(weights.layers().size()) == spec.num_layers(),
          "weights have " + std::to_string(weights.layers().size()) +
              " layers, spec " + spec.to_string() + " needs " +
              std::to_string(spec.num_layers()));
  for (int i = 0; i < spec.num_layers(); ++i) {
    const auto& layer = weights.layers()[i];
    require(layer.weight.rows() == spec.layer_sizes[i + 1] &&
                layer.weight.cols() == spec.layer_sizes[i] &&
                layer.bias.size() == spec.layer_sizes[i + 1],
            "layer " + std::to_string(i) + " shape does not match " + spec.to_string());
  }
  if (!weights.all_finite()) {
    fail(ErrorCode::kCorruptWeights, "network contains non-finite weights");
  }
  const Eigen::Map<const Vector<float>> x(input.data(),
                                          static_cast<Eigen::Index>(input.size()));
  return weights.forward(x);
}

}  // namespace vtex
