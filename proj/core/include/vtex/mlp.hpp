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

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vtex/random.hpp"

namespace vtex {

// Layer widths from input to output; {in, h1, ..., out}.
struct MlpSpec {
  std::vector<int> layer_sizes;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::string to_string() const;  // "(10,10,10,10)"

  bool operator==(const MlpSpec&) const = default;
};

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
};

// Fully connected network: affine layers with ReLU between them and a linear
// output layer.
template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;
  // Zero weights and biases.
  explicit Mlp(MlpSpec spec);
  // He-normal weights (std sqrt(2 / fan_in)) and zero biases.
  static Mlp random(MlpSpec spec, Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }

  // No shape checks beyond Eigen's debug assertions; see mlp_forward.
  Vector<Scalar> forward(const Eigen::Ref<const Vector<Scalar>>& input) const;
  // One example per column.
  Matrix<Scalar> forward_batch(const Eigen::Ref<const Matrix<Scalar>>& inputs) const;

  bool all_finite() const;
  std::size_t parameter_count() const;

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(spec_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      out.layers()[i].weight = layers_[i].weight.template cast<Other>();
      out.layers()[i].bias = layers_[i].bias.template cast<Other>();
    }
    return out;
  }

 private:
  MlpSpec spec_;
  std::vector<DenseLayer<Scalar>> layers_;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

using MlpF = Mlp<float>;

// Checked evaluation: input length must match the spec, the network's layer
// shapes must match the spec (invalid-argument otherwise), and every weight
// must be finite (corrupt-weights otherwise).
Vector<float> mlp_forward(const MlpSpec& spec, const MlpF& weights,
                          std::span<const float> input);

// Calls fn(Scalar* data, std::size_t count, const std::string& name) on each
// weight matrix then bias of each layer, in storage order.
template <typename Scalar, typename Fn>
void for_each_tensor(Mlp<Scalar>& mlp, const std::string& prefix, Fn&& fn) {
  for (std::size_t i = 0; i < mlp.layers().size(); ++i) {
    auto& layer = mlp.layers()[i];
    const std::string base = prefix + "." + std::to_string(i);
    fn(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()),
       base + ".weight");
    fn(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()),
       base + ".bias");
  }
}

}  // namespace vtex
