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

// Action-conditional magnitude-spectrum model: force, speed and action
// encoders, the texture encoder, the classification head used for
// pre-training, and the acceleration predictor.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vtex/mlp.hpp"
#include "vtex/spectral.hpp"

namespace vtex {

inline constexpr int kActionSteps = 10;
inline constexpr int kEmbeddingDim = 256;
inline constexpr int kFeatureDim = 8960;

// Layer sizes of every network plus the action history length. The defaults
// are the published architecture; smaller instances are used by gradient
// checks and quick tests.
struct Architecture {
  int window = kActionSteps;
  MlpSpec force;
  MlpSpec speed;
  MlpSpec action;
  MlpSpec texture;
  MlpSpec classifier;
  MlpSpec predictor;

  static Architecture published();

  int embedding_dim() const { return texture.output_size(); }
  int feature_dim() const { return texture.input_size(); }
  int bins() const { return predictor.output_size(); }
  int num_classes() const { return classifier.output_size(); }

  // Dimension algebra between the networks. Throws invalid-argument naming
  // the first inconsistency.
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

// Weights for all six networks plus provenance.
struct WeightSet {
  Architecture arch;
  MlpF force;
  MlpF speed;
  MlpF action;
  MlpF texture;
  MlpF classifier;
  MlpF predictor;
  std::string config_hash;  // free-form provenance, e.g. training config digest

  // All networks He-initialized from one seed.
  static WeightSet random(const Architecture& arch, std::uint64_t seed);
  // All networks zero.
  static WeightSet zeros(const Architecture& arch);

  // Shapes against `arch` and finiteness. Throws corrupt-weights naming the
  // offending layer.
  void validate() const;
};

// The last kActionSteps (normal force, planar velocity) samples, oldest first.
// Starts all zero.
class ActionWindow {
 public:
  void push(double force_n, double vx_mm_s, double vy_mm_s);
  void reset();

  const std::array<float, kActionSteps>& forces() const { return forces_; }
  // Time-major: x0, y0, x1, y1, ...
  const std::array<float, 2 * kActionSteps>& velocities() const {
    return velocities_;
  }

 private:
  std::array<float, kActionSteps> forces_{};
  std::array<float, 2 * kActionSteps> velocities_{};
};

struct TextureEmbedding {
  std::string id;
  std::string name;
  std::vector<float> vector;
};

struct TextureLibrary {
  std::vector<TextureEmbedding> entries;
  // Optional per-entry image features; empty, or one (possibly empty) vector
  // per entry.
  std::vector<std::vector<float>> features;

  const TextureEmbedding* find(std::string_view id) const;
  // Unique non-empty ids, embedding and feature dimensions.
  void validate(int embedding_dim = kEmbeddingDim,
                int feature_dim = kFeatureDim) const;
};

// Evaluates the render path for one texture. The texture's contribution to the
// predictor's first layer is computed once at construction, and all buffers
// are preallocated, so predict() does not allocate.
class Predictor {
 public:
  Predictor(std::shared_ptr<const WeightSet> weights,
            std::span<const float> embedding);

  // Raw predictor output (may be negative), arch.bins() values.
  void predict_raw(std::span<const float> forces,
                   std::span<const float> velocities, std::span<float> out);
  // Output clamped at zero, written as doubles.
  void predict(const ActionWindow& window, std::span<double> out);

  const WeightSet& weights() const { return *weights_; }

 private:
  void run(const MlpF& net, std::vector<Vector<float>>& buffers) const;
  const Vector<float>& evaluate(std::span<const float> forces,
                                std::span<const float> velocities);

  std::shared_ptr<const WeightSet> weights_;
  Vector<float> texture_term_;
  std::vector<Vector<float>> force_buf_;
  std::vector<Vector<float>> speed_buf_;
  std::vector<Vector<float>> action_buf_;
  std::vector<Vector<float>> predictor_buf_;
};

MagnitudeFrame predict_acceleration_dft(const TextureEmbedding& texture,
                                        const ActionWindow& action,
                                        const WeightSet& weights);

TextureEmbedding encode_texture(std::span<const float> feature,
                                const WeightSet& weights, std::string id = {},
                                std::string name = {});

struct NeighborMatch {
  TextureEmbedding embedding;
  double distance = 0.0;
  std::size_t index = 0;
};

// Euclidean nearest library member; ties go to the lexicographically lowest id.
NeighborMatch nearest_neighbor(const TextureEmbedding& query,
                               const TextureLibrary& library);

// 64-bit FNV-1a over the network's raw parameter bytes.
std::uint64_t parameter_hash(const MlpF& net);

}  // namespace vtex
