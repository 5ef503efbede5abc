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

// Two-stage training.
//
// Stage 1 fits the classifier (image feature -> texture class) with softmax
// cross-entropy. Its hidden layers then become the first layers of the texture
// encoder, whose output layer is a fixed seeded random projection.
//
// Stage 2 freezes the whole texture encoder and fits the force, speed and
// action encoders and the predictor to magnitude spectra, minimizing the mean
// Euclidean distance between predicted and target frames.
//
// Both stages use Adam with a fixed example order derived from the seed, and
// single-threaded Eigen kernels, so runs are bit-reproducible.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vtex/mlp.hpp"
#include "vtex/model.hpp"

namespace vtex {

// ---------------------------------------------------------------------------
// Datasets

struct Stage1Dataset {
  std::vector<std::vector<float>> features;  // one per example
  std::vector<int> labels;                   // class index per example
  int num_classes = 0;

  // >= 2 classes, >= 4 examples per class, labels below `head_size`,
  // consistent feature dimension.
  void validate(int feature_dim, int head_size) const;
};

// Examples stored column-wise: example i owns forces[i*window, (i+1)*window),
// velocities[i*2*window, ...) and targets[i*bins, ...).
struct Stage2Set {
  int window = kActionSteps;
  int bins = kModelBins;
  std::vector<std::uint32_t> texture;  // index into Stage2Dataset::features
  std::vector<float> forces;
  std::vector<float> velocities;
  std::vector<float> targets;

  std::size_t size() const { return texture.size(); }
  void append(std::uint32_t texture_index, std::span<const float> window_forces,
              std::span<const float> window_velocities, std::span<const float> target);
};

struct Stage2Dataset {
  std::vector<std::string> texture_ids;
  std::vector<std::vector<float>> features;  // image feature per texture
  Stage2Set train;
  Stage2Set heldout;
};

// ---------------------------------------------------------------------------
// Losses with analytic gradients

// The trainable part of stage 2.
template <typename Scalar>
struct ActionNets {
  Mlp<Scalar> force;
  Mlp<Scalar> speed;
  Mlp<Scalar> action;
  Mlp<Scalar> predictor;

  ActionNets zeros_like() const;
  // Visits the four networks as "force", "speed", "action", "predictor".
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(force, "force");
    fn(speed, "speed");
    fn(action, "action");
    fn(predictor, "predictor");
  }
};

template <typename Scalar>
struct Stage2Batch {
  Matrix<Scalar> embeddings;  // embedding_dim x textures
  std::vector<int> texture;   // per example
  Matrix<Scalar> forces;      // window x batch
  Matrix<Scalar> velocities;  // 2 window x batch
  Matrix<Scalar> targets;     // bins x batch
};

// Mean over the batch of ||predictor(...) - target||_2 on the raw (unclamped)
// output. When `grad` is non-null it receives the gradient (same shapes as
// `nets`), overwriting previous contents.
template <typename Scalar>
Scalar stage2_loss(const ActionNets<Scalar>& nets, const Stage2Batch<Scalar>& batch,
                   ActionNets<Scalar>* grad);

// Mean softmax cross-entropy of the classifier; inputs one example per column.
template <typename Scalar>
Scalar stage1_loss(const Mlp<Scalar>& classifier, const Matrix<Scalar>& inputs,
                   const std::vector<int>& labels, Mlp<Scalar>* grad);

// ---------------------------------------------------------------------------
// Training drivers

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Stage1Config {
  int epochs = 10;
  int batch_size = 16;
  AdamConfig adam{1e-4};
  std::uint64_t seed = 1;
};

struct Stage1Result {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // mean training loss after each epoch
  double train_accuracy = 0.0;
};

// Trains weights.classifier in place. Other networks are untouched.
Stage1Result train_stage1(WeightSet& weights, const Stage1Dataset& data,
                          const Stage1Config& config);

// Copies the classifier's hidden layers into the texture encoder and sets its
// output layer to a Gaussian random projection (std 1/sqrt(fan_in), zero bias).
void tie_texture_encoder(WeightSet& weights, std::uint64_t seed);

// FNV-1a over the texture encoder's parameters; stage 2 must not change it.
std::uint64_t encoder_hash(const WeightSet& weights);

struct Stage2Config {
  int epochs = 10;
  int batch_size = 64;
  AdamConfig adam{1e-3};
  std::uint64_t seed = 1;
  // Before the first step, divide the first-layer weights of the force and
  // speed encoders by the RMS of their training inputs and set the output
  // bias to the mean training target.
  bool data_init = true;
};

struct Stage2Result {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
  double heldout_loss = 0.0;
  double baseline_heldout_loss = 0.0;  // predicting the mean training target
};

// Trains force, speed, action and predictor in place. Throws an internal
// invariant violation if the texture encoder changed.
Stage2Result train_stage2(WeightSet& weights, const Stage2Dataset& data,
                          const Stage2Config& config);

// Texture embeddings of every dataset texture under `weights`.
std::vector<TextureEmbedding> embed_textures(const WeightSet& weights,
                                             const Stage2Dataset& data);

struct Stage2Evaluation {
  double model_loss = 0.0;     // mean ||clamp(prediction) - target||
  double baseline_loss = 0.0;  // mean ||mean_target - target||
  std::vector<double> per_texture_model;     // indexed like data.texture_ids
  std::vector<double> per_texture_baseline;
  std::vector<std::size_t> per_texture_count;
};

// Evaluates `set` with clamped predictions; `mean_target` is the baseline.
Stage2Evaluation evaluate_stage2(const WeightSet& weights, const Stage2Dataset& data,
                                 const Stage2Set& set, std::span<const float> mean_target);

// Mean target frame of a set.
std::vector<float> mean_target(const Stage2Set& set);

}  // namespace vtex
