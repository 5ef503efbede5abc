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

#include "vtex/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "vtex/error.hpp"

namespace vtex {

Architecture Architecture::published() {
  Architecture a;
  a.window = kActionSteps;
  a.force = {{10, 10, 10, 10}};
  a.speed = {{20, 20, 20, 20, 10}};
  a.action = {{20, 400, 300, 200, 100}};
  a.texture = {{kFeatureDim, 4096, 512, kEmbeddingDim}};
  a.classifier = {{kFeatureDim, 4096, 512, 93}};
  a.predictor = {{356, 300, 300, 200, 100, kModelBins}};
  return a;
}

void Architecture::validate() const {
  for (const MlpSpec* spec : {&force, &speed, &action, &texture, &classifier, &predictor}) {
    require(spec->layer_sizes.size() >= 2, "every network needs at least one layer");
  }
  require(window >= 1, "action window must be at least one step");
  require(force.input_size() == window,
          "force encoder input " + std::to_string(force.input_size()) +
              " != window " + std::to_string(window));
  require(speed.input_size() == 2 * window,
          "speed encoder input " + std::to_string(speed.input_size()) +
              " != 2 x window " + std::to_string(2 * window));
  require(action.input_size() == force.output_size() + speed.output_size(),
          "action encoder input " + std::to_string(action.input_size()) +
              " != force out + speed out " +
              std::to_string(force.output_size() + speed.output_size()));
  require(predictor.input_size() == texture.output_size() + action.output_size(),
          "predictor input " + std::to_string(predictor.input_size()) +
              " != embedding + action code " +
              std::to_string(texture.output_size() + action.output_size()));
  require(classifier.input_size() == texture.input_size(),
          "classifier and texture encoder must read the same image feature");
  // The texture encoder reuses the classifier's trained hidden layers.
  require(std::equal(texture.layer_sizes.begin(), texture.layer_sizes.end() - 1,
                     classifier.layer_sizes.begin(), classifier.layer_sizes.end() - 1),
          "texture encoder and classifier hidden layers must match");
}

namespace {

void check_net(const MlpF& net, const MlpSpec& spec, const std::string& name) {
  if (static_cast<int>(net.layers().size()) != spec.num_layers()) {
    fail(ErrorCode::kCorruptWeights,
         name + " has " + std::to_string(net.layers().size()) + " layers, expected " +
             std::to_string(spec.num_layers()) + " for " + spec.to_string());
  }
  for (int i = 0; i < spec.num_layers(); ++i) {
    const auto& layer = net.layers()[i];
    const std::string base = name + "." + std::to_string(i);
    if (layer.weight.rows() != spec.layer_sizes[i + 1] ||
        layer.weight.cols() != spec.layer_sizes[i]) {
      fail(ErrorCode::kCorruptWeights,
           base + ".weight has shape " + std::to_string(layer.weight.rows()) + "x" +
               std::to_string(layer.weight.cols()) + ", expected " +
               std::to_string(spec.layer_sizes[i + 1]) + "x" +
               std::to_string(spec.layer_sizes[i]));
    }
    if (layer.bias.size() != spec.layer_sizes[i + 1]) {
      fail(ErrorCode::kCorruptWeights,
           base + ".bias has length " + std::to_string(layer.bias.size()) +
               ", expected " + std::to_string(spec.layer_sizes[i + 1]));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      fail(ErrorCode::kCorruptWeights, base + " contains non-finite values");
    }
  }
}

}  // namespace

WeightSet WeightSet::random(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  WeightSet w;
  w.arch = arch;
  auto make = [&](const MlpSpec& spec, std::uint64_t index) {
    Rng rng(derive_seed(seed, index));
    return MlpF::random(spec, rng);
  };
  w.force = make(arch.force, 0);
  w.speed = make(arch.speed, 1);
  w.action = make(arch.action, 2);
  w.texture = make(arch.texture, 3);
  w.classifier = make(arch.classifier, 4);
  w.predictor = make(arch.predictor, 5);
  w.config_hash = "random:" + std::to_string(seed);
  return w;
}

WeightSet WeightSet::zeros(const Architecture& arch) {
  arch.validate();
  WeightSet w;
  w.arch = arch;
  w.force = MlpF(arch.force);
  w.speed = MlpF(arch.speed);
  w.action = MlpF(arch.action);
  w.texture = MlpF(arch.texture);
  w.classifier = MlpF(arch.classifier);
  w.predictor = MlpF(arch.predictor);
  w.config_hash = "zeros";
  return w;
}

void WeightSet::validate() const {
  arch.validate();
  check_net(force, arch.force, "force");
  check_net(speed, arch.speed, "speed");
  check_net(action, arch.action, "action");
  check_net(texture, arch.texture, "texture");
  check_net(classifier, arch.classifier, "classifier");
  check_net(predictor, arch.predictor, "predictor");
}

// ---------------------------------------------------------------------------

void ActionWindow::push(double force_n, double vx_mm_s, double vy_mm_s) {
  std::copy(forces_.begin() + 1, forces_.end(), forces_.begin());
  forces_.back() = static_cast<float>(force_n);
  std::copy(velocities_.begin() + 2, velocities_.end(), velocities_.begin());
  velocities_[2 * kActionSteps - 2] = static_cast<float>(vx_mm_s);
  velocities_[2 * kActionSteps - 1] = static_cast<float>(vy_mm_s);
}

void ActionWindow::reset() {
  forces_.fill(0.0f);
  velocities_.fill(0.0f);
}

const TextureEmbedding* TextureLibrary::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void TextureLibrary::validate(int embedding_dim, int feature_dim) const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    require(!e.id.empty(), "texture id must not be empty");
    require(seen.insert(e.id).second, "duplicate texture id: " + e.id);
    require(static_cast<int>(e.vector.size()) == embedding_dim,
            "texture " + e.id + " embedding has dimension " +
                std::to_string(e.vector.size()) + ", expected " +
                std::to_string(embedding_dim));
  }
  require(features.empty() || features.size() == entries.size(),
          "feature list does not match library entries");
  for (std::size_t i = 0; i < features.size(); ++i) {
    require(features[i].empty() || static_cast<int>(features[i].size()) == feature_dim,
            "texture " + entries[i].id + " feature has dimension " +
                std::to_string(features[i].size()) + ", expected " +
                std::to_string(feature_dim));
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Vector<float>> make_buffers(const MlpSpec& spec) {
  std::vector<Vector<float>> buffers;
  for (int size : spec.layer_sizes) buffers.push_back(Vector<float>::Zero(size));
  return buffers;
}

}  // namespace

Predictor::Predictor(std::shared_ptr<const WeightSet> weights,
                     std::span<const float> embedding)
    : weights_(std::move(weights)) {
  require(weights_ != nullptr, "predictor needs weights");
  const auto& w = *weights_;
  w.arch.validate();
  check_net(w.force, w.arch.force, "force");
  check_net(w.speed, w.arch.speed, "speed");
  check_net(w.action, w.arch.action, "action");
  check_net(w.predictor, w.arch.predictor, "predictor");
  require(static_cast<int>(embedding.size()) == w.arch.embedding_dim(),
          "texture embedding has dimension " + std::to_string(embedding.size()) +
              ", expected " + std::to_string(w.arch.embedding_dim()));
  const auto& first = w.predictor.layers().front();
  const Eigen::Map<const Vector<float>> e(embedding.data(),
                                          static_cast<Eigen::Index>(embedding.size()));
  texture_term_ = first.bias;
  texture_term_.noalias() += first.weight.leftCols(w.arch.embedding_dim()) * e;
  force_buf_ = make_buffers(w.arch.force);
  speed_buf_ = make_buffers(w.arch.speed);
  action_buf_ = make_buffers(w.arch.action);
  predictor_buf_ = make_buffers(w.arch.predictor);
}

void Predictor::run(const MlpF& net, std::vector<Vector<float>>& buffers) const {
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& out = buffers[i + 1];
    out.noalias() = layers[i].weight * buffers[i];
    out += layers[i].bias;
    if (i + 1 < layers.size()) out = out.cwiseMax(0.0f);
  }
}

const Vector<float>& Predictor::evaluate(std::span<const float> forces,
                                         std::span<const float> velocities) {
  const auto& w = *weights_;
  require(static_cast<int>(forces.size()) == w.arch.window &&
              static_cast<int>(velocities.size()) == 2 * w.arch.window,
          "action window length does not match the architecture");

  force_buf_[0] = Eigen::Map<const Vector<float>>(forces.data(), w.arch.window);
  run(w.force, force_buf_);
  speed_buf_[0] = Eigen::Map<const Vector<float>>(velocities.data(), 2 * w.arch.window);
  run(w.speed, speed_buf_);

  const auto force_out = w.arch.force.output_size();
  action_buf_[0].head(force_out) = force_buf_.back();
  action_buf_[0].tail(w.arch.speed.output_size()) = speed_buf_.back();
  run(w.action, action_buf_);

  const auto& layers = w.predictor.layers();
  auto& h = predictor_buf_[1];
  h.noalias() = layers[0].weight.rightCols(w.arch.action.output_size()) * action_buf_.back();
  h += texture_term_;
  if (layers.size() > 1) h = h.cwiseMax(0.0f);
  for (std::size_t i = 1; i < layers.size(); ++i) {
    auto& next = predictor_buf_[i + 1];
    next.noalias() = layers[i].weight * predictor_buf_[i];
    next += layers[i].bias;
    if (i + 1 < layers.size()) next = next.cwiseMax(0.0f);
  }
  return predictor_buf_.back();
}

void Predictor::predict_raw(std::span<const float> forces,
                            std::span<const float> velocities, std::span<float> out) {
  require(static_cast<int>(out.size()) == weights_->arch.bins(), "output length mismatch");
  const auto& result = evaluate(forces, velocities);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = result[static_cast<Eigen::Index>(k)];
}

void Predictor::predict(const ActionWindow& window, std::span<double> out) {
  const auto& w = *weights_;
  require(w.arch.window == kActionSteps, "architecture window is not 10 steps");
  require(static_cast<int>(out.size()) == w.arch.bins(), "output length mismatch");
  const auto& result = evaluate(window.forces(), window.velocities());
  for (int k = 0; k < w.arch.bins(); ++k) {
    out[k] = std::max(0.0, static_cast<double>(result[k]));
  }
}

MagnitudeFrame predict_acceleration_dft(const TextureEmbedding& texture,
                                        const ActionWindow& action,
                                        const WeightSet& weights) {
  require(weights.arch.bins() == kModelBins, "predictor must emit 100 bins");
  // Non-owning handle; the predictor does not outlive this call.
  std::shared_ptr<const WeightSet> handle(std::shared_ptr<const WeightSet>{}, &weights);
  Predictor predictor(handle, texture.vector);
  MagnitudeFrame frame;
  predictor.predict(action, frame.bins);
  return frame;
}

TextureEmbedding encode_texture(std::span<const float> feature, const WeightSet& weights,
                                std::string id, std::string name) {
  require(static_cast<int>(feature.size()) == weights.arch.feature_dim(),
          "image feature has dimension " + std::to_string(feature.size()) +
              ", expected " + std::to_string(weights.arch.feature_dim()));
  const Eigen::Map<const Vector<float>> x(feature.data(),
                                          static_cast<Eigen::Index>(feature.size()));
  const Vector<float> out = weights.texture.forward(x);
  TextureEmbedding e;
  e.id = std::move(id);
  e.name = std::move(name);
  e.vector.assign(out.data(), out.data() + out.size());
  return e;
}

NeighborMatch nearest_neighbor(const TextureEmbedding& query,
                               const TextureLibrary& library) {
  require(!library.entries.empty(), "texture library is empty");
  std::size_t best = 0;
  double best_sq = 0.0;
  for (std::size_t i = 0; i < library.entries.size(); ++i) {
    const auto& v = library.entries[i].vector;
    require(v.size() == query.vector.size(),
            "query dimension " + std::to_string(query.vector.size()) +
                " does not match library entry " + library.entries[i].id);
    double sq = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double d = static_cast<double>(query.vector[j]) - v[j];
      sq += d * d;
    }
    if (i == 0 || sq < best_sq ||
        (sq == best_sq && library.entries[i].id < library.entries[best].id)) {
      best = i;
      best_sq = sq;
    }
  }
  return {library.entries[best], std::sqrt(best_sq), best};
}

std::uint64_t parameter_hash(const MlpF& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const float* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (Eigen::Index i = 0; i < count * static_cast<Eigen::Index>(sizeof(float)); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& layer : net.layers()) {
    mix(layer.weight.data(), layer.weight.size());
    mix(layer.bias.data(), layer.bias.size());
  }
  return h;
}

}  // namespace vtex
