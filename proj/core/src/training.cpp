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

#include "vtex/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <type_traits>

#include "vtex/error.hpp"
#include "vtex/random.hpp"

namespace vtex {
namespace {

// Layer inputs recorded during a forward pass: a[0] is the network input,
// a[i] the (rectified) output of layer i - 1, a.back() the linear output.
template <typename Scalar>
struct Tape {
  std::vector<Matrix<Scalar>> a;
};

template <typename Scalar>
const Matrix<Scalar>& forward_tape(const Mlp<Scalar>& net, const Matrix<Scalar>& input,
                                   Tape<Scalar>& tape) {
  const auto& layers = net.layers();
  tape.a.resize(layers.size() + 1);
  tape.a[0] = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& y = tape.a[i + 1];
    y.noalias() = layers[i].weight * tape.a[i];
    y.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) y = y.cwiseMax(Scalar(0));
  }
  return tape.a.back();
}

// Backpropagates `delta` (gradient wrt the output) and overwrites `grad`.
template <typename Scalar>
void backward(const Mlp<Scalar>& net, const Tape<Scalar>& tape, Matrix<Scalar> delta,
              Mlp<Scalar>& grad, std::type_identity_t<Matrix<Scalar>>* input_grad) {
  const auto& layers = net.layers();
  for (std::size_t i = layers.size(); i-- > 0;) {
    grad.layers()[i].weight.noalias() = delta * tape.a[i].transpose();
    grad.layers()[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Matrix<Scalar> upstream = layers[i].weight.transpose() * delta;
      delta = upstream.cwiseProduct((tape.a[i].array() > Scalar(0)).matrix().template cast<Scalar>());
    } else if (input_grad != nullptr) {
      input_grad->noalias() = layers[0].weight.transpose() * delta;
    }
  }
}

template <typename Scalar>
struct Stage2Forward {
  Tape<Scalar> force;
  Tape<Scalar> speed;
  Tape<Scalar> action;
  Tape<Scalar> predictor;
};

template <typename Scalar>
const Matrix<Scalar>& stage2_forward(const ActionNets<Scalar>& nets,
                                     const Stage2Batch<Scalar>& batch,
                                     Stage2Forward<Scalar>& f) {
  const Eigen::Index n = batch.forces.cols();
  require(batch.velocities.cols() == n && static_cast<Eigen::Index>(batch.texture.size()) == n,
          "stage-2 batch columns disagree");
  const auto& fcode = forward_tape(nets.force, batch.forces, f.force);
  const auto& scode = forward_tape(nets.speed, batch.velocities, f.speed);
  Matrix<Scalar> action_in(fcode.rows() + scode.rows(), n);
  action_in.topRows(fcode.rows()) = fcode;
  action_in.bottomRows(scode.rows()) = scode;
  const auto& acode = forward_tape(nets.action, action_in, f.action);
  const Eigen::Index e = batch.embeddings.rows();
  Matrix<Scalar> pred_in(e + acode.rows(), n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const int t = batch.texture[static_cast<std::size_t>(b)];
    require(t >= 0 && t < batch.embeddings.cols(), "texture index out of range");
    pred_in.col(b).head(e) = batch.embeddings.col(t);
  }
  pred_in.bottomRows(acode.rows()) = acode;
  return forward_tape(nets.predictor, pred_in, f.predictor);
}

template <typename Scalar>
struct AdamSlots {
  std::vector<Matrix<Scalar>> mw, vw;
  std::vector<Vector<Scalar>> mb, vb;

  explicit AdamSlots(const Mlp<Scalar>& net) {
    for (const auto& layer : net.layers()) {
      mw.push_back(Matrix<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()));
      vw.push_back(Matrix<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()));
      mb.push_back(Vector<Scalar>::Zero(layer.bias.size()));
      vb.push_back(Vector<Scalar>::Zero(layer.bias.size()));
    }
  }
};

template <typename Scalar, typename Param, typename Grad, typename Moment>
void adam_update(Param& p, const Grad& g, Moment& m, Moment& v, const AdamConfig& c,
                 Scalar step_size, Scalar bias2) {
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar eps = static_cast<Scalar>(c.epsilon);
  m.array() = b1 * m.array() + (Scalar(1) - b1) * g.array();
  v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
  p.array() -= step_size * m.array() / ((v.array() / bias2).sqrt() + eps);
}

template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const Mlp<Scalar>& grad, AdamSlots<Scalar>& slots,
               const AdamConfig& config, long step) {
  const Scalar bias1 = static_cast<Scalar>(1.0 - std::pow(config.beta1, static_cast<double>(step)));
  const Scalar bias2 = static_cast<Scalar>(1.0 - std::pow(config.beta2, static_cast<double>(step)));
  const Scalar step_size = static_cast<Scalar>(config.learning_rate) / bias1;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    adam_update(net.layers()[i].weight, grad.layers()[i].weight, slots.mw[i], slots.vw[i],
                config, step_size, bias2);
    adam_update(net.layers()[i].bias, grad.layers()[i].bias, slots.mb[i], slots.vb[i], config,
                step_size, bias2);
  }
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  }
  return order;
}

Stage2Batch<float> gather(const Stage2Set& set, const Matrix<float>& embeddings,
                          std::span<const std::size_t> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Stage2Batch<float> batch;
  batch.embeddings = embeddings;
  batch.forces.resize(set.window, n);
  batch.velocities.resize(2 * set.window, n);
  batch.targets.resize(set.bins, n);
  batch.texture.resize(rows.size());
  for (Eigen::Index b = 0; b < n; ++b) {
    const std::size_t i = rows[static_cast<std::size_t>(b)];
    batch.texture[static_cast<std::size_t>(b)] = static_cast<int>(set.texture[i]);
    std::copy_n(set.forces.data() + i * set.window, set.window, batch.forces.col(b).data());
    std::copy_n(set.velocities.data() + i * 2 * set.window, 2 * set.window,
                batch.velocities.col(b).data());
    std::copy_n(set.targets.data() + i * set.bins, set.bins, batch.targets.col(b).data());
  }
  return batch;
}

Matrix<float> embedding_matrix(const WeightSet& weights, const Stage2Dataset& data) {
  const auto embeddings = embed_textures(weights, data);
  Matrix<float> m(weights.arch.embedding_dim(), static_cast<Eigen::Index>(embeddings.size()));
  for (std::size_t t = 0; t < embeddings.size(); ++t) {
    std::copy(embeddings[t].vector.begin(), embeddings[t].vector.end(),
              m.col(static_cast<Eigen::Index>(t)).data());
  }
  return m;
}

void check_set(const Stage2Set& set, const Architecture& arch, std::size_t textures,
               const char* name) {
  require(set.window == arch.window, std::string(name) + " set window does not match the architecture");
  require(set.bins == arch.bins(), std::string(name) + " set bin count does not match the predictor");
  const std::size_t n = set.size();
  require(set.forces.size() == n * set.window && set.velocities.size() == n * 2 * set.window &&
              set.targets.size() == n * set.bins,
          std::string(name) + " set arrays have inconsistent lengths");
  for (auto t : set.texture) {
    require(t < textures, std::string(name) + " set references an unknown texture");
  }
}

ActionNets<float> action_nets(const WeightSet& w) {
  return {w.force, w.speed, w.action, w.predictor};
}

}  // namespace

// ---------------------------------------------------------------------------

void Stage1Dataset::validate(int feature_dim, int head_size) const {
  require(num_classes >= 2, "stage 1 needs at least 2 classes");
  require(num_classes <= head_size,
          std::to_string(num_classes) + " classes do not fit a classifier head of " +
              std::to_string(head_size));
  require(features.size() == labels.size(), "stage-1 features and labels differ in count");
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes,
            "label " + std::to_string(labels[i]) + " out of range");
    require(static_cast<int>(features[i].size()) == feature_dim,
            "stage-1 feature has dimension " + std::to_string(features[i].size()) +
                ", expected " + std::to_string(feature_dim));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (int c = 0; c < num_classes; ++c) {
    require(counts[static_cast<std::size_t>(c)] >= 4,
            "class " + std::to_string(c) + " has fewer than 4 examples");
  }
}

void Stage2Set::append(std::uint32_t texture_index, std::span<const float> window_forces,
                       std::span<const float> window_velocities, std::span<const float> target) {
  require(static_cast<int>(window_forces.size()) == window &&
              static_cast<int>(window_velocities.size()) == 2 * window &&
              static_cast<int>(target.size()) == bins,
          "stage-2 example does not match the set layout");
  texture.push_back(texture_index);
  forces.insert(forces.end(), window_forces.begin(), window_forces.end());
  velocities.insert(velocities.end(), window_velocities.begin(), window_velocities.end());
  targets.insert(targets.end(), target.begin(), target.end());
}

template <typename Scalar>
ActionNets<Scalar> ActionNets<Scalar>::zeros_like() const {
  return {Mlp<Scalar>(force.spec()), Mlp<Scalar>(speed.spec()), Mlp<Scalar>(action.spec()),
          Mlp<Scalar>(predictor.spec())};
}

template struct ActionNets<float>;
template struct ActionNets<double>;

template <typename Scalar>
Scalar stage2_loss(const ActionNets<Scalar>& nets, const Stage2Batch<Scalar>& batch,
                   ActionNets<Scalar>* grad) {
  const Eigen::Index n = batch.targets.cols();
  require(n > 0, "empty stage-2 batch");
  Stage2Forward<Scalar> f;
  const Matrix<Scalar> diff = stage2_forward(nets, batch, f) - batch.targets;
  Vector<Scalar> dist(n);
  for (Eigen::Index b = 0; b < n; ++b) dist[b] = diff.col(b).norm();
  const Scalar loss = dist.sum() / static_cast<Scalar>(n);
  if (grad == nullptr) return loss;

  Matrix<Scalar> delta = diff;
  for (Eigen::Index b = 0; b < n; ++b) {
    // The distance is not differentiable at zero; use the zero subgradient.
    const Scalar scale = dist[b] > Scalar(0) ? Scalar(1) / (dist[b] * static_cast<Scalar>(n)) : Scalar(0);
    delta.col(b) *= scale;
  }
  Matrix<Scalar> d_pred_in;
  backward(nets.predictor, f.predictor, std::move(delta), grad->predictor, &d_pred_in);
  const Eigen::Index a = nets.action.spec().output_size();
  Matrix<Scalar> d_action_in;
  backward(nets.action, f.action, Matrix<Scalar>(d_pred_in.bottomRows(a)), grad->action,
           &d_action_in);
  const Eigen::Index fo = nets.force.spec().output_size();
  const Eigen::Index so = nets.speed.spec().output_size();
  backward(nets.force, f.force, Matrix<Scalar>(d_action_in.topRows(fo)), grad->force, nullptr);
  backward(nets.speed, f.speed, Matrix<Scalar>(d_action_in.bottomRows(so)), grad->speed,
           nullptr);
  return loss;
}

template <typename Scalar>
Scalar stage1_loss(const Mlp<Scalar>& classifier, const Matrix<Scalar>& inputs,
                   const std::vector<int>& labels, Mlp<Scalar>* grad) {
  const Eigen::Index n = inputs.cols();
  require(n > 0 && static_cast<Eigen::Index>(labels.size()) == n,
          "stage-1 batch labels do not match inputs");
  Tape<Scalar> tape;
  const Matrix<Scalar>& logits = forward_tape(classifier, inputs, tape);
  Matrix<Scalar> delta(logits.rows(), n);
  Scalar loss = 0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    require(label >= 0 && label < logits.rows(), "label outside the classifier head");
    const Scalar top = logits.col(b).maxCoeff();
    const Eigen::Array<Scalar, Eigen::Dynamic, 1> shifted = (logits.col(b).array() - top).exp();
    const Scalar total = shifted.sum();
    loss += std::log(total) + top - logits(label, b);
    delta.col(b) = shifted / total;
    delta(label, b) -= Scalar(1);
  }
  loss /= static_cast<Scalar>(n);
  if (grad != nullptr) {
    delta /= static_cast<Scalar>(n);
    backward(classifier, tape, std::move(delta), *grad, nullptr);
  }
  return loss;
}

template float stage2_loss(const ActionNets<float>&, const Stage2Batch<float>&,
                           ActionNets<float>*);
template double stage2_loss(const ActionNets<double>&, const Stage2Batch<double>&,
                            ActionNets<double>*);
template float stage1_loss(const Mlp<float>&, const Matrix<float>&, const std::vector<int>&,
                           Mlp<float>*);
template double stage1_loss(const Mlp<double>&, const Matrix<double>&,
                            const std::vector<int>&, Mlp<double>*);

// ---------------------------------------------------------------------------

Stage1Result train_stage1(WeightSet& weights, const Stage1Dataset& data,
                          const Stage1Config& config) {
  weights.validate();
  data.validate(weights.arch.feature_dim(), weights.arch.num_classes());
  require(config.epochs >= 1 && config.batch_size >= 1, "epochs and batch size must be positive");

  const auto n = static_cast<Eigen::Index>(data.features.size());
  Matrix<float> inputs(weights.arch.feature_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::copy(data.features[static_cast<std::size_t>(i)].begin(),
              data.features[static_cast<std::size_t>(i)].end(), inputs.col(i).data());
  }

  auto& net = weights.classifier;
  Mlp<float> grad(net.spec());
  AdamSlots<float> slots(net);
  Rng rng(derive_seed(config.seed, 101));
  Stage1Result result;
  result.initial_loss = stage1_loss<float>(net, inputs, data.labels, nullptr);
  long step = 0;
  Matrix<float> batch;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(data.features.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.resize(inputs.rows(), static_cast<Eigen::Index>(end - start));
      batch_labels.clear();
      for (std::size_t j = start; j < end; ++j) {
        batch.col(static_cast<Eigen::Index>(j - start)) = inputs.col(static_cast<Eigen::Index>(order[j]));
        batch_labels.push_back(data.labels[order[j]]);
      }
      stage1_loss<float>(net, batch, batch_labels, &grad);
      adam_step(net, grad, slots, config.adam, ++step);
    }
    result.epoch_loss.push_back(stage1_loss<float>(net, inputs, data.labels, nullptr));
  }

  const Matrix<float> logits = net.forward_batch(inputs);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    logits.col(i).maxCoeff(&best);
    if (best == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (!net.all_finite()) fail(ErrorCode::kInternal, "stage-1 training diverged (non-finite weights)");
  return result;
}

void tie_texture_encoder(WeightSet& weights, std::uint64_t seed) {
  weights.arch.validate();
  auto& texture = weights.texture.layers();
  const auto& trunk = weights.classifier.layers();
  for (std::size_t i = 0; i + 1 < texture.size(); ++i) texture[i] = trunk[i];
  auto& head = texture.back();
  Rng rng(derive_seed(seed, 211));
  const double scale = 1.0 / std::sqrt(static_cast<double>(head.weight.cols()));
  for (Eigen::Index i = 0; i < head.weight.size(); ++i) {
    head.weight.data()[i] = static_cast<float>(scale * rng.normal());
  }
  head.bias.setZero();
}

std::uint64_t encoder_hash(const WeightSet& weights) { return parameter_hash(weights.texture); }

std::vector<TextureEmbedding> embed_textures(const WeightSet& weights, const Stage2Dataset& data) {
  require(data.features.size() == data.texture_ids.size(),
          "stage-2 dataset needs one feature per texture");
  std::vector<TextureEmbedding> out;
  for (std::size_t t = 0; t < data.features.size(); ++t) {
    out.push_back(encode_texture(data.features[t], weights, data.texture_ids[t], data.texture_ids[t]));
  }
  return out;
}

std::vector<float> mean_target(const Stage2Set& set) {
  require(set.size() > 0, "mean target of an empty set");
  std::vector<double> acc(static_cast<std::size_t>(set.bins), 0.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (int k = 0; k < set.bins; ++k) acc[static_cast<std::size_t>(k)] += set.targets[i * set.bins + k];
  }
  std::vector<float> mean(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    mean[k] = static_cast<float>(acc[k] / static_cast<double>(set.size()));
  }
  return mean;
}

Stage2Evaluation evaluate_stage2(const WeightSet& weights, const Stage2Dataset& data,
                                 const Stage2Set& set, std::span<const float> mean) {
  check_set(set, weights.arch, data.features.size(), "evaluation");
  require(static_cast<int>(mean.size()) == set.bins, "baseline frame has the wrong bin count");
  const Matrix<float> embeddings = embedding_matrix(weights, data);
  const ActionNets<float> nets = action_nets(weights);
  const Eigen::Map<const Vector<float>> baseline(mean.data(), set.bins);

  Stage2Evaluation eval;
  const std::size_t textures = data.features.size();
  eval.per_texture_model.assign(textures, 0.0);
  eval.per_texture_baseline.assign(textures, 0.0);
  eval.per_texture_count.assign(textures, 0);
  if (set.size() == 0) return eval;

  constexpr std::size_t kChunk = 2048;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < set.size(); start += kChunk) {
    const std::size_t end = std::min(set.size(), start + kChunk);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto batch = gather(set, embeddings, rows);
    Stage2Forward<float> f;
    const Matrix<float> pred = stage2_forward(nets, batch, f).cwiseMax(0.0f);
    for (Eigen::Index b = 0; b < pred.cols(); ++b) {
      const double model = (pred.col(b) - batch.targets.col(b)).template cast<double>().norm();
      const double base = (baseline - batch.targets.col(b)).template cast<double>().norm();
      const auto t = static_cast<std::size_t>(batch.texture[static_cast<std::size_t>(b)]);
      eval.per_texture_model[t] += model;
      eval.per_texture_baseline[t] += base;
      ++eval.per_texture_count[t];
      eval.model_loss += model;
      eval.baseline_loss += base;
    }
  }
  eval.model_loss /= static_cast<double>(set.size());
  eval.baseline_loss /= static_cast<double>(set.size());
  for (std::size_t t = 0; t < textures; ++t) {
    if (eval.per_texture_count[t] > 0) {
      eval.per_texture_model[t] /= static_cast<double>(eval.per_texture_count[t]);
      eval.per_texture_baseline[t] /= static_cast<double>(eval.per_texture_count[t]);
    }
  }
  return eval;
}

Stage2Result train_stage2(WeightSet& weights, const Stage2Dataset& data,
                          const Stage2Config& config) {
  weights.validate();
  require(!data.features.empty(), "stage-2 dataset has no textures");
  require(data.train.size() > 0, "stage-2 training set is empty");
  require(config.epochs >= 1 && config.batch_size >= 1, "epochs and batch size must be positive");
  check_set(data.train, weights.arch, data.features.size(), "training");
  check_set(data.heldout, weights.arch, data.features.size(), "held-out");

  const std::uint64_t frozen = encoder_hash(weights);
  const std::uint64_t classifier_before = parameter_hash(weights.classifier);
  const Matrix<float> embeddings = embedding_matrix(weights, data);
  ActionNets<float> nets = action_nets(weights);
  const auto train_mean = mean_target(data.train);

  if (config.data_init) {
    auto rms = [](const std::vector<float>& v) {
      double acc = 0.0;
      for (float x : v) acc += static_cast<double>(x) * x;
      return std::sqrt(acc / static_cast<double>(v.size()));
    };
    const double force_rms = rms(data.train.forces);
    const double speed_rms = rms(data.train.velocities);
    if (force_rms > 0.0) nets.force.layers()[0].weight /= static_cast<float>(force_rms);
    if (speed_rms > 0.0) nets.speed.layers()[0].weight /= static_cast<float>(speed_rms);
    nets.predictor.layers().back().bias =
        Eigen::Map<const Vector<float>>(train_mean.data(), data.train.bins);
  }

  ActionNets<float> grad = nets.zeros_like();
  AdamSlots<float> s_force(nets.force), s_speed(nets.speed), s_action(nets.action),
      s_predictor(nets.predictor);
  Rng rng(derive_seed(config.seed, 303));
  Stage2Result result;
  {
    std::vector<std::size_t> all(data.train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    double total = 0.0;
    for (std::size_t start = 0; start < all.size(); start += 2048) {
      const std::size_t end = std::min(all.size(), start + 2048);
      const auto batch = gather(data.train, embeddings, std::span(all).subspan(start, end - start));
      total += static_cast<double>(stage2_loss<float>(nets, batch, nullptr)) * static_cast<double>(end - start);
    }
    result.initial_loss = total / static_cast<double>(all.size());
  }

  long step = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(data.train.size(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const auto batch = gather(data.train, embeddings, std::span(order).subspan(start, end - start));
      const float loss = stage2_loss<float>(nets, batch, &grad);
      total += static_cast<double>(loss) * static_cast<double>(end - start);
      ++step;
      adam_step(nets.force, grad.force, s_force, config.adam, step);
      adam_step(nets.speed, grad.speed, s_speed, config.adam, step);
      adam_step(nets.action, grad.action, s_action, config.adam, step);
      adam_step(nets.predictor, grad.predictor, s_predictor, config.adam, step);
    }
    result.epoch_loss.push_back(total / static_cast<double>(order.size()));
  }

  for (const auto* net : {&nets.force, &nets.speed, &nets.action, &nets.predictor}) {
    if (!net->all_finite()) fail(ErrorCode::kInternal, "stage-2 training diverged (non-finite weights)");
  }
  weights.force = std::move(nets.force);
  weights.speed = std::move(nets.speed);
  weights.action = std::move(nets.action);
  weights.predictor = std::move(nets.predictor);
  if (encoder_hash(weights) != frozen || parameter_hash(weights.classifier) != classifier_before) {
    fail(ErrorCode::kInternal, "frozen encoder weights changed during stage 2");
  }

  if (data.heldout.size() > 0) {
    const auto eval = evaluate_stage2(weights, data, data.heldout, train_mean);
    result.heldout_loss = eval.model_loss;
    result.baseline_heldout_loss = eval.baseline_loss;
  }
  return result;
}

}  // namespace vtex
