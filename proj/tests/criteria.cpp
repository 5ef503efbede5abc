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

#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "support.hpp"
#include "vtex/engine.hpp"
#include "vtex/error.hpp"
#include "vtex/features.hpp"
#include "vtex/io.hpp"
#include "vtex/model_io.hpp"
#include "vtex/phase.hpp"
#include "vtex/random.hpp"
#include "vtex/training.hpp"

namespace vtex::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

int run_cli(const std::vector<std::string>& args, std::string* output = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (output) *output = out.str() + err.str();
  return code;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0;
  double a = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    a += analytic[i] * analytic[i];
    n += numeric[i] * numeric[i];
  }
  const double scale = std::sqrt(a) + std::sqrt(n);
  return scale > 0.0 ? std::sqrt(diff) / scale : 0.0;
}

// Central differences over every parameter of `net`, evaluating `loss()`.
template <typename LossFn>
std::vector<double> numeric_gradient(Mlp<double>& net, LossFn&& loss, double h) {
  std::vector<double> out;
  for (auto& layer : net.layers()) {
    for (auto* tensor : {static_cast<double*>(layer.weight.data()), layer.bias.data()}) {
      const auto count = tensor == layer.bias.data() ? layer.bias.size() : layer.weight.size();
      for (Eigen::Index i = 0; i < count; ++i) {
        const double saved = tensor[i];
        tensor[i] = saved + h;
        const double up = loss();
        tensor[i] = saved - h;
        const double down = loss();
        tensor[i] = saved;
        out.push_back((up - down) / (2.0 * h));
      }
    }
  }
  return out;
}

std::vector<double> flatten(const Mlp<double>& net) {
  std::vector<double> out;
  for (const auto& layer : net.layers()) {
    out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

Mlp<double> random_mlp(const MlpSpec& spec, Rng& rng) {
  auto net = Mlp<double>::random(spec, rng);
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.1 * rng.normal();
  }
  return net;
}

Matrix<double> random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale,
                             bool positive = false) {
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = scale * rng.normal();
    m.data()[i] = positive ? std::abs(v) : v;
  }
  return m;
}

// Sinusoid amplitude by projection onto sin and cos over whole periods.
double tone_amplitude(const std::vector<double>& y, std::size_t begin, double freq, double rate) {
  double s = 0.0;
  double c = 0.0;
  const std::size_t n = y.size() - begin;
  for (std::size_t i = begin; i < y.size(); ++i) {
    const double phase = 2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate;
    s += y[i] * std::sin(phase);
    c += y[i] * std::cos(phase);
  }
  return 2.0 / static_cast<double>(n) * std::hypot(s, c);
}

}  // namespace

// ---------------------------------------------------------------------------

Outcome spsi_causality(int streams, std::uint64_t seed) {
  Rng rng(seed);
  const double rates[] = {500.0, 1000.0, 2000.0};
  int identical = 0;
  for (int s = 0; s < streams; ++s) {
    const auto geometry = FrameGeometry::make(rates[rng.below(3)], 500.0);
    const auto frames = 30 + static_cast<std::size_t>(rng.below(60));
    const auto prefix = 1 + static_cast<std::size_t>(rng.below(frames - 1));
    MagnitudeFrames a(frames, std::vector<double>(static_cast<std::size_t>(geometry.num_bins())));
    for (auto& f : a) {
      for (auto& v : f) v = std::abs(rng.normal()) * (rng.uniform() < 0.2 ? 10.0 : 1.0);
    }
    MagnitudeFrames b = a;
    for (std::size_t k = prefix; k < frames; ++k) {
      for (auto& v : b[k]) v = std::abs(rng.normal()) * 3.0;
    }
    const auto ya = synthesize_stream(a, geometry);
    const auto yb = synthesize_stream(b, geometry);
    const std::size_t n = prefix * static_cast<std::size_t>(geometry.hop);
    if (std::memcmp(ya.data(), yb.data(), n * sizeof(double)) == 0) ++identical;
  }
  return {identical == streams,
          format("%d/%d streams with bit-identical prefixes", identical, streams)};
}

Outcome spsi_quality() {
  struct Case {
    double fs, loop, f1, a1, f2, a2;
  };
  // Two-tone cases keep their partials at least 3 bins (30 Hz) apart so each
  // is a separate spectral peak.
  const Case cases[] = {{1000, 500, 100, 1, 0, 0},  {1000, 500, 97, 1, 0, 0},
                        {500, 500, 50, 1, 0, 0},    {500, 500, 123.4, 2, 0, 0},
                        {1000, 500, 80, 1, 210, 0.5}, {500, 500, 60, 1, 170, 0.7},
                        {1000, 250, 300, 1, 0, 0},  {2000, 500, 150, 1, 420, 0.3},
                        {500, 500, 33, 1, 77, 1},   {1000, 500, 250, 1, 290, 0.8}};
  const auto start = Clock::now();
  int passed = 0;
  double worst_ratio = 0.0;
  double worst_error = 0.0;
  for (const auto& c : cases) {
    const auto g = FrameGeometry::make(c.fs, c.loop);
    const int frames = 200;
    const int tail = (g.frame_len + g.hop - 1) / g.hop;
    const int len = (frames + tail - 1) * g.hop + g.frame_len;
    std::vector<double> x(static_cast<std::size_t>(len));
    for (int n = 0; n < len; ++n) {
      x[n] = c.a1 * std::sin(2 * std::numbers::pi * c.f1 * n / c.fs + 0.3) +
             c.a2 * std::sin(2 * std::numbers::pi * c.f2 * n / c.fs + 1.1);
    }
    auto stream = stft_magnitudes(x, g);
    stream.resize(static_cast<std::size_t>(frames + tail));
    const auto y = synthesize_stream(stream, g);
    const MagnitudeFrames reference(stream.begin(), stream.begin() + frames);
    const double spsi = spectral_consistency_error(reference, y, g);
    const double gl = griffin_lim(reference, g, {100, std::nullopt}).errors.back();
    worst_ratio = std::max(worst_ratio, spsi / gl);
    worst_error = std::max(worst_error, spsi);
    if (spsi <= 2.0 * gl && spsi < 0.2) ++passed;
  }
  const double seconds = elapsed(start);
  return {passed == 10 && seconds < 10.0,
          format("%d/10 cases; worst SPSI/GL %.2f, worst SPSI error %.3f, %.1f s", passed,
                 worst_ratio, worst_error, seconds)};
}

Outcome gradient_check() {
  Rng rng(515);
  const double h = 1e-6;
  double worst = 0.0;

  const auto arch = test::small_arch(12, 7);
  ActionNets<double> nets{random_mlp(arch.force, rng), random_mlp(arch.speed, rng),
                          random_mlp(arch.action, rng), random_mlp(arch.predictor, rng)};
  Stage2Batch<double> batch;
  const int b = 6;
  batch.embeddings = random_matrix(arch.embedding_dim(), 3, rng, 1.0);
  batch.texture = {0, 1, 2, 0, 2, 1};
  batch.forces = random_matrix(arch.window, b, rng, 2.0, true);
  batch.velocities = random_matrix(2 * arch.window, b, rng, 30.0);
  batch.targets = random_matrix(arch.bins(), b, rng, 5.0, true);

  ActionNets<double> grad = nets.zeros_like();
  stage2_loss(nets, batch, &grad);
  std::vector<std::pair<Mlp<double>*, Mlp<double>*>> pairs = {{&nets.force, &grad.force},
                                                              {&nets.speed, &grad.speed},
                                                              {&nets.action, &grad.action},
                                                              {&nets.predictor, &grad.predictor}};
  for (auto [net, g] : pairs) {
    const auto numeric = numeric_gradient(
        *net, [&] { return stage2_loss<double>(nets, batch, nullptr); }, h);
    worst = std::max(worst, relative_error(flatten(*g), numeric));
  }
  const double stage2_worst = worst;

  auto classifier = random_mlp(arch.classifier, rng);
  const Matrix<double> inputs = random_matrix(arch.feature_dim(), 8, rng, 1.0);
  const std::vector<int> labels = {0, 1, 2, 3, 4, 0, 2, 4};
  Mlp<double> cgrad(arch.classifier);
  stage1_loss(classifier, inputs, labels, &cgrad);
  const auto numeric = numeric_gradient(
      classifier, [&] { return stage1_loss<double>(classifier, inputs, labels, nullptr); }, h);
  const double stage1_worst = relative_error(flatten(cgrad), numeric);

  return {stage1_worst < 1e-4 && stage2_worst < 1e-4,
          format("worst relative error: stage 1 %.2e, stage 2 %.2e", stage1_worst,
                 stage2_worst)};
}

Outcome physics_constants() {
  RenderConfig config;
  const double pressed = compute_feedback_force({0.0, 0.0, -2.0}, config).normal_n;
  const double clamped = compute_feedback_force({0.0, 0.0, -50.0}, config).normal_n;
  const double lifted = compute_feedback_force({0.0, 0.0, 1.0}, config).normal_n;

  auto weights = test::small_weights(5);
  const auto texture = test::random_embedding(*weights, 6);
  const auto slow = run_trajectory(config, texture, weights, test::circle_trajectory(2.0, 1000, 4.0));
  const bool silent = std::all_of(slow.waveform.begin(), slow.waveform.end(),
                                  [](double v) { return v == 0.0; });
  const auto fast =
      run_trajectory(config, texture, weights, test::circle_trajectory(2.0, 1000, 40.0));
  const bool audible = std::any_of(fast.waveform.begin(), fast.waveform.end(),
                                   [](double v) { return v != 0.0; });

  VelocityFilter filter(config.velocity_lpf_cutoff_hz);
  const double rate = config.loop_rate_hz;
  std::vector<double> y;
  for (int n = 0; n < 5000; ++n) {
    const double x = std::sin(2.0 * std::numbers::pi * 20.0 * n / rate);
    y.push_back(filter.filter({x, x}, 1.0 / rate)[0]);
  }
  const double gain = tone_amplitude(y, 4000, 20.0, rate);

  const bool pass = pressed == 1.0 && clamped == 3.3 && lifted == 0.0 && silent && audible &&
                    std::abs(gain - std::sqrt(0.5)) <= 0.05;
  return {pass, format("-2 mm -> %.6f N, -50 mm -> %.6f N, +1 mm -> %.1f N, 4 mm/s %s, "
                       "40 mm/s %s, 20 Hz gain %.4f",
                       pressed, clamped, lifted, silent ? "silent" : "NOT silent",
                       audible ? "audible" : "silent", gain)};
}

Outcome training_signal(const fs::path& data, const fs::path& out) {
  const Dataset dataset = load_dataset(data);
  std::size_t fewest = SIZE_MAX;
  for (const auto& t : dataset.textures) {
    const auto n = std::count_if(dataset.trajectories.begin(), dataset.trajectories.end(),
                                 [&](const auto& e) { return e.texture_id == t.texture.id; });
    fewest = std::min(fewest, static_cast<std::size_t>(n));
  }
  const auto start = Clock::now();
  std::string log;
  const int code = run_cli({"train", "--data", data.string(), "--out", out.string(), "--seed", "1"},
                           &log);
  const double seconds = elapsed(start);
  if (code != 0) return {false, "train exited " + std::to_string(code) + ": " + log};
  const auto metrics = read_json(out / "metrics.json");
  const double accuracy = metrics["stage1"]["train_accuracy"];
  const double heldout = metrics["stage2"]["heldout_loss"];
  const double baseline = metrics["stage2"]["baseline_heldout_loss"];
  const bool pass = dataset.textures.size() >= 6 && fewest >= 4 && heldout <= 0.7 * baseline &&
                    accuracy >= 0.95 && seconds < 600.0;
  return {pass, format("%zu textures, >= %zu trajectories each; held-out %.3f vs baseline %.3f "
                       "(ratio %.3f); stage-1 accuracy %.3f; %.1f s",
                       dataset.textures.size(), fewest, heldout, baseline, heldout / baseline,
                       accuracy, seconds)};
}

Outcome architecture_fidelity(const fs::path& weights, const fs::path& scratch) {
  const Architecture published = Architecture::published();
  bool sizes = published.classifier.layer_sizes == std::vector<int>{8960, 4096, 512, 93} &&
               published.force.layer_sizes == std::vector<int>{10, 10, 10, 10} &&
               published.speed.layer_sizes == std::vector<int>{20, 20, 20, 20, 10} &&
               published.action.layer_sizes == std::vector<int>{20, 400, 300, 200, 100} &&
               published.texture.layer_sizes == std::vector<int>{8960, 4096, 512, 256} &&
               published.predictor.layer_sizes == std::vector<int>{356, 300, 300, 200, 100, 100};
  // 10 / 20 -> 10 / 10 -> 20 -> 100; 256 + 100 = 356 -> 100.
  const bool algebra = published.force.input_size() == published.window &&
                       published.speed.input_size() == 2 * published.window &&
                       published.action.input_size() ==
                           published.force.output_size() + published.speed.output_size() &&
                       published.predictor.input_size() ==
                           published.embedding_dim() + published.action.output_size() &&
                       published.bins() == kModelBins;
  bool validates = true;
  try {
    published.validate();
  } catch (const Error&) {
    validates = false;
  }

  bool loads = true;
  try {
    load_weights(weights);
  } catch (const Error&) {
    loads = false;
  }

  // Each network's declared sizes edited in an otherwise intact file.
  const std::string bytes = read_bytes(weights);
  const std::size_t header_end = bytes.find("\nend\n");
  int file_rejections = 0;
  int expectation_rejections = 0;
  const char* names[] = {"force", "speed", "action", "texture", "classifier", "predictor"};
  for (const char* name : names) {
    std::string edited = bytes.substr(0, header_end);
    const std::string key = std::string("network ") + name + " (";
    const auto pos = edited.find(key);
    if (pos == std::string::npos) continue;
    edited.insert(pos + key.size(), "1");  // first size gets a leading 1
    const fs::path path = scratch / (std::string("edited_") + name + ".vtw");
    {
      std::ofstream out(path, std::ios::binary);
      out << edited;
      out.write(bytes.data() + header_end, static_cast<std::streamsize>(bytes.size() - header_end));
    }
    try {
      load_weights(path);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kCorruptWeights &&
          std::string(e.what()).find(name) != std::string::npos) {
        ++file_rejections;
      }
    }
    fs::remove(path);
  }
  for (int which = 0; which < 6; ++which) {
    Architecture changed = published;
    MlpSpec* specs[] = {&changed.force,   &changed.speed,      &changed.action,
                        &changed.texture, &changed.classifier, &changed.predictor};
    // Widen a hidden layer; the dimension algebra still holds.
    specs[which]->layer_sizes[1] += 1;
    if (which == 3) changed.classifier.layer_sizes[1] += 1;
    if (which == 4) changed.texture.layer_sizes[1] += 1;
    try {
      load_weights(weights, changed);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kCorruptWeights) ++expectation_rejections;
    }
  }
  sizes = sizes && validates;
  return {sizes && algebra && loads && file_rejections == 6 && expectation_rejections == 6,
          format("published sizes %s, dimension algebra %s, trained file %s, edited files "
                 "rejected %d/6, altered expectations rejected %d/6",
                 sizes ? "ok" : "WRONG", algebra ? "ok" : "WRONG",
                 loads ? "loads" : "REJECTED", file_rejections, expectation_rejections)};
}

Outcome loop_budget(const fs::path& weights, const fs::path& scratch, double duration_s) {
  const fs::path report = scratch / "bench.json";
  std::string log;
  const int code = run_cli({"bench", "--weights", weights.string(), "--duration-s",
                            std::to_string(duration_s), "--out", report.string()},
                           &log);
  if (!fs::exists(report)) return {false, "bench produced no report: " + log};
  const auto json = read_json(report);
  const double median = json["wall_clock"]["median_s"];
  const double p99 = json["wall_clock"]["p99_s"];
  const std::uint64_t loops = json["loops"];
  return {code == 0 && median <= 2e-3 && p99 <= 4e-3,
          format("%llu loops (%.0f s of rendering): median %.3f ms, p95 %.3f ms, p99 %.3f ms, "
                 "max %.3f ms",
                 static_cast<unsigned long long>(loops), duration_s, median * 1e3,
                 static_cast<double>(json["wall_clock"]["p95_s"]) * 1e3, p99 * 1e3,
                 static_cast<double>(json["wall_clock"]["max_s"]) * 1e3)};
}

Outcome unseen_route(const fs::path& model_dir, const fs::path& data, const fs::path& scratch) {
  const Dataset dataset = load_dataset(data);
  const fs::path weights_path = model_dir / "weights.vtw";
  int identical = 0;
  for (const auto& texture : dataset.textures) {
    const auto& id = texture.texture.id;
    const auto trajectory = std::find_if(dataset.trajectories.begin(), dataset.trajectories.end(),
                                         [&](const auto& t) {
                                           return t.texture_id == id && t.split == "heldout";
                                         });
    const fs::path csv = data / trajectory->trajectory;
    const fs::path by_id = scratch / ("id_" + id);
    const fs::path by_image = scratch / ("image_" + id);
    const int a = run_cli({"synth", "--weights", weights_path.string(), "--texture-id", id,
                           "--trajectory", csv.string(), "--out-dir", by_id.string()});
    const int b = run_cli({"synth", "--weights", weights_path.string(), "--image",
                           (data / texture.images.front()).string(), "--trajectory", csv.string(),
                           "--out-dir", by_image.string()});
    if (a == 0 && b == 0 &&
        read_bytes(by_id / "waveform.wav") == read_bytes(by_image / "waveform.wav") &&
        read_bytes(by_id / "waveform.csv") == read_bytes(by_image / "waveform.csv")) {
      ++identical;
    }
  }

  const WeightSet weights = load_weights(weights_path);
  const TextureLibrary library = load_library(model_dir / "library.txt");
  int matched = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const auto k = static_cast<std::size_t>(trial) % dataset.textures.size();
    HeightMap image = load_pfm(data / dataset.textures[k].images.front());
    double mean = 0.0;
    for (float v : image.values) mean += v;
    mean /= static_cast<double>(image.values.size());
    double var = 0.0;
    for (float v : image.values) var += (v - mean) * (v - mean);
    const double sigma = 0.1 * std::sqrt(var / static_cast<double>(image.values.size()));
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(trial)));
    for (float& v : image.values) v += static_cast<float>(sigma * rng.normal());
    const auto query = encode_texture(toy_image_features(image), weights);
    if (nearest_neighbor(query, library).embedding.id == dataset.textures[k].texture.id) {
      ++matched;
    }
  }
  const int n = static_cast<int>(dataset.textures.size());
  return {identical == n && matched >= 90,
          format("%d/%d textures reproduce bit-exactly via --image; %d/100 noisy height maps "
                 "(noise 0.1 x image std) matched their texture",
                 identical, n, matched)};
}

Outcome determinism_golden(const fs::path& golden, bool update) {
  auto weights = test::small_weights(42);
  const auto texture = test::random_embedding(*weights, 43, "golden");
  const Trajectory trajectory = generate_trajectory(2.0, 1000.0, 44);
  RenderConfig config;
  config.synthesis_rate_hz = 1000.0;
  const auto first = run_trajectory(config, texture, weights, trajectory.samples).waveform;
  const auto second = run_trajectory(config, texture, weights, trajectory.samples).waveform;
  const bool repeat = first == second;

  if (update) {
    std::ofstream out(golden);
    for (double v : first) out << std::hexfloat << v << "\n";
    return {repeat, format("rewrote %zu samples", first.size())};
  }
  std::ifstream in(golden);
  if (!in) return {false, "missing golden file " + golden.string()};
  std::vector<double> stored;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) stored.push_back(std::strtod(line.c_str(), nullptr));
  }
  std::size_t mismatches = stored.size() == first.size() ? 0 : std::max(stored.size(), first.size());
  for (std::size_t i = 0; i < std::min(stored.size(), first.size()); ++i) {
    if (std::memcmp(&stored[i], &first[i], sizeof(double)) != 0) ++mismatches;
  }
  std::size_t nonzero = 0;
  for (double v : first) nonzero += v != 0.0;
  return {repeat && mismatches == 0 && nonzero > 0,
          format("%zu samples (%zu nonzero), %zu differ from the golden, repeat run %s",
                 first.size(), nonzero, mismatches, repeat ? "identical" : "DIFFERS")};
}

}  // namespace vtex::acceptance
