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

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "vtex/engine.hpp"
#include "vtex/error.hpp"
#include "vtex/features.hpp"
#include "vtex/io.hpp"
#include "vtex/model_io.hpp"
#include "vtex/phase.hpp"
#include "vtex/random.hpp"
#include "vtex/service.hpp"
#include "vtex/training.hpp"

namespace vtex::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Files are written into a hidden sibling directory and renamed into place
// together once everything has been produced.
class Staging {
 public:
  explicit Staging(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    tmp_ = dir_ / (".vtex-staging-" + std::to_string(::getpid()));
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~Staging() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;

  fs::path path(const std::string& name) {
    names_.push_back(name);
    return tmp_ / name;
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary);
    out << text;
    out.close();
    if (!out) fail(ErrorCode::kIo, "cannot write " + (tmp_ / name).string());
  }
  void commit() {
    for (const auto& name : names_) fs::rename(tmp_ / name, dir_ / name);
    fs::remove_all(tmp_);
    committed_ = true;
  }

 private:
  fs::path dir_;
  fs::path tmp_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

void write_report(const std::optional<std::string>& path, const json& report) {
  if (!path) return;
  const fs::path target(*path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << report.dump(2) << "\n";
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

json timing_json(const TimingSummary& timing) {
  return {{"loops", timing.loops},         {"median_s", timing.median_s},
          {"p95_s", timing.p95_s},         {"p99_s", timing.p99_s},
          {"max_s", timing.max_s},         {"mean_s", timing.mean_s}};
}

struct RenderFlags {
  std::optional<double> fs;
  std::optional<double> loop_rate;
  std::optional<double> stiffness;
  std::optional<double> threshold;
  std::optional<double> force_clamp;
  std::optional<double> lpf_cutoff;

  void add(CLI::App& app) {
    app.add_option("--fs", fs, "Synthesis sample rate in Hz (default 500)");
    app.add_option("--loop-rate", loop_rate, "Rendering loop rate in Hz (default 500)");
    app.add_option("--stiffness", stiffness, "Floor stiffness in N/mm (default 0.5)");
    app.add_option("--threshold", threshold, "Speed gate in mm/s (default 5)");
    app.add_option("--force-clamp", force_clamp, "Device force limit in N (default 3.3)");
    app.add_option("--lpf-cutoff", lpf_cutoff, "Velocity filter cutoff in Hz (default 20)");
  }
  RenderConfig config() const {
    RenderConfig c;
    if (fs) c.synthesis_rate_hz = *fs;
    if (loop_rate) c.loop_rate_hz = *loop_rate;
    if (stiffness) c.stiffness_n_per_mm = *stiffness;
    if (threshold) c.speed_threshold_mm_s = *threshold;
    if (force_clamp) c.force_clamp_n = *force_clamp;
    if (lpf_cutoff) c.velocity_lpf_cutoff_hz = *lpf_cutoff;
    c.validate();
    return c;
  }
};

fs::path library_path(const std::optional<std::string>& library, const std::string& weights) {
  if (library) return *library;
  return fs::path(weights).parent_path() / "library.txt";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string weights;
  std::optional<std::string> library;
  std::optional<std::string> texture_id;
  std::optional<std::string> image;
  std::string trajectory;
  std::string out_dir;
  std::optional<std::string> compensator;
  RenderFlags render;
};

int cmd_synth(const SynthArgs& args, std::ostream& out) {
  const RenderConfig config = args.render.config();
  const auto compensator = args.compensator ? ActuatorCompensator::parse(*args.compensator)
                                            : ActuatorCompensator::identity();
  const Trajectory trajectory = load_trajectory(args.trajectory);
  auto weights = std::make_shared<const WeightSet>(load_weights(args.weights));
  const TextureLibrary library = load_library(library_path(args.library, args.weights));

  json report;
  TextureEmbedding texture;
  if (args.texture_id) {
    const TextureEmbedding* entry = library.find(*args.texture_id);
    if (entry == nullptr) fail(ErrorCode::kNotFound, "texture not found: " + *args.texture_id);
    texture = *entry;
  } else {
    const HeightMap image = load_pfm(*args.image);
    const TextureEmbedding query = encode_texture(toy_image_features(image), *weights);
    const NeighborMatch match = nearest_neighbor(query, library);
    texture = match.embedding;
    report["match"] = {{"image", *args.image},
                       {"texture_id", match.embedding.id},
                       {"distance", match.distance}};
  }

  const TrajectoryResult result =
      run_trajectory(config, texture, weights, trajectory.samples, compensator);

  report["texture_id"] = texture.id;
  report["trajectory"] = args.trajectory;
  report["sample_rate_hz"] = config.synthesis_rate_hz;
  report["loop_rate_hz"] = config.loop_rate_hz;
  report["loops"] = result.loop_durations_s.size();
  report["samples"] = result.waveform.size();
  report["wall_clock"] = timing_json(result.timing);

  Staging staging(args.out_dir);
  export_wav(result.waveform, config.synthesis_rate_hz, staging.path("waveform.wav"));
  export_csv(result.waveform, config.synthesis_rate_hz, staging.path("waveform.csv"));
  staging.write_text("timing.json", report.dump(2) + "\n");
  staging.commit();

  out << "wrote " << result.waveform.size() << " samples for texture " << texture.id << " to "
      << args.out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string stages = "1,2";
  std::uint64_t seed = 1;
  int epochs1 = Stage1Config{}.epochs;
  int epochs2 = Stage2Config{}.epochs;
  int stride = TrainingDataOptions{}.stride;
  std::optional<std::string> init;
};

constexpr std::string_view kStage1Tag = "stage1";

int cmd_train(const TrainArgs& args, std::ostream& out) {
  bool stage1 = false;
  bool stage2 = false;
  std::stringstream list(args.stages);
  for (std::string item; std::getline(list, item, ',');) {
    if (item == "1") {
      stage1 = true;
    } else if (item == "2") {
      stage2 = true;
    } else {
      fail(ErrorCode::kInvalidArgument, "--stages takes 1, 2 or 1,2; got '" + args.stages + "'");
    }
  }
  require(stage1 || stage2, "--stages selects nothing");
  require(args.epochs1 >= 1 && args.epochs2 >= 1 && args.stride >= 1,
          "epochs and stride must be positive");
  if (stage2 && !stage1) {
    if (!args.init) {
      fail(ErrorCode::kInvalidArgument,
           "stage 2 alone needs --init weights whose texture encoder was trained by stage 1");
    }
  }

  const auto start = Clock::now();
  const Dataset dataset = load_dataset(args.data);
  TrainingDataOptions options;
  options.stride = args.stride;
  options.render.loop_rate_hz = dataset.loop_rate_hz;
  const TrainingData data = build_training_dataset(dataset, options);

  WeightSet weights = args.init ? load_weights(*args.init)
                                : WeightSet::random(Architecture::published(), derive_seed(args.seed, 1));
  if (stage2 && !stage1 && weights.config_hash.find(kStage1Tag) == std::string::npos) {
    fail(ErrorCode::kValidation, "weights in " + *args.init +
                                     " were not produced by stage 1; train stage 1 first");
  }

  json metrics;
  metrics["seed"] = args.seed;
  metrics["stages"] = json::array();
  if (stage1) metrics["stages"].push_back(1);
  if (stage2) metrics["stages"].push_back(2);
  json wall;

  std::string provenance = "seed=" + std::to_string(args.seed);
  if (stage1) {
    const auto t = Clock::now();
    Stage1Config config;
    config.epochs = args.epochs1;
    config.seed = derive_seed(args.seed, 101);
    const Stage1Result result = train_stage1(weights, data.stage1, config);
    tie_texture_encoder(weights, derive_seed(args.seed, 211));
    metrics["stage1"] = {{"initial_loss", result.initial_loss},
                         {"epoch_loss", result.epoch_loss},
                         {"train_accuracy", result.train_accuracy}};
    wall["stage1_s"] = seconds_since(t);
    out << "stage 1: loss " << result.initial_loss << " -> " << result.epoch_loss.back()
        << ", training accuracy " << result.train_accuracy << "\n";
    provenance += ";stage1 epochs=" + std::to_string(args.epochs1);
  } else {
    provenance = weights.config_hash + ";" + provenance;
  }
  if (stage2) {
    const auto t = Clock::now();
    Stage2Config config;
    config.epochs = args.epochs2;
    config.seed = derive_seed(args.seed, 303);
    const Stage2Result result = train_stage2(weights, data.stage2, config);
    metrics["stage2"] = {{"initial_loss", result.initial_loss},
                         {"epoch_loss", result.epoch_loss},
                         {"heldout_loss", result.heldout_loss},
                         {"baseline_heldout_loss", result.baseline_heldout_loss},
                         {"heldout_ratio", result.heldout_loss / result.baseline_heldout_loss}};
    wall["stage2_s"] = seconds_since(t);
    out << "stage 2: loss " << result.initial_loss << " -> " << result.epoch_loss.back()
        << ", held-out " << result.heldout_loss << " vs baseline "
        << result.baseline_heldout_loss << "\n";
    provenance += ";stage2 epochs=" + std::to_string(args.epochs2) +
                  " stride=" + std::to_string(args.stride);
  }
  weights.config_hash = provenance;

  TextureLibrary library;
  library.entries = embed_textures(weights, data.stage2);
  library.features = data.stage2.features;
  for (std::size_t i = 0; i < library.entries.size(); ++i) {
    library.entries[i].name = dataset.textures[i].texture.name;
  }

  wall["total_s"] = seconds_since(start);
  metrics["wall_clock"] = wall;

  Staging staging(args.out);
  save_weights(weights, staging.path("weights.vtw"));
  save_library(library, staging.path("library.txt"));
  staging.write_text("metrics.json", metrics.dump(2) + "\n");
  staging.commit();
  out << "wrote weights.vtw, library.txt and metrics.json to " << args.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string weights;
  std::string data;
  int stride = TrainingDataOptions{}.stride;
  std::optional<std::string> out;
};

// SPSI reconstruction of the model's magnitude stream along a trajectory,
// scored against its own spectra.
double trajectory_consistency(const WeightSet& weights, std::shared_ptr<const WeightSet> shared,
                              const std::vector<float>& embedding, const Trajectory& trajectory,
                              const RenderConfig& config) {
  const auto loops = resample_trajectory(trajectory.samples, config.loop_rate_hz);
  const ActionTrace trace = compute_action_trace(loops, config);
  const FrameGeometry geometry = config.geometry();
  Predictor predictor(std::move(shared), embedding);
  ActionWindow window;
  std::vector<double> bins(static_cast<std::size_t>(weights.arch.bins()));
  MagnitudeFrames frames;
  frames.reserve(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    window.push(trace.normal_force_n[i], trace.velocity_mm_s[i][0], trace.velocity_mm_s[i][1]);
    predictor.predict(window, bins);
    std::vector<double> frame(static_cast<std::size_t>(geometry.num_bins()), 0.0);
    std::copy_n(bins.begin(), std::min(bins.size(), frame.size()), frame.begin());
    frames.push_back(std::move(frame));
  }
  const auto signal = synthesize_stream(frames, geometry);
  // Only frames lying entirely inside the emitted signal can be scored.
  const std::size_t covered =
      (signal.size() - static_cast<std::size_t>(geometry.frame_len)) / geometry.hop + 1;
  frames.resize(std::min(frames.size(), covered));
  return spectral_consistency_error(frames, signal, geometry);
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  require(args.stride >= 1, "stride must be positive");
  auto weights = std::make_shared<const WeightSet>(load_weights(args.weights));
  const Dataset dataset = load_dataset(args.data);
  const bool has_heldout = std::any_of(dataset.trajectories.begin(), dataset.trajectories.end(),
                                       [](const auto& t) { return t.split == "heldout"; });
  if (!has_heldout) fail(ErrorCode::kValidation, "dataset has an empty held-out split");

  TrainingDataOptions options;
  options.stride = args.stride;
  options.render.loop_rate_hz = dataset.loop_rate_hz;
  const TrainingData data = build_training_dataset(dataset, options);
  const auto mean = mean_target(data.stage2.train);
  const Stage2Evaluation evaluation =
      evaluate_stage2(*weights, data.stage2, data.stage2.heldout, mean);
  const auto embeddings = embed_textures(*weights, data.stage2);

  json textures = json::array();
  for (std::size_t k = 0; k < data.stage2.texture_ids.size(); ++k) {
    textures.push_back({{"texture_id", data.stage2.texture_ids[k]},
                        {"frames", evaluation.per_texture_count[k]},
                        {"model_l2", evaluation.per_texture_model[k]},
                        {"baseline_l2", evaluation.per_texture_baseline[k]}});
  }

  RenderConfig render;
  render.loop_rate_hz = dataset.loop_rate_hz;
  json consistency = json::array();
  double consistency_sum = 0.0;
  for (const auto& entry : dataset.trajectories) {
    if (entry.split != "heldout") continue;
    const Trajectory trajectory = load_trajectory(dataset.root / entry.trajectory);
    const std::size_t k = dataset.texture_index(entry.texture_id);
    const double error =
        trajectory_consistency(*weights, weights, embeddings[k].vector, trajectory, render);
    consistency_sum += error;
    consistency.push_back({{"texture_id", entry.texture_id},
                           {"trajectory", entry.trajectory},
                           {"consistency_error", error}});
  }

  json report;
  report["format"] = "vtex-eval";
  report["version"] = 1;
  report["frames"] = data.stage2.heldout.size();
  report["model_l2"] = evaluation.model_loss;
  report["baseline_l2"] = evaluation.baseline_loss;
  report["ratio"] = evaluation.model_loss / evaluation.baseline_loss;
  report["mean_consistency_error"] = consistency_sum / static_cast<double>(consistency.size());
  report["textures"] = textures;
  report["trajectories"] = consistency;
  write_report(args.out, report);
  out << report.dump(2) << "\n";
  return evaluation.model_loss < evaluation.baseline_loss ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::optional<std::string> weights;
  std::optional<std::uint64_t> random_weights;
  std::optional<std::string> library;
  std::optional<std::string> texture_id;
  double duration_s = 30.0;
  double budget_ms = 2.0;
  std::optional<std::string> out;
  RenderFlags render;
};

// A steady circular stroke pressed 2 mm into the floor, fast enough to stay
// above the speed gate throughout.
ProbeSample bench_probe(double t) {
  constexpr double kRadiusMm = 20.0;
  constexpr double kHz = 0.5;
  const double phase = 2.0 * std::numbers::pi * kHz * t;
  return {t, {kRadiusMm * std::cos(phase), kRadiusMm * std::sin(phase), -2.0}};
}

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  const RenderConfig config = args.render.config();
  require(args.duration_s > 0.0, "--duration-s must be positive");
  require(args.weights.has_value() != args.random_weights.has_value(),
          "give exactly one of --weights and --random-weights");
  auto weights = std::make_shared<const WeightSet>(
      args.weights ? load_weights(*args.weights)
                   : WeightSet::random(Architecture::published(), *args.random_weights));

  TextureEmbedding texture;
  if (args.weights && (args.library || fs::exists(library_path(args.library, *args.weights)))) {
    const TextureLibrary library = load_library(library_path(args.library, *args.weights));
    const TextureEmbedding* entry =
        args.texture_id ? library.find(*args.texture_id) : &library.entries.front();
    if (entry == nullptr) fail(ErrorCode::kNotFound, "texture not found: " + *args.texture_id);
    texture = *entry;
  } else {
    require(!args.texture_id, "--texture-id needs a texture library");
    texture.id = "zero";
    texture.vector.assign(static_cast<std::size_t>(weights->arch.embedding_dim()), 0.0f);
  }

  RenderSession session(config, weights, texture);
  const auto loops =
      static_cast<std::uint64_t>(std::floor(args.duration_s * config.loop_rate_hz + 1e-9));
  std::vector<double> buffer(static_cast<std::size_t>(session.samples_per_loop()));
  std::vector<double> durations;
  durations.reserve(loops);
  std::uint64_t gated = 0;
  const auto start = Clock::now();
  for (std::uint64_t i = 0; i < loops; ++i) {
    const auto info =
        session.render_step(bench_probe(static_cast<double>(i) / config.loop_rate_hz), buffer);
    durations.push_back(info.duration_s);
    gated += info.gated ? 1 : 0;
  }
  const double wall = seconds_since(start);
  const TimingSummary timing = summarize_timing(durations);
  const bool pass = timing.median_s * 1e3 <= args.budget_ms;

  json report;
  report["format"] = "vtex-bench";
  report["texture_id"] = texture.id;
  report["loop_rate_hz"] = config.loop_rate_hz;
  report["sample_rate_hz"] = config.synthesis_rate_hz;
  report["loops"] = loops;
  report["samples"] = loops * static_cast<std::uint64_t>(session.samples_per_loop());
  report["gated_loops"] = gated;
  report["budget_ms"] = args.budget_ms;
  report["pass"] = pass;
  report["wall_clock"] = timing_json(timing);
  report["wall_clock"]["elapsed_s"] = wall;
  write_report(args.out, report);

  out << "loops " << loops << "  median " << timing.median_s * 1e3 << " ms  p95 "
      << timing.p95_s * 1e3 << " ms  p99 " << timing.p99_s * 1e3 << " ms  max "
      << timing.max_s * 1e3 << " ms  (" << (pass ? "within" : "over") << " the "
      << args.budget_ms << " ms budget)\n";
  return pass ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string weights;
  std::optional<std::string> library;
  std::string bind = "127.0.0.1:8080";
  int threads = 1;
};

int cmd_serve(const ServeArgs& args, std::ostream& out) {
  ServiceConfig config;
  parse_bind_address(args.bind, config);
  require(args.threads >= 1, "--threads must be at least 1");
  config.threads = args.threads;
  config.stop_on_signals = true;
  auto weights = std::make_shared<const WeightSet>(load_weights(args.weights));
  auto library = std::make_shared<const TextureLibrary>(
      load_library(library_path(args.library, args.weights)));
  Server server(config, weights, library);
  out << "listening on " << config.host << ":" << server.port() << " with "
      << library->entries.size() << " textures" << std::endl;
  server.run();
  out << "stopped" << std::endl;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DatasetArgs {
  std::string out;
  std::uint64_t seed = DatasetSpec{}.seed;
  int trajectories = DatasetSpec{}.trajectories_per_texture;
  int heldout = DatasetSpec{}.heldout_per_texture;
  double duration_s = DatasetSpec{}.duration_s;
  int images = DatasetSpec{}.images_per_texture;
  int image_size = DatasetSpec{}.image_size;
};

int cmd_make_dataset(const DatasetArgs& args, std::ostream& out) {
  DatasetSpec spec;
  spec.seed = args.seed;
  spec.trajectories_per_texture = args.trajectories;
  spec.heldout_per_texture = args.heldout;
  spec.duration_s = args.duration_s;
  spec.images_per_texture = args.images;
  spec.image_size = args.image_size;

  const fs::path root(args.out);
  if (fs::exists(root) && !fs::is_empty(root)) {
    fail(ErrorCode::kValidation, root.string() + " exists and is not empty");
  }
  const fs::path tmp = root.string() + ".partial";
  fs::remove_all(tmp);
  try {
    generate_dataset(spec, tmp);
    if (fs::exists(root)) fs::remove(root);
    fs::rename(tmp, root);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
  const Dataset dataset = load_dataset(root);
  out << "wrote " << dataset.textures.size() << " textures and " << dataset.trajectories.size()
      << " trajectories to " << root.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vtex: data-driven vibrotactile texture synthesis", "vtex"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a trajectory to a waveform");
  synth_cmd->add_option("--weights", synth.weights, "Weight file")->required();
  synth_cmd->add_option("--library", synth.library,
                        "Texture library (default: library.txt beside the weights)");
  auto* id_opt = synth_cmd->add_option("--texture-id", synth.texture_id, "Library texture id");
  auto* image_opt =
      synth_cmd->add_option("--image", synth.image, "Height map (PFM) matched to the library");
  id_opt->excludes(image_opt);
  synth_cmd->add_option("--trajectory", synth.trajectory, "Trajectory CSV")->required();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--compensator", synth.compensator,
                        "Actuator compensation filter \"b0,b1,...;a0,a1,...\"");
  synth.render.add(*synth_cmd);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train both stages on a dataset");
  train_cmd->add_option("--data", train.data, "Dataset directory")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--stages", train.stages, "Stages to run: 1, 2 or 1,2")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Seed")->capture_default_str();
  train_cmd->add_option("--epochs1", train.epochs1, "Stage 1 epochs")->capture_default_str();
  train_cmd->add_option("--epochs2", train.epochs2, "Stage 2 epochs")->capture_default_str();
  train_cmd->add_option("--stride", train.stride, "Keep every n-th loop for stage 2")
      ->capture_default_str();
  train_cmd->add_option("--init", train.init, "Start from these weights");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Held-out metrics");
  eval_cmd->add_option("--weights", eval.weights, "Weight file")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();
  eval_cmd->add_option("--stride", eval.stride, "Keep every n-th loop")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Also write the report here");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Render-loop latency");
  auto* weights_opt = bench_cmd->add_option("--weights", bench.weights, "Weight file");
  auto* random_opt = bench_cmd->add_option("--random-weights", bench.random_weights,
                                           "Use seeded random full-size weights instead");
  weights_opt->excludes(random_opt);
  bench_cmd->add_option("--library", bench.library, "Texture library");
  bench_cmd->add_option("--texture-id", bench.texture_id, "Texture to render");
  bench_cmd->add_option("--duration-s", bench.duration_s, "Simulated seconds")
      ->capture_default_str();
  bench_cmd->add_option("--budget-ms", bench.budget_ms, "Median loop budget")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Write the JSON report here");
  bench.render.add(*bench_cmd);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Websocket streaming service");
  serve_cmd->add_option("--weights", serve.weights, "Weight file")->required();
  serve_cmd->add_option("--library", serve.library,
                        "Texture library (default: library.txt beside the weights)");
  serve_cmd->add_option("--bind", serve.bind, "host:port")->capture_default_str();
  serve_cmd->add_option("--threads", serve.threads, "I/O threads")->capture_default_str();

  DatasetArgs dataset;
  auto* dataset_cmd = app.add_subcommand("make-dataset", "Write a synthetic dataset");
  dataset_cmd->add_option("--out", dataset.out, "Output directory")->required();
  dataset_cmd->add_option("--seed", dataset.seed, "Seed")->capture_default_str();
  dataset_cmd->add_option("--trajectories", dataset.trajectories, "Trajectories per texture")
      ->capture_default_str();
  dataset_cmd->add_option("--heldout", dataset.heldout, "Held-out trajectories per texture")
      ->capture_default_str();
  dataset_cmd->add_option("--duration-s", dataset.duration_s, "Trajectory length")
      ->capture_default_str();
  dataset_cmd->add_option("--images", dataset.images, "Images per texture")
      ->capture_default_str();
  dataset_cmd->add_option("--image-size", dataset.image_size, "Image side in pixels")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      if (!synth.texture_id && !synth.image) {
        err << "synth: one of --texture-id and --image is required\n";
        return kExitUsage;
      }
      return cmd_synth(synth, out);
    }
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
    if (serve_cmd->parsed()) return cmd_serve(serve, out);
    if (dataset_cmd->parsed()) return cmd_make_dataset(dataset, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace vtex::cli
