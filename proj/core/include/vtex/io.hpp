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

// File formats, the synthetic texture oracle, and dataset assembly.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vtex/engine.hpp"
#include "vtex/features.hpp"
#include "vtex/training.hpp"

namespace vtex {

// ---------------------------------------------------------------------------
// Trajectories: CSV with header t_s,x_mm,y_mm,z_mm. Lines starting with '#'
// before the header carry metadata ("# name: ...", "# loop_rate_hz: ...").

struct Trajectory {
  std::string name;
  double nominal_loop_rate_hz = 500.0;
  std::vector<ProbeSample> samples;
};

Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

// Smooth random strokes with pauses and lifts, sampled at `sample_rate_hz`,
// covering [0, duration_s].
Trajectory generate_trajectory(double duration_s, double sample_rate_hz, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic textures
//
// Acceleration is an AR(2) resonator driven by white noise whose standard
// deviation is gain * sqrt(F * |v|) after normalizing the resonator to unit
// stationary variance. The resonator is stored by its centre frequency and
// -3 dB bandwidth; the coefficients follow from the sample rate:
//   r = exp(-pi bw / fs), a1 = 2 r cos(2 pi f0 / fs), a2 = -r^2.

struct SyntheticTexture {
  std::string id;
  std::string name;
  double resonance_hz = 100.0;
  double bandwidth_hz = 30.0;
  double gain = 0.05;  // m/s^2 per sqrt(N * mm/s)
  // Height map: a sinusoidal grating plus smoothed noise.
  double spatial_frequency = 0.1;  // cycles per pixel
  double orientation_rad = 0.0;
  double roughness = 0.2;

  double a1(double sample_rate_hz) const;
  double a2(double sample_rate_hz) const;
  void validate(double sample_rate_hz) const;
  // Different seeds give different grating phases and noise.
  HeightMap height_map(int rows, int cols, std::uint64_t seed) const;
};

std::vector<SyntheticTexture> default_textures();

struct Recording {
  double sample_rate_hz = 0.0;
  std::vector<double> acceleration;  // m/s^2
  std::vector<double> normal_force_n;
  std::vector<double> speed_mm_s;
};

// Traces are sampled at `sample_rate_hz` and must have equal length.
Recording synthesize_ground_truth(const SyntheticTexture& texture,
                                  std::span<const double> normal_force_n,
                                  std::span<const double> speed_mm_s, double sample_rate_hz,
                                  std::uint64_t seed);

// Resamples the trajectory to the loop rate, derives force and filtered speed
// as the renderer does, holds them over each loop at the recording rate and
// synthesizes the acceleration. Recording sample n sits at t0 + n / fs.
Recording record_trajectory(const SyntheticTexture& texture, const Trajectory& trajectory,
                            const RenderConfig& config, double recording_rate_hz,
                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Waveforms and images

// Mono 32-bit IEEE float WAV. Samples are rounded to float.
void export_wav(std::span<const double> waveform, double sample_rate_hz,
                const std::filesystem::path& path);
struct WavData {
  double sample_rate_hz = 0.0;
  std::vector<float> samples;
};
WavData read_wav(const std::filesystem::path& path);

// "t_s,accel_m_s2" rows.
void export_csv(std::span<const double> waveform, double sample_rate_hz,
                const std::filesystem::path& path);

// Grayscale portable float map ("Pf"), little-endian, bottom row first.
void save_pfm(const HeightMap& image, const std::filesystem::path& path);
HeightMap load_pfm(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Datasets
//
// A dataset directory holds manifest.json plus the files it names:
//
//   {
//     "format": "vtex-dataset", "version": 1, "seed": 7,
//     "recording_rate_hz": 2000, "loop_rate_hz": 500,
//     "textures": [{"id": ..., "name": ..., "resonance_hz": ..., "bandwidth_hz": ...,
//                   "gain": ..., "spatial_frequency": ..., "orientation_rad": ...,
//                   "roughness": ..., "images": ["images/<id>_0.pfm", ...]}],
//     "trajectories": [{"texture": ..., "split": "train" | "heldout",
//                       "seed": ..., "trajectory": "trajectories/<...>.csv",
//                       "recording": "recordings/<...>.wav"}]
//   }
//
// The first image of a texture is its canonical image: its feature is the one
// paired with the texture's recordings and stored in the texture library.

struct DatasetTexture {
  SyntheticTexture texture;
  std::vector<std::string> images;
};

struct DatasetTrajectory {
  std::string texture_id;
  std::string split;
  std::uint64_t seed = 0;
  std::string trajectory;
  std::string recording;
};

struct Dataset {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  double recording_rate_hz = 2000.0;
  double loop_rate_hz = 500.0;
  std::vector<DatasetTexture> textures;
  std::vector<DatasetTrajectory> trajectories;

  const DatasetTexture& texture(std::string_view id) const;
  std::size_t texture_index(std::string_view id) const;
};

struct DatasetSpec {
  std::vector<SyntheticTexture> textures = default_textures();
  int trajectories_per_texture = 5;
  int heldout_per_texture = 1;
  double duration_s = 3.0;
  double trajectory_rate_hz = 1000.0;
  int images_per_texture = 8;
  int image_size = 64;
  double recording_rate_hz = 2000.0;
  double loop_rate_hz = 500.0;
  std::uint64_t seed = 7;
};

// Writes a complete dataset under `root` (created if needed) and returns it.
Dataset generate_dataset(const DatasetSpec& spec, const std::filesystem::path& root);

void save_manifest(const Dataset& dataset);
// Parses and validates manifest.json; referenced files must exist.
Dataset load_dataset(const std::filesystem::path& root);

struct TrainingDataOptions {
  int stride = 4;  // keep every stride-th loop as a stage-2 example
  RenderConfig render;
};

struct TrainingData {
  Stage1Dataset stage1;
  Stage2Dataset stage2;
  std::vector<HeightMap> canonical_images;  // per texture
};

// Stage 1: every image's feature labelled with its texture index. Stage 2: at
// each kept loop i, the action window ending at loop i (zeros before the
// start) and the first 100 bins of |DFT(hann * recording[i * h, i * h + N))|,
// with h = recording_rate / loop_rate and N = 0.1 * recording_rate.
TrainingData build_training_dataset(const Dataset& dataset,
                                    const TrainingDataOptions& options = {});

// Target frame helper shared with tests: the magnitudes of the frame starting
// at `start`, truncated or zero-padded to kModelBins.
std::vector<float> target_frame(std::span<const float> recording, std::size_t start,
                                int frame_len, std::span<const double> window);

}  // namespace vtex
