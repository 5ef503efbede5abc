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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "support.hpp"
#include "vtex/error.hpp"
#include "vtex/io.hpp"
#include "vtex/spectral.hpp"

namespace vtex {
namespace {

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void expect_error(const std::function<void()>& fn, ErrorCode code, const std::string& needle) {
  try {
    fn();
    FAIL() << "no error, expected " << needle;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(TrajectoryCsv, RoundTrip) {
  test::TempDir dir("traj");
  Trajectory t;
  t.name = "stroke one";
  t.nominal_loop_rate_hz = 1000.0;
  t.samples = {{0.0, {1.5, -2.25, 0.1}}, {0.001, {1.6, -2.2, -0.3}}, {0.002, {0.1, 1e-7, -3.0}}};
  save_trajectory(t, dir / "t.csv");
  const auto u = load_trajectory(dir / "t.csv");
  EXPECT_EQ(u.name, t.name);
  EXPECT_EQ(u.nominal_loop_rate_hz, 1000.0);
  ASSERT_EQ(u.samples.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(u.samples[i].t_s, t.samples[i].t_s);
    EXPECT_EQ(u.samples[i].position_mm, t.samples[i].position_mm);
  }
}

TEST(TrajectoryCsv, ErrorsNameTheLine) {
  test::TempDir dir("traj-bad");
  spit(dir / "a.csv", "# name: x\nt_s,x_mm,y_mm,z_mm\n0,0,0,0\n0.1,0,zero,0\n");
  expect_error([&] { load_trajectory(dir / "a.csv"); }, ErrorCode::kParse, "a.csv:4");
  spit(dir / "b.csv", "t_s,x_mm,y_mm,z_mm\n0,0,0,0\n0.1,0,0\n");
  expect_error([&] { load_trajectory(dir / "b.csv"); }, ErrorCode::kParse, "b.csv:3");
  spit(dir / "c.csv", "t_s,x,y,z\n");
  expect_error([&] { load_trajectory(dir / "c.csv"); }, ErrorCode::kParse, "c.csv:1");
  spit(dir / "d.csv", "t_s,x_mm,y_mm,z_mm\n0.2,0,0,0\n0.1,0,0,0\n");
  expect_error([&] { load_trajectory(dir / "d.csv"); }, ErrorCode::kValidation, "d.csv:3");
  spit(dir / "e.csv", "t_s,x_mm,y_mm,z_mm\n");
  expect_error([&] { load_trajectory(dir / "e.csv"); }, ErrorCode::kValidation, "no samples");
  expect_error([&] { load_trajectory(dir / "missing.csv"); }, ErrorCode::kIo, "missing.csv");
}

TEST(GeneratedTrajectory, CoversDurationAndIsSeeded) {
  const auto a = generate_trajectory(2.0, 1000.0, 3);
  const auto b = generate_trajectory(2.0, 1000.0, 3);
  const auto c = generate_trajectory(2.0, 1000.0, 4);
  EXPECT_NEAR(a.samples.front().t_s, 0.0, 1e-12);
  EXPECT_NEAR(a.samples.back().t_s, 2.0, 1e-9);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].position_mm, b.samples[i].position_mm);
    if (i < c.samples.size()) differs |= a.samples[i].position_mm != c.samples[i].position_mm;
  }
  EXPECT_TRUE(differs);
}

TEST(Wav, RoundTripRoundsToFloat) {
  test::TempDir dir("wav");
  const std::vector<double> x = {0.0, 0.1, -1.5, 1e-3, 3.0};
  export_wav(x, 2000.0, dir / "x.wav");
  const auto w = read_wav(dir / "x.wav");
  EXPECT_EQ(w.sample_rate_hz, 2000.0);
  ASSERT_EQ(w.samples.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(w.samples[i], static_cast<float>(x[i]));
  EXPECT_EQ(std::filesystem::file_size(dir / "x.wav"), 58u + 4u * x.size());  // float WAVs carry a fact chunk
  EXPECT_THROW(export_wav(x, 1000.5, dir / "y.wav"), Error);
  spit(dir / "bad.wav", "RIFF0000WAVEjunk");
  EXPECT_THROW(read_wav(dir / "bad.wav"), Error);
}

TEST(Csv, WaveformRows) {
  test::TempDir dir("csv");
  export_csv(std::vector<double>{1.0, -0.5}, 4.0, dir / "w.csv");
  std::ifstream in(dir / "w.csv");
  std::string header, r0, r1;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  EXPECT_EQ(header, "t_s,accel_m_s2");
  EXPECT_EQ(r0, "0,1");
  EXPECT_EQ(r1, "0.25,-0.5");
}

TEST(Pfm, RoundTrip) {
  test::TempDir dir("pfm");
  HeightMap m(3, 5);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = 0.25f * static_cast<float>(i) - 1.0f;
  save_pfm(m, dir / "m.pfm");
  const auto n = load_pfm(dir / "m.pfm");
  EXPECT_EQ(n.rows, 3);
  EXPECT_EQ(n.cols, 5);
  EXPECT_EQ(n.values, m.values);
  spit(dir / "bad.pfm", "PF\n5 3\n-1\n");
  EXPECT_THROW(load_pfm(dir / "bad.pfm"), Error);
}

TEST(SyntheticTexture, ResonatorCoefficients) {
  SyntheticTexture t;
  t.id = "r";
  t.resonance_hz = 150.0;
  t.bandwidth_hz = 40.0;
  const double r = std::exp(-std::numbers::pi * 40.0 / 2000.0);
  EXPECT_NEAR(t.a1(2000.0), 2.0 * r * std::cos(2.0 * std::numbers::pi * 150.0 / 2000.0), 1e-15);
  EXPECT_NEAR(t.a2(2000.0), -r * r, 1e-15);
  t.resonance_hz = 1500.0;
  EXPECT_THROW(t.validate(2000.0), Error);
}

TEST(SyntheticTexture, UnitDriveGivesGainSquaredVariance) {
  // Under unit drive the normalized resonator's empirical variance is gain^2.
  SyntheticTexture t;
  t.id = "r";
  t.resonance_hz = 120.0;
  t.bandwidth_hz = 25.0;
  t.gain = 0.2;
  const double fs = 2000.0;
  const std::size_t n = 400000;
  const std::vector<double> force(n, 1.0);
  const std::vector<double> speed(n, 1.0);
  const auto rec = synthesize_ground_truth(t, force, speed, fs, 9);
  double sq = 0.0;
  for (std::size_t i = 1000; i < n; ++i) sq += rec.acceleration[i] * rec.acceleration[i];
  const double var = sq / static_cast<double>(n - 1000);
  EXPECT_NEAR(var, t.gain * t.gain, 0.05 * t.gain * t.gain);

  // Scaling drive by 4 doubles the standard deviation.
  const std::vector<double> force4(n, 4.0);
  const auto rec4 = synthesize_ground_truth(t, force4, speed, fs, 9);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(rec4.acceleration[i], 2.0 * rec.acceleration[i], 1e-12);

  // Zero drive is silence.
  const std::vector<double> zero(1000, 0.0);
  for (double v : synthesize_ground_truth(t, zero, std::span(speed).first(1000), fs, 9).acceleration) EXPECT_EQ(v, 0.0);
}

TEST(TargetFrame, MatchesDirectWindowedDft) {
  Rng rng(5);
  std::vector<float> rec(600);
  for (auto& v : rec) v = static_cast<float>(rng.normal());
  const int n = 200;
  const auto window = make_hann_window(n);
  const auto frame = target_frame(rec, 37, n, window);
  ASSERT_EQ(frame.size(), static_cast<std::size_t>(kModelBins));
  for (int k = 0; k < kModelBins; ++k) {
    std::complex<double> acc;
    for (int i = 0; i < n; ++i) {
      acc += static_cast<double>(rec[37 + i]) * window[i] *
             std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    }
    EXPECT_NEAR(frame[k], std::abs(acc), 1e-4 * (1.0 + std::abs(acc))) << k;
  }
  // Short frames are zero-padded out to the model's bin count.
  const auto short_frame = target_frame(rec, 0, 50, make_hann_window(50));
  for (int k = 26; k < kModelBins; ++k) EXPECT_EQ(short_frame[k], 0.0f);
  EXPECT_THROW(target_frame(rec, 500, n, window), Error);
}

TEST(Dataset, GenerateLoadAndAssemble) {
  test::TempDir dir("dataset");
  DatasetSpec spec;
  spec.textures.resize(2);
  spec.trajectories_per_texture = 2;
  spec.heldout_per_texture = 1;
  spec.duration_s = 1.0;
  spec.images_per_texture = 4;
  spec.image_size = 32;
  const auto made = generate_dataset(spec, dir.path());
  const auto loaded = load_dataset(dir.path());
  ASSERT_EQ(loaded.textures.size(), 2u);
  ASSERT_EQ(loaded.trajectories.size(), 4u);
  EXPECT_EQ(loaded.seed, made.seed);
  EXPECT_EQ(loaded.textures[1].texture.id, made.textures[1].texture.id);
  EXPECT_EQ(loaded.texture_index(made.textures[1].texture.id), 1u);
  EXPECT_THROW(loaded.texture("nope"), Error);

  TrainingDataOptions options;
  options.stride = 5;
  const auto data = build_training_dataset(loaded, options);
  EXPECT_EQ(data.stage1.features.size(), 8u);
  EXPECT_EQ(data.stage1.num_classes, 2);
  EXPECT_EQ(data.stage2.features.size(), 2u);
  EXPECT_EQ(data.canonical_images.size(), 2u);
  EXPECT_GT(data.stage2.train.size(), 0u);
  EXPECT_GT(data.stage2.heldout.size(), 0u);
  // The canonical image's feature is the stage-2 feature.
  EXPECT_EQ(data.stage2.features[0], toy_image_features(data.canonical_images[0]));
}

TEST(Dataset, ManifestErrors) {
  test::TempDir dir("dataset-bad");
  expect_error([&] { load_dataset(dir.path()); }, ErrorCode::kNotFound, "manifest");
  spit(dir / "manifest.json", "{\"format\": \"other\"}");
  expect_error([&] { load_dataset(dir.path()); }, ErrorCode::kValidation, "not a vtex dataset");
  spit(dir / "manifest.json", "{not json");
  expect_error([&] { load_dataset(dir.path()); }, ErrorCode::kParse, "manifest.json");
}

}  // namespace
}  // namespace vtex
