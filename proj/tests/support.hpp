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

#include <cmath>
#include <filesystem>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "vtex/engine.hpp"
#include "vtex/io.hpp"
#include "vtex/model.hpp"
#include "vtex/random.hpp"

namespace vtex::test {

// Render-compatible (10-step window, 100 bins) but small enough to build in
// microseconds.
inline Architecture small_arch(int feature_dim = 24, int bins = kModelBins) {
  Architecture a;
  a.window = kActionSteps;
  a.force = {{kActionSteps, 6, 4}};
  a.speed = {{2 * kActionSteps, 6, 4}};
  a.action = {{8, 12, 6}};
  a.texture = {{feature_dim, 16, 8}};
  a.classifier = {{feature_dim, 16, 5}};
  a.predictor = {{14, 16, bins}};
  return a;
}

// Random weights whose output layer bias is lifted so clamped predictions are
// mostly positive, giving audible output.
inline std::shared_ptr<const WeightSet> small_weights(std::uint64_t seed, int bins = kModelBins) {
  WeightSet w = WeightSet::random(small_arch(24, bins), seed);
  w.predictor.layers().back().bias.setConstant(1.0f);
  return std::make_shared<const WeightSet>(std::move(w));
}

inline TextureEmbedding random_embedding(const WeightSet& weights, std::uint64_t seed,
                                         std::string id = "t") {
  Rng rng(seed);
  TextureEmbedding e;
  e.id = std::move(id);
  e.name = e.id;
  for (int i = 0; i < weights.arch.embedding_dim(); ++i) {
    e.vector.push_back(static_cast<float>(rng.normal()));
  }
  return e;
}

// A probe pressed 2 mm into the floor moving on a circle at `speed_mm_s`.
inline std::vector<ProbeSample> circle_trajectory(double duration_s, double rate_hz,
                                                  double speed_mm_s, double depth_mm = 2.0) {
  const double radius = 15.0;
  const double omega = speed_mm_s / radius;
  std::vector<ProbeSample> out;
  const auto n = static_cast<int>(std::lround(duration_s * rate_hz));
  for (int i = 0; i <= n; ++i) {
    const double t = i / rate_hz;
    out.push_back({t, {radius * std::cos(omega * t), radius * std::sin(omega * t), -depth_mm}});
  }
  return out;
}

inline double normalized_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^
            static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)));
    path_ = std::filesystem::temp_directory_path() /
            ("vtex-" + tag + "-" + std::to_string(rng.next_u64() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace vtex::test
