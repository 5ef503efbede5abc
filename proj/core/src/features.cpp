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

#include "vtex/features.hpp"

#include <cmath>
#include <numbers>

#include "vtex/error.hpp"
#include "vtex/model.hpp"

namespace vtex {
namespace {

constexpr double kWavelengths[] = {4.0, 8.0};

struct Plane {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

Plane demeaned(const HeightMap& image) {
  Plane p{image.rows, image.cols, std::vector<double>(image.values.begin(), image.values.end())};
  double mean = 0.0;
  for (double x : p.v) mean += x;
  mean /= static_cast<double>(p.v.size());
  for (double& x : p.v) x -= mean;
  return p;
}

Plane downsample(const Plane& in) {
  Plane out{in.rows / 2, in.cols / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.rows) * out.cols);
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) {
      out.v[static_cast<std::size_t>(r) * out.cols + c] =
          0.25 * (in.at(2 * r, 2 * c) + in.at(2 * r + 1, 2 * c) + in.at(2 * r, 2 * c + 1) +
                  in.at(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

// Writes 4096 pooled values plus 32 global statistics (mean, RMS per channel).
void scale_features(const Plane& p, const std::vector<std::vector<double>>& bank,
                    float* pooled, float* stats) {
  const int k = kGaborKernelSize;
  const int half = k / 2;
  const int cells = kFeaturePoolSize;
  std::vector<double> response(p.v.size());
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const auto& kernel = bank[f];
    for (int r = 0; r < p.rows; ++r) {
      for (int c = 0; c < p.cols; ++c) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) {
          const int rr = (r + i - half + p.rows) % p.rows;
          for (int j = 0; j < k; ++j) {
            const int cc = (c + j - half + p.cols) % p.cols;
            acc += kernel[static_cast<std::size_t>(i) * k + j] * p.at(rr, cc);
          }
        }
        response[static_cast<std::size_t>(r) * p.cols + c] = acc;
      }
    }
    for (int sign = 0; sign < 2; ++sign) {
      const int channel = static_cast<int>(f) * 2 + sign;
      auto rect = [&](double x) { return sign == 0 ? std::max(x, 0.0) : std::max(-x, 0.0); };
      double sum = 0.0;
      double sum_sq = 0.0;
      for (double x : response) {
        const double y = rect(x);
        sum += y;
        sum_sq += y * y;
      }
      const double n = static_cast<double>(response.size());
      stats[2 * channel] = static_cast<float>(sum / n);
      stats[2 * channel + 1] = static_cast<float>(std::sqrt(sum_sq / n));
      for (int ci = 0; ci < cells; ++ci) {
        const int r0 = ci * p.rows / cells;
        const int r1 = ((ci + 1) * p.rows + cells - 1) / cells;
        for (int cj = 0; cj < cells; ++cj) {
          const int c0 = cj * p.cols / cells;
          const int c1 = ((cj + 1) * p.cols + cells - 1) / cells;
          double acc = 0.0;
          for (int r = r0; r < r1; ++r) {
            for (int c = c0; c < c1; ++c) acc += rect(response[static_cast<std::size_t>(r) * p.cols + c]);
          }
          pooled[(channel * cells + ci) * cells + cj] =
              static_cast<float>(acc / static_cast<double>((r1 - r0) * (c1 - c0)));
        }
      }
    }
  }
}

}  // namespace

HeightMap::HeightMap(int rows_, int cols_) : rows(rows_), cols(cols_) {
  require(rows_ > 0 && cols_ > 0, "height map dimensions must be positive");
  values.assign(static_cast<std::size_t>(rows_) * cols_, 0.0f);
}

std::vector<std::vector<double>> gabor_bank() {
  const int k = kGaborKernelSize;
  const int half = k / 2;
  std::vector<std::vector<double>> bank;
  for (double lambda : kWavelengths) {
    const double sigma = 0.5 * lambda;
    for (int o = 0; o < kGaborOrientations; ++o) {
      const double theta = std::numbers::pi * o / kGaborOrientations;
      std::vector<double> kernel(static_cast<std::size_t>(k) * k);
      double mean = 0.0;
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          const double y = i - half;
          const double x = j - half;
          const double along = x * std::cos(theta) + y * std::sin(theta);
          const double value = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma)) *
                               std::cos(2.0 * std::numbers::pi * along / lambda);
          kernel[static_cast<std::size_t>(i) * k + j] = value;
          mean += value;
        }
      }
      mean /= static_cast<double>(kernel.size());
      double l1 = 0.0;
      for (double& v : kernel) {
        v -= mean;
        l1 += std::abs(v);
      }
      for (double& v : kernel) v /= l1;
      bank.push_back(std::move(kernel));
    }
  }
  return bank;
}

std::vector<float> toy_image_features(const HeightMap& image) {
  require(image.rows >= 32 && image.cols >= 32,
          "height map must be at least 32x32, got " + std::to_string(image.rows) + "x" +
              std::to_string(image.cols));
  require(image.values.size() == static_cast<std::size_t>(image.rows) * image.cols,
          "height map value count does not match its dimensions");
  for (float v : image.values) require(std::isfinite(v), "height map contains non-finite values");

  static const auto bank = gabor_bank();
  constexpr int kPooled = 2 * kGaborOrientations * 2 * kFeaturePoolSize * kFeaturePoolSize;
  std::vector<float> feature(kFeatureDim, 0.0f);
  const Plane full = demeaned(image);
  scale_features(full, bank, feature.data(), feature.data() + 2 * kPooled);
  scale_features(downsample(full), bank, feature.data() + kPooled,
                 feature.data() + 2 * kPooled + 32);
  return feature;
}

}  // namespace vtex
