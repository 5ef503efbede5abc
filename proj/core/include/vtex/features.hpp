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

// Image features for the texture encoder. The network expects an 8960-value
// feature vector; this provider derives one from a grayscale height map with a
// fixed bank of Gabor filters, so no learned image model is needed.

#include <span>
#include <vector>

namespace vtex {

// Row-major grayscale image.
struct HeightMap {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  HeightMap() = default;
  HeightMap(int rows, int cols);

  float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols + c];
  }
};

inline constexpr int kFeaturePoolSize = 16;
inline constexpr int kGaborOrientations = 4;
inline constexpr int kGaborKernelSize = 7;

// Layout of the returned vector:
//   [0, 4096)     full-resolution responses, 16 channels x 16 x 16 pooled cells
//   [4096, 8192)  the same on the 2x2-averaged image
//   [8192, 8256)  mean and RMS of each of the 32 channels
//   [8256, 8960)  zero
// Channels are the positive and negative halves of 8 zero-mean Gabor
// responses (4 orientations x wavelengths 4 and 8 px), computed with circular
// boundaries on the mean-removed image. Requires rows, cols >= 32.
std::vector<float> toy_image_features(const HeightMap& image);

// The 8 Gabor kernels, kGaborKernelSize^2 values each, row-major.
std::vector<std::vector<double>> gabor_bank();

}  // namespace vtex
