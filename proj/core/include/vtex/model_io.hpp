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

// Weight and texture-library files.
//
// Weight file: a text manifest followed by a binary blob.
//
//   VTEXW 1
//   config_hash <text>
//   window 10
//   network force (10,10,10,10)
//   ...                               one line per network
//   tensor force.0.weight 10 10 0     name rows cols byte-offset
//   tensor force.0.bias 10 1 400
//   ...
//   end
//   <little-endian float32 data; matrices row-major (out x in)>
//
// Offsets are relative to the first byte after the "end" line.
//
// Library file: line-oriented text, one block per texture.
//
//   vtex-library 1
//   texture <id>
//   name <free text to end of line>
//   embedding <256 floats>
//   feature <8960 floats>             optional
//   end

#include <filesystem>

#include "vtex/model.hpp"

namespace vtex {

inline constexpr int kWeightFormatVersion = 1;
inline constexpr int kLibraryFormatVersion = 1;

void save_weights(const WeightSet& weights, const std::filesystem::path& path);

// Rejects any architecture other than `expected`, shape mismatches, truncated
// blobs and non-finite values (corrupt-weights), and other format versions
// (unsupported-version). Nothing is returned on failure.
WeightSet load_weights(const std::filesystem::path& path,
                       const Architecture& expected = Architecture::published());

void save_library(const TextureLibrary& library, const std::filesystem::path& path);
TextureLibrary load_library(const std::filesystem::path& path,
                            int embedding_dim = kEmbeddingDim,
                            int feature_dim = kFeatureDim);

}  // namespace vtex
