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

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vtex/error.hpp"
#include "vtex/model_io.hpp"

namespace vtex {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

ErrorCode load_error(const std::filesystem::path& p, const Architecture& arch) {
  try {
    load_weights(p, arch);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;  // loaded without error
}

void expect_same(const MlpF& a, const MlpF& b) {
  ASSERT_EQ(a.layers().size(), b.layers().size());
  for (std::size_t i = 0; i < a.layers().size(); ++i) {
    EXPECT_EQ(a.layers()[i].weight, b.layers()[i].weight);
    EXPECT_EQ(a.layers()[i].bias, b.layers()[i].bias);
  }
}

TEST(WeightFile, RoundTripIsExact) {
  test::TempDir dir("weights");
  const auto arch = test::small_arch();
  auto w = WeightSet::random(arch, 7);
  w.config_hash = "seed=7;stage1 epochs=3";
  save_weights(w, dir / "w.vtw");
  const auto loaded = load_weights(dir / "w.vtw", arch);
  EXPECT_EQ(loaded.config_hash, w.config_hash);
  EXPECT_EQ(loaded.arch, arch);
  expect_same(loaded.force, w.force);
  expect_same(loaded.speed, w.speed);
  expect_same(loaded.action, w.action);
  expect_same(loaded.texture, w.texture);
  expect_same(loaded.classifier, w.classifier);
  expect_same(loaded.predictor, w.predictor);
  EXPECT_FALSE(std::filesystem::exists(dir / "w.vtw.partial"));
}

TEST(WeightFile, RejectsOtherArchitectures) {
  test::TempDir dir("weights-arch");
  const auto arch = test::small_arch();
  save_weights(WeightSet::random(arch, 1), dir / "w.vtw");
  EXPECT_EQ(load_error(dir / "w.vtw", Architecture::published()), ErrorCode::kCorruptWeights);
  auto wider = arch;
  wider.action.layer_sizes[1] += 1;
  EXPECT_EQ(load_error(dir / "w.vtw", wider), ErrorCode::kCorruptWeights);
}

TEST(WeightFile, RejectsCorruption) {
  test::TempDir dir("weights-bad");
  const auto arch = test::small_arch();
  save_weights(WeightSet::random(arch, 1), dir / "w.vtw");
  const std::string good = slurp(dir / "w.vtw");

  spit(dir / "trunc.vtw", good.substr(0, good.size() - 10));
  EXPECT_EQ(load_error(dir / "trunc.vtw", arch), ErrorCode::kCorruptWeights);

  spit(dir / "noend.vtw", good.substr(0, good.find("\nend\n")));
  EXPECT_EQ(load_error(dir / "noend.vtw", arch), ErrorCode::kCorruptWeights);

  std::string magic = good;
  magic[0] = 'X';
  spit(dir / "magic.vtw", magic);
  EXPECT_EQ(load_error(dir / "magic.vtw", arch), ErrorCode::kCorruptWeights);

  std::string version = good;
  version.replace(0, 7, "VTEXW 9");
  spit(dir / "version.vtw", version);
  EXPECT_EQ(load_error(dir / "version.vtw", arch), ErrorCode::kUnsupportedVersion);

  // Overwrite the first stored float with a NaN bit pattern.
  std::string nan = good;
  const auto blob = nan.find("\nend\n") + 5;
  const unsigned char bits[4] = {0x00, 0x00, 0xc0, 0x7f};
  nan.replace(blob, 4, reinterpret_cast<const char*>(bits), 4);
  spit(dir / "nan.vtw", nan);
  EXPECT_EQ(load_error(dir / "nan.vtw", arch), ErrorCode::kCorruptWeights);

  EXPECT_EQ(load_error(dir / "missing.vtw", arch), ErrorCode::kIo);
}

TEST(LibraryFile, RoundTripWithAndWithoutFeatures) {
  test::TempDir dir("library");
  Rng rng(3);
  TextureLibrary library;
  for (int i = 0; i < 3; ++i) {
    TextureEmbedding e{"tex-" + std::to_string(i), "Texture number " + std::to_string(i), {}};
    for (int d = 0; d < 8; ++d) e.vector.push_back(static_cast<float>(rng.normal()));
    library.entries.push_back(e);
  }
  save_library(library, dir / "a.txt");
  const auto a = load_library(dir / "a.txt", 8, 24);
  ASSERT_EQ(a.entries.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.entries[i].id, library.entries[i].id);
    EXPECT_EQ(a.entries[i].name, library.entries[i].name);
    EXPECT_EQ(a.entries[i].vector, library.entries[i].vector);
  }

  library.features = {std::vector<float>(24, 0.25f), {}, std::vector<float>(24, -1.5f)};
  save_library(library, dir / "b.txt");
  const auto b = load_library(dir / "b.txt", 8, 24);
  ASSERT_EQ(b.features.size(), 3u);
  EXPECT_EQ(b.features[0], library.features[0]);
  EXPECT_TRUE(b.features[1].empty());
  EXPECT_EQ(b.features[2], library.features[2]);
}

TEST(LibraryFile, ParseErrorsCarryLineNumbers) {
  test::TempDir dir("library-bad");
  spit(dir / "bad.txt", "vtex-library 1\ntexture a\nname A\nembedding 1 2 x\nend\n");
  try {
    load_library(dir / "bad.txt", 3, 24);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find(":4"), std::string::npos) << e.what();
  }
  spit(dir / "dup.txt",
       "vtex-library 1\ntexture a\nembedding 1 2 3\nend\ntexture a\nembedding 1 2 3\nend\n");
  try {
    load_library(dir / "dup.txt", 3, 24);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
  }
  spit(dir / "version.txt", "vtex-library 2\n");
  try {
    load_library(dir / "version.txt", 3, 24);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedVersion);
  }
}

}  // namespace
}  // namespace vtex
