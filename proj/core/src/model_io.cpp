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

#include "vtex/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "text_util.hpp"
#include "vtex/error.hpp"

namespace vtex {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; add byte swapping for this host");

struct NetRef {
  const char* name;
  MlpSpec Architecture::*spec;
  MlpF WeightSet::*net;
};

constexpr NetRef kNets[] = {
    {"force", &Architecture::force, &WeightSet::force},
    {"speed", &Architecture::speed, &WeightSet::speed},
    {"action", &Architecture::action, &WeightSet::action},
    {"texture", &Architecture::texture, &WeightSet::texture},
    {"classifier", &Architecture::classifier, &WeightSet::classifier},
    {"predictor", &Architecture::predictor, &WeightSet::predictor},
};

struct TensorEntry {
  long rows = 0;
  long cols = 0;
  std::uint64_t offset = 0;
};

[[noreturn]] void corrupt(const std::string& what) {
  fail(ErrorCode::kCorruptWeights, "corrupt weight file: " + what);
}

}  // namespace

void save_weights(const WeightSet& weights, const std::filesystem::path& path) {
  weights.validate();
  std::string header = "VTEXW " + std::to_string(kWeightFormatVersion) + "\n";
  std::string hash = weights.config_hash;
  for (char& c : hash) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  header += "config_hash " + hash + "\n";
  header += "window " + std::to_string(weights.arch.window) + "\n";
  for (const auto& ref : kNets) {
    header += std::string("network ") + ref.name + " " + (weights.arch.*ref.spec).to_string() + "\n";
  }
  std::uint64_t offset = 0;
  for (const auto& ref : kNets) {
    const auto& net = weights.*ref.net;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      const auto& layer = net.layers()[i];
      const std::string base = std::string(ref.name) + "." + std::to_string(i);
      header += "tensor " + base + ".weight " + std::to_string(layer.weight.rows()) + " " +
                std::to_string(layer.weight.cols()) + " " + std::to_string(offset) + "\n";
      offset += static_cast<std::uint64_t>(layer.weight.size()) * sizeof(float);
      header += "tensor " + base + ".bias " + std::to_string(layer.bias.size()) + " 1 " +
                std::to_string(offset) + "\n";
      offset += static_cast<std::uint64_t>(layer.bias.size()) * sizeof(float);
    }
  }
  header += "end\n";

  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<float> row;
    for (const auto& ref : kNets) {
      for (const auto& layer : (weights.*ref.net).layers()) {
        row.resize(static_cast<std::size_t>(layer.weight.cols()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) row[c] = layer.weight(r, c);
          out.write(reinterpret_cast<const char*>(row.data()),
                    static_cast<std::streamsize>(row.size() * sizeof(float)));
        }
        out.write(reinterpret_cast<const char*>(layer.bias.data()),
                  static_cast<std::streamsize>(layer.bias.size() * sizeof(float)));
      }
    }
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::kIo, "write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot move weights into place: " + path.string());
}

WeightSet load_weights(const std::filesystem::path& path, const Architecture& expected) {
  expected.validate();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open weight file " + path.string());

  std::string line;
  if (!std::getline(in, line)) corrupt("empty file");
  {
    const auto parts = detail::tokens(line);
    if (parts.size() != 2 || parts[0] != "VTEXW") corrupt("missing VTEXW magic");
    const auto version = detail::parse_number<int>(parts[1]);
    if (!version) corrupt("bad version field");
    if (*version != kWeightFormatVersion) {
      fail(ErrorCode::kUnsupportedVersion,
           "weight file version " + std::to_string(*version) + " is not supported (expected " +
               std::to_string(kWeightFormatVersion) + ")");
    }
  }

  WeightSet weights;
  weights.arch = expected;
  std::map<std::string, MlpSpec> networks;
  std::map<std::string, TensorEntry> tensors;
  std::optional<int> window;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto parts = detail::tokens(line);
    if (parts.empty()) continue;
    if (parts[0] == "config_hash") {
      const auto pos = line.find(' ');
      weights.config_hash = pos == std::string::npos ? "" : line.substr(pos + 1);
    } else if (parts[0] == "window" && parts.size() == 2) {
      window = detail::parse_number<int>(parts[1]);
      if (!window) corrupt("bad window line");
    } else if (parts[0] == "network" && parts.size() == 3) {
      std::string_view sizes = parts[2];
      if (sizes.size() < 2 || sizes.front() != '(' || sizes.back() != ')') {
        corrupt("bad layer list for network " + std::string(parts[1]));
      }
      MlpSpec spec;
      for (auto item : detail::split(sizes.substr(1, sizes.size() - 2), ',')) {
        const auto n = detail::parse_number<int>(item);
        if (!n) corrupt("bad layer size for network " + std::string(parts[1]));
        spec.layer_sizes.push_back(*n);
      }
      networks[std::string(parts[1])] = spec;
    } else if (parts[0] == "tensor" && parts.size() == 5) {
      const auto rows = detail::parse_number<long>(parts[2]);
      const auto cols = detail::parse_number<long>(parts[3]);
      const auto offset = detail::parse_number<std::uint64_t>(parts[4]);
      if (!rows || !cols || !offset) corrupt("bad tensor line for " + std::string(parts[1]));
      tensors[std::string(parts[1])] = {*rows, *cols, *offset};
    } else {
      corrupt("unrecognized manifest line: " + line);
    }
  }
  if (!ended) corrupt("manifest not terminated (truncated file?)");
  if (!window || *window != expected.window) {
    corrupt("action window does not match the architecture (expected " +
            std::to_string(expected.window) + ")");
  }
  for (const auto& ref : kNets) {
    const auto it = networks.find(ref.name);
    const auto& want = expected.*ref.spec;
    if (it == networks.end()) corrupt("network " + std::string(ref.name) + " missing");
    if (!(it->second == want)) {
      corrupt("network " + std::string(ref.name) + " has layers " + it->second.to_string() +
              ", expected " + want.to_string());
    }
  }

  const std::streampos blob_start = in.tellg();
  in.seekg(0, std::ios::end);
  const std::uint64_t blob_size = static_cast<std::uint64_t>(in.tellg() - blob_start);
  std::vector<char> blob(blob_size);
  in.seekg(blob_start);
  in.read(blob.data(), static_cast<std::streamsize>(blob_size));
  if (!in) fail(ErrorCode::kIo, "read failed: " + path.string());

  auto load_tensor = [&](const std::string& name, long rows, long cols, float* dest,
                         bool row_major_matrix, Eigen::Index ld) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) corrupt("tensor " + name + " missing");
    const auto& entry = it->second;
    if (entry.rows != rows || entry.cols != cols) {
      corrupt("tensor " + name + " has shape " + std::to_string(entry.rows) + "x" +
              std::to_string(entry.cols) + ", expected " + std::to_string(rows) + "x" +
              std::to_string(cols));
    }
    const std::uint64_t bytes = static_cast<std::uint64_t>(rows) * cols * sizeof(float);
    if (entry.offset > blob_size || bytes > blob_size - entry.offset) {
      corrupt("tensor " + name + " extends past the end of the file (truncated?)");
    }
    const char* src = blob.data() + entry.offset;
    if (row_major_matrix) {
      // File is row-major; Eigen storage is column-major with leading dim ld.
      for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
          float v;
          std::memcpy(&v, src + (static_cast<std::uint64_t>(r) * cols + c) * sizeof(float),
                      sizeof(float));
          dest[c * ld + r] = v;
        }
      }
    } else {
      std::memcpy(dest, src, bytes);
    }
  };

  for (const auto& ref : kNets) {
    auto& net = weights.*ref.net;
    net = MlpF(expected.*ref.spec);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      auto& layer = net.layers()[i];
      const std::string base = std::string(ref.name) + "." + std::to_string(i);
      load_tensor(base + ".weight", layer.weight.rows(), layer.weight.cols(),
                  layer.weight.data(), true, layer.weight.rows());
      load_tensor(base + ".bias", layer.bias.size(), 1, layer.bias.data(), false, 0);
      if (!layer.weight.allFinite()) corrupt(base + ".weight contains non-finite values");
      if (!layer.bias.allFinite()) corrupt(base + ".bias contains non-finite values");
    }
  }
  return weights;
}

// ---------------------------------------------------------------------------

void save_library(const TextureLibrary& library, const std::filesystem::path& path) {
  int feature_dim = kFeatureDim;
  for (const auto& f : library.features) {
    if (!f.empty()) {
      feature_dim = static_cast<int>(f.size());
      break;
    }
  }
  library.validate(library.entries.empty()
                       ? kEmbeddingDim
                       : static_cast<int>(library.entries.front().vector.size()),
                   feature_dim);
  std::string out = "vtex-library " + std::to_string(kLibraryFormatVersion) + "\n";
  for (std::size_t i = 0; i < library.entries.size(); ++i) {
    const auto& e = library.entries[i];
    require(e.id.find_first_of(" \t\r\n") == std::string::npos,
            "texture id must not contain whitespace: " + e.id);
    require(e.name.find_first_of("\r\n") == std::string::npos,
            "texture name must be a single line");
    out += "texture " + e.id + "\n";
    out += "name " + e.name + "\n";
    out += "embedding";
    for (float v : e.vector) {
      out += ' ';
      detail::append_number(out, v);
    }
    out += '\n';
    if (i < library.features.size() && !library.features[i].empty()) {
      out += "feature";
      for (float v : library.features[i]) {
        out += ' ';
        detail::append_number(out, v);
      }
      out += '\n';
    }
    out += "end\n";
  }
  detail::write_file_atomic(path, out);
}

TextureLibrary load_library(const std::filesystem::path& path, int embedding_dim,
                            int feature_dim) {
  const std::string text = detail::read_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto error = [&](const std::string& what) -> void {
    fail(ErrorCode::kParse,
         path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) error("empty library file");
  ++line_no;
  {
    const auto parts = detail::tokens(line);
    if (parts.size() != 2 || parts[0] != "vtex-library") error("missing vtex-library header");
    const auto version = detail::parse_number<int>(parts[1]);
    if (!version || *version != kLibraryFormatVersion) {
      fail(ErrorCode::kUnsupportedVersion, "unsupported library version in " + path.string());
    }
  }
  auto parse_floats = [&](std::string_view rest, std::size_t expected) {
    std::vector<float> values;
    values.reserve(expected);
    for (auto token : detail::tokens(rest)) {
      const auto v = detail::parse_number<float>(token);
      if (!v || !std::isfinite(*v)) error("bad number '" + std::string(token) + "'");
      values.push_back(*v);
    }
    if (values.size() != expected) {
      error("expected " + std::to_string(expected) + " values, found " +
            std::to_string(values.size()));
    }
    return values;
  };

  TextureLibrary library;
  std::vector<std::vector<float>> features;
  bool any_feature = false;
  std::optional<TextureEmbedding> current;
  std::vector<float> current_feature;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto space = line.find(' ');
    const std::string key = line.substr(0, space);
    const std::string_view rest =
        space == std::string::npos ? std::string_view() : std::string_view(line).substr(space + 1);
    if (key == "texture") {
      if (current) error("texture block not closed with 'end'");
      const auto id = detail::trim(rest);
      if (id.empty()) error("texture id missing");
      current.emplace();
      current->id = std::string(id);
      current_feature.clear();
    } else if (!current) {
      error("'" + key + "' outside a texture block");
    } else if (key == "name") {
      current->name = std::string(rest);
    } else if (key == "embedding") {
      current->vector = parse_floats(rest, static_cast<std::size_t>(embedding_dim));
    } else if (key == "feature") {
      current_feature = parse_floats(rest, static_cast<std::size_t>(feature_dim));
      any_feature = true;
    } else if (key == "end") {
      if (current->vector.empty()) error("texture " + current->id + " has no embedding");
      library.entries.push_back(std::move(*current));
      features.push_back(std::move(current_feature));
      current.reset();
      current_feature.clear();
    } else {
      error("unknown key '" + key + "'");
    }
  }
  if (current) error("unterminated texture block");
  if (any_feature) library.features = std::move(features);
  try {
    library.validate(embedding_dim, feature_dim);
  } catch (const Error& e) {
    fail(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
  return library;
}

}  // namespace vtex
