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

#include "vtex/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "vtex/error.hpp"
#include "vtex/random.hpp"
#include "vtex/spectral.hpp"

namespace vtex {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& what) {
  fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = detail::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get_le(std::string_view data, std::size_t offset) {
  T value;
  std::memcpy(&value, data.data() + offset, sizeof(T));
  return value;
}

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

}  // namespace

// ---------------------------------------------------------------------------

Trajectory load_trajectory(const fs::path& path) {
  const std::string text = detail::read_file(path);
  const auto lines = lines_of(text);
  Trajectory t;
  t.name = path.stem().string();
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() != '#') break;
    const auto body = detail::trim(line.substr(1));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = detail::trim(body.substr(0, colon));
    const auto value = detail::trim(body.substr(colon + 1));
    if (key == "name") {
      t.name = std::string(value);
    } else if (key == "loop_rate_hz") {
      const auto rate = detail::parse_number<double>(value);
      if (!rate || !(*rate > 0.0)) parse_error(path, i + 1, "bad loop_rate_hz");
      t.nominal_loop_rate_hz = *rate;
    }
  }
  if (i >= lines.size()) parse_error(path, i, "missing header t_s,x_mm,y_mm,z_mm");
  if (detail::trim(lines[i]) != "t_s,x_mm,y_mm,z_mm") {
    parse_error(path, i + 1,
                "expected header t_s,x_mm,y_mm,z_mm, found '" + std::string(detail::trim(lines[i])) + "'");
  }
  for (++i; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 4) {
      parse_error(path, i + 1, "expected 4 columns, found " + std::to_string(fields.size()));
    }
    double values[4];
    for (int k = 0; k < 4; ++k) {
      const auto v = detail::parse_number<double>(detail::trim(fields[k]));
      if (!v || !std::isfinite(*v)) {
        parse_error(path, i + 1, "bad number '" + std::string(fields[k]) + "'");
      }
      values[k] = *v;
    }
    if (!t.samples.empty() && !(values[0] > t.samples.back().t_s)) {
      fail(ErrorCode::kValidation, path.string() + ":" + std::to_string(i + 1) +
                                       ": timestamp " + std::string(fields[0]) +
                                       " does not increase");
    }
    t.samples.push_back({values[0], {values[1], values[2], values[3]}});
  }
  if (t.samples.empty()) fail(ErrorCode::kValidation, path.string() + ": no samples");
  return t;
}

void save_trajectory(const Trajectory& trajectory, const fs::path& path) {
  require(!trajectory.samples.empty(), "cannot save an empty trajectory");
  std::string out;
  if (!trajectory.name.empty()) out += "# name: " + trajectory.name + "\n";
  out += "# loop_rate_hz: ";
  detail::append_number(out, trajectory.nominal_loop_rate_hz);
  out += "\nt_s,x_mm,y_mm,z_mm\n";
  for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
    const auto& s = trajectory.samples[i];
    require(i == 0 || s.t_s > trajectory.samples[i - 1].t_s, "trajectory timestamps must increase");
    detail::append_number(out, s.t_s);
    for (double p : s.position_mm) {
      out += ',';
      detail::append_number(out, p);
    }
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

Trajectory generate_trajectory(double duration_s, double sample_rate_hz, std::uint64_t seed) {
  require(duration_s > 0.0 && sample_rate_hz > 0.0, "duration and rate must be positive");
  Rng rng(seed);
  struct Segment {
    double start, vx, vy, z;
  };
  std::vector<Segment> segments;
  for (double t = 0.0; t < duration_s;) {
    Segment s{t, 0.0, 0.0, 0.0};
    const double mode = rng.uniform();
    const double depth = 0.4 + 5.6 * rng.uniform();
    if (mode < 0.7) {
      const double speed = 15.0 + 205.0 * rng.uniform();
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      s = {t, speed * std::cos(angle), speed * std::sin(angle), -depth};
    } else if (mode < 0.85) {
      s.z = -depth;
    } else {
      const double speed = 100.0 * rng.uniform();
      s = {t, speed, 0.0, 2.0};
    }
    segments.push_back(s);
    t += 0.25 + 0.45 * rng.uniform();
  }

  Trajectory traj;
  traj.name = "generated-" + std::to_string(seed);
  const auto n = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz + 1e-9)) + 1;
  const double dt = 1.0 / sample_rate_hz;
  double x = 0.0;
  double y = 0.0;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    while (seg + 1 < segments.size() && segments[seg + 1].start <= t) ++seg;
    const Segment& cur = segments[seg];
    const Segment prev = seg > 0 ? segments[seg - 1] : Segment{0.0, 0.0, 0.0, 1.0};
    const double w = smoothstep((t - cur.start) / 0.06);
    const double vx = prev.vx + w * (cur.vx - prev.vx);
    const double vy = prev.vy + w * (cur.vy - prev.vy);
    const double z = prev.z + w * (cur.z - prev.z);
    if (i > 0) {
      x += vx * dt;
      y += vy * dt;
    }
    traj.samples.push_back({t, {x, y, z}});
  }
  return traj;
}

// ---------------------------------------------------------------------------

double SyntheticTexture::a1(double fs) const {
  const double r = std::exp(-std::numbers::pi * bandwidth_hz / fs);
  return 2.0 * r * std::cos(2.0 * std::numbers::pi * resonance_hz / fs);
}

double SyntheticTexture::a2(double fs) const {
  const double r = std::exp(-std::numbers::pi * bandwidth_hz / fs);
  return -r * r;
}

void SyntheticTexture::validate(double fs) const {
  require(!id.empty(), "texture id must not be empty");
  require(fs > 0.0, "sample rate must be positive");
  require(resonance_hz > 0.0 && fs > 2.0 * resonance_hz,
          "texture " + id + ": sample rate must exceed twice the resonance");
  require(bandwidth_hz > 0.0, "texture " + id + ": bandwidth must be positive");
  require(gain >= 0.0 && std::isfinite(gain), "texture " + id + ": gain must be non-negative");
  const double p[] = {1.0, -a1(fs), -a2(fs)};
  require(is_stable_denominator(p), "texture " + id + ": AR poles are not inside the unit circle");
}

HeightMap SyntheticTexture::height_map(int rows, int cols, std::uint64_t seed) const {
  HeightMap map(rows, cols);
  Rng rng(seed);
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  std::vector<double> noise(static_cast<std::size_t>(rows) * cols);
  for (double& v : noise) v = rng.normal();
  const double c = std::cos(orientation_rad);
  const double s = std::sin(orientation_rad);
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) {
      double smooth = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = (r + dr + rows) % rows;
          const int cc = (col + dc + cols) % cols;
          smooth += noise[static_cast<std::size_t>(rr) * cols + cc];
        }
      }
      const double grating =
          std::sin(2.0 * std::numbers::pi * spatial_frequency * (col * c + r * s) + phase);
      map.at(r, col) = static_cast<float>(grating + roughness * smooth / 3.0);
    }
  }
  return map;
}

std::vector<SyntheticTexture> default_textures() {
  return {
      {"fine-ridges", "Fine ridges", 80.0, 20.0, 0.05, 0.25, 0.0, 0.2},
      {"coarse-ridges", "Coarse ridges", 150.0, 30.0, 0.08, 0.0625, 0.5, 0.2},
      {"diagonal-weave", "Diagonal weave", 200.0, 40.0, 0.04, 0.125, 0.785, 0.3},
      {"sandpaper", "Sandpaper", 230.0, 120.0, 0.06, 0.2, 1.2, 1.0},
      {"smooth-plastic", "Smooth plastic", 120.0, 60.0, 0.02, 0.03, 1.57, 0.05},
      {"cross-hatch", "Cross hatch", 180.0, 25.0, 0.07, 0.1, 2.4, 0.4},
  };
}

Recording synthesize_ground_truth(const SyntheticTexture& texture,
                                  std::span<const double> normal_force_n,
                                  std::span<const double> speed_mm_s, double sample_rate_hz,
                                  std::uint64_t seed) {
  texture.validate(sample_rate_hz);
  require(normal_force_n.size() == speed_mm_s.size(), "force and speed traces must align");
  const double a1 = texture.a1(sample_rate_hz);
  const double a2 = texture.a2(sample_rate_hz);
  // Stationary variance of x[n] = a1 x[n-1] + a2 x[n-2] + e[n] for unit e.
  const double variance = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
  const double norm = 1.0 / std::sqrt(variance);

  Recording rec;
  rec.sample_rate_hz = sample_rate_hz;
  rec.normal_force_n.assign(normal_force_n.begin(), normal_force_n.end());
  rec.speed_mm_s.assign(speed_mm_s.begin(), speed_mm_s.end());
  rec.acceleration.resize(normal_force_n.size());
  Rng rng(seed);
  double x1 = 0.0;
  double x2 = 0.0;
  for (std::size_t n = 0; n < normal_force_n.size(); ++n) {
    const double drive = std::max(normal_force_n[n], 0.0) * std::abs(speed_mm_s[n]);
    const double e = rng.normal();
    const double x = a1 * x1 + a2 * x2 + texture.gain * std::sqrt(drive) * norm * e;
    rec.acceleration[n] = x;
    x2 = x1;
    x1 = x;
  }
  return rec;
}

Recording record_trajectory(const SyntheticTexture& texture, const Trajectory& trajectory,
                            const RenderConfig& config, double recording_rate_hz,
                            std::uint64_t seed) {
  const double ratio = recording_rate_hz / config.loop_rate_hz;
  const auto hold = static_cast<std::size_t>(std::llround(ratio));
  require(hold >= 1 && std::abs(ratio - static_cast<double>(hold)) < 1e-9,
          "recording rate must be an integer multiple of the loop rate");
  const auto loops = resample_trajectory(trajectory.samples, config.loop_rate_hz);
  const auto trace = compute_action_trace(loops, config);
  std::vector<double> force;
  std::vector<double> speed;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const double v = std::hypot(trace.velocity_mm_s[i][0], trace.velocity_mm_s[i][1]);
    for (std::size_t k = 0; k < hold; ++k) {
      force.push_back(trace.normal_force_n[i]);
      speed.push_back(v);
    }
  }
  return synthesize_ground_truth(texture, force, speed, recording_rate_hz, seed);
}

// ---------------------------------------------------------------------------

void export_wav(std::span<const double> waveform, double sample_rate_hz, const fs::path& path) {
  require(!waveform.empty(), "cannot export an empty waveform");
  const auto rate = static_cast<std::uint32_t>(std::llround(sample_rate_hz));
  require(sample_rate_hz > 0.0 && static_cast<double>(rate) == sample_rate_hz,
          "WAV sample rate must be a positive integer");
  const auto count = static_cast<std::uint32_t>(waveform.size());
  const std::uint32_t data_bytes = count * 4;
  std::string out;
  out.reserve(58 + data_bytes);
  out += "RIFF";
  put_le<std::uint32_t>(out, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
  out += "WAVE";
  out += "fmt ";
  put_le<std::uint32_t>(out, 18);
  put_le<std::uint16_t>(out, 3);  // IEEE float
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * 4);
  put_le<std::uint16_t>(out, 4);
  put_le<std::uint16_t>(out, 32);
  put_le<std::uint16_t>(out, 0);
  out += "fact";
  put_le<std::uint32_t>(out, 4);
  put_le<std::uint32_t>(out, count);
  out += "data";
  put_le<std::uint32_t>(out, data_bytes);
  for (double v : waveform) put_le<float>(out, static_cast<float>(v));
  detail::write_file_atomic(path, out);
}

WavData read_wav(const fs::path& path) {
  const std::string data = detail::read_file(path);
  auto bad = [&](const std::string& what) -> void {
    fail(ErrorCode::kParse, path.string() + ": " + what);
  };
  if (data.size() < 12 || data.compare(0, 4, "RIFF") != 0 || data.compare(8, 4, "WAVE") != 0) {
    bad("not a RIFF/WAVE file");
  }
  WavData wav;
  bool have_format = false;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::string id = data.substr(pos, 4);
    const auto size = get_le<std::uint32_t>(data, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > data.size()) bad("chunk '" + id + "' is truncated");
    if (id == "fmt ") {
      if (size < 16) bad("fmt chunk too short");
      const auto format = get_le<std::uint16_t>(data, body);
      const auto channels = get_le<std::uint16_t>(data, body + 2);
      const auto bits = get_le<std::uint16_t>(data, body + 14);
      if (format != 3 || channels != 1 || bits != 32) bad("only mono 32-bit float WAV is supported");
      wav.sample_rate_hz = get_le<std::uint32_t>(data, body + 4);
      have_format = true;
    } else if (id == "data") {
      if (!have_format) bad("data chunk before fmt chunk");
      if (size % 4 != 0) bad("data chunk is not a whole number of samples");
      wav.samples.resize(size / 4);
      std::memcpy(wav.samples.data(), data.data() + body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_data) bad("no data chunk");
  return wav;
}

void export_csv(std::span<const double> waveform, double sample_rate_hz, const fs::path& path) {
  require(!waveform.empty(), "cannot export an empty waveform");
  require(sample_rate_hz > 0.0, "sample rate must be positive");
  std::string out = "t_s,accel_m_s2\n";
  for (std::size_t n = 0; n < waveform.size(); ++n) {
    detail::append_number(out, static_cast<double>(n) / sample_rate_hz);
    out += ',';
    detail::append_number(out, waveform[n]);
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

void save_pfm(const HeightMap& image, const fs::path& path) {
  require(image.rows > 0 && image.cols > 0 &&
              image.values.size() == static_cast<std::size_t>(image.rows) * image.cols,
          "height map dimensions do not match its data");
  std::string out = "Pf\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n-1.0\n";
  for (int r = image.rows - 1; r >= 0; --r) {
    for (int c = 0; c < image.cols; ++c) put_le<float>(out, image.at(r, c));
  }
  detail::write_file_atomic(path, out);
}

HeightMap load_pfm(const fs::path& path) {
  const std::string data = detail::read_file(path);
  auto bad = [&](const std::string& what) -> void {
    fail(ErrorCode::kParse, path.string() + ": " + what);
  };
  // Four whitespace-separated header tokens ("Pf", width, height, scale),
  // then exactly one whitespace byte before the pixels.
  std::size_t pos = 0;
  std::vector<std::string> tokens;
  while (tokens.size() < 4) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) bad("truncated PFM header");
    tokens.emplace_back(data.substr(start, pos - start));
  }
  if (pos >= data.size()) bad("truncated PFM header");
  ++pos;
  if (tokens[0] != "Pf") bad("not a grayscale PFM (expected 'Pf')");
  const auto cols = detail::parse_number<int>(tokens[1]);
  const auto rows = detail::parse_number<int>(tokens[2]);
  if (!cols || !rows || *cols <= 0 || *rows <= 0) bad("bad PFM dimensions");
  const auto scale = detail::parse_number<double>(tokens[3]);
  if (!scale || *scale == 0.0) bad("bad PFM scale");
  const std::size_t count = static_cast<std::size_t>(*rows) * static_cast<std::size_t>(*cols);
  if (pos > data.size() || data.size() - pos != count * 4) bad("PFM pixel data has the wrong size");
  HeightMap image(*rows, *cols);
  const bool little = *scale < 0.0;
  for (int r = image.rows - 1, i = 0; r >= 0; --r) {
    for (int c = 0; c < image.cols; ++c, ++i) {
      auto bits = get_le<std::uint32_t>(data, pos + static_cast<std::size_t>(i) * 4);
      if (!little) bits = __builtin_bswap32(bits);
      float v;
      std::memcpy(&v, &bits, 4);
      if (!std::isfinite(v)) bad("PFM contains non-finite values");
      image.at(r, c) = v;
    }
  }
  return image;
}

// ---------------------------------------------------------------------------

const DatasetTexture& Dataset::texture(std::string_view id) const {
  return textures[texture_index(id)];
}

std::size_t Dataset::texture_index(std::string_view id) const {
  for (std::size_t i = 0; i < textures.size(); ++i) {
    if (textures[i].texture.id == id) return i;
  }
  fail(ErrorCode::kNotFound, "texture not found: " + std::string(id));
}

void save_manifest(const Dataset& dataset) {
  nlohmann::ordered_json j;
  j["format"] = "vtex-dataset";
  j["version"] = 1;
  j["seed"] = dataset.seed;
  j["recording_rate_hz"] = dataset.recording_rate_hz;
  j["loop_rate_hz"] = dataset.loop_rate_hz;
  j["textures"] = nlohmann::ordered_json::array();
  for (const auto& t : dataset.textures) {
    const auto& s = t.texture;
    j["textures"].push_back({{"id", s.id},
                             {"name", s.name},
                             {"resonance_hz", s.resonance_hz},
                             {"bandwidth_hz", s.bandwidth_hz},
                             {"gain", s.gain},
                             {"spatial_frequency", s.spatial_frequency},
                             {"orientation_rad", s.orientation_rad},
                             {"roughness", s.roughness},
                             {"images", t.images}});
  }
  j["trajectories"] = nlohmann::ordered_json::array();
  for (const auto& t : dataset.trajectories) {
    j["trajectories"].push_back({{"texture", t.texture_id},
                                 {"split", t.split},
                                 {"seed", t.seed},
                                 {"trajectory", t.trajectory},
                                 {"recording", t.recording}});
  }
  detail::write_file_atomic(dataset.root / "manifest.json", j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& root) {
  const fs::path manifest = root / "manifest.json";
  if (!fs::exists(manifest)) fail(ErrorCode::kNotFound, "dataset manifest not found: " + manifest.string());
  Dataset d;
  d.root = root;
  try {
    const auto j = nlohmann::json::parse(detail::read_file(manifest));
    if (j.at("format").get<std::string>() != "vtex-dataset") {
      fail(ErrorCode::kValidation, manifest.string() + ": not a vtex dataset");
    }
    if (j.at("version").get<int>() != 1) {
      fail(ErrorCode::kUnsupportedVersion, manifest.string() + ": unsupported dataset version");
    }
    d.seed = j.at("seed").get<std::uint64_t>();
    d.recording_rate_hz = j.at("recording_rate_hz").get<double>();
    d.loop_rate_hz = j.at("loop_rate_hz").get<double>();
    for (const auto& t : j.at("textures")) {
      DatasetTexture dt;
      auto& s = dt.texture;
      s.id = t.at("id").get<std::string>();
      s.name = t.at("name").get<std::string>();
      s.resonance_hz = t.at("resonance_hz").get<double>();
      s.bandwidth_hz = t.at("bandwidth_hz").get<double>();
      s.gain = t.at("gain").get<double>();
      s.spatial_frequency = t.at("spatial_frequency").get<double>();
      s.orientation_rad = t.at("orientation_rad").get<double>();
      s.roughness = t.at("roughness").get<double>();
      dt.images = t.at("images").get<std::vector<std::string>>();
      d.textures.push_back(std::move(dt));
    }
    for (const auto& t : j.at("trajectories")) {
      DatasetTrajectory dt;
      dt.texture_id = t.at("texture").get<std::string>();
      dt.split = t.at("split").get<std::string>();
      dt.seed = t.at("seed").get<std::uint64_t>();
      dt.trajectory = t.at("trajectory").get<std::string>();
      dt.recording = t.at("recording").get<std::string>();
      d.trajectories.push_back(std::move(dt));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, manifest.string() + ": " + e.what());
  }

  auto invalid = [&](const std::string& what) -> void {
    fail(ErrorCode::kValidation, manifest.string() + ": " + what);
  };
  auto must_exist = [&](const std::string& rel) {
    if (!fs::exists(root / rel)) fail(ErrorCode::kNotFound, "dataset file missing: " + (root / rel).string());
  };
  if (d.textures.empty()) invalid("no textures");
  if (!(d.loop_rate_hz > 0.0) || !(d.recording_rate_hz > 0.0)) invalid("rates must be positive");
  std::set<std::string> ids;
  for (const auto& t : d.textures) {
    if (!ids.insert(t.texture.id).second) invalid("duplicate texture id " + t.texture.id);
    try {
      t.texture.validate(d.recording_rate_hz);
    } catch (const Error& e) {
      invalid(e.what());
    }
    if (t.images.empty()) invalid("texture " + t.texture.id + " has no images");
    for (const auto& img : t.images) must_exist(img);
  }
  for (const auto& t : d.trajectories) {
    if (!ids.count(t.texture_id)) invalid("trajectory references unknown texture " + t.texture_id);
    if (t.split != "train" && t.split != "heldout") invalid("split must be 'train' or 'heldout', got " + t.split);
    must_exist(t.trajectory);
    must_exist(t.recording);
  }
  return d;
}

Dataset generate_dataset(const DatasetSpec& spec, const fs::path& root) {
  require(spec.textures.size() >= 2, "a dataset needs at least 2 textures");
  require(spec.trajectories_per_texture >= 1 && spec.heldout_per_texture >= 0 &&
              spec.heldout_per_texture < spec.trajectories_per_texture,
          "need at least one training trajectory per texture");
  require(spec.images_per_texture >= 1 && spec.image_size >= 32, "images must be at least 32 px");
  fs::create_directories(root / "images");
  fs::create_directories(root / "trajectories");
  fs::create_directories(root / "recordings");

  Dataset d;
  d.root = root;
  d.seed = spec.seed;
  d.recording_rate_hz = spec.recording_rate_hz;
  d.loop_rate_hz = spec.loop_rate_hz;
  RenderConfig config;
  config.loop_rate_hz = spec.loop_rate_hz;
  config.synthesis_rate_hz = spec.loop_rate_hz;

  for (std::size_t ti = 0; ti < spec.textures.size(); ++ti) {
    const auto& texture = spec.textures[ti];
    texture.validate(spec.recording_rate_hz);
    DatasetTexture dt{texture, {}};
    for (int k = 0; k < spec.images_per_texture; ++k) {
      const std::string rel = "images/" + texture.id + "_" + std::to_string(k) + ".pfm";
      const auto seed = derive_seed(spec.seed, 1000 + ti * 100 + static_cast<std::uint64_t>(k));
      save_pfm(texture.height_map(spec.image_size, spec.image_size, seed), root / rel);
      dt.images.push_back(rel);
    }
    d.textures.push_back(std::move(dt));

    for (int j = 0; j < spec.trajectories_per_texture; ++j) {
      const std::string stem = texture.id + "_" + std::to_string(j);
      const auto seed = derive_seed(spec.seed, 5000 + ti * 100 + static_cast<std::uint64_t>(j));
      auto traj = generate_trajectory(spec.duration_s, spec.trajectory_rate_hz, seed);
      traj.name = stem;
      traj.nominal_loop_rate_hz = spec.loop_rate_hz;
      save_trajectory(traj, root / ("trajectories/" + stem + ".csv"));
      const auto rec = record_trajectory(texture, traj, config, spec.recording_rate_hz,
                                         derive_seed(seed, 1));
      export_wav(rec.acceleration, spec.recording_rate_hz, root / ("recordings/" + stem + ".wav"));
      d.trajectories.push_back(
          {texture.id,
           j >= spec.trajectories_per_texture - spec.heldout_per_texture ? "heldout" : "train", seed,
           "trajectories/" + stem + ".csv", "recordings/" + stem + ".wav"});
    }
  }
  save_manifest(d);
  return d;
}

std::vector<float> target_frame(std::span<const float> recording, std::size_t start, int frame_len,
                                std::span<const double> window) {
  require(start + static_cast<std::size_t>(frame_len) <= recording.size(),
          "target frame runs past the end of the recording");
  const std::vector<double> frame(recording.begin() + static_cast<std::ptrdiff_t>(start),
                                  recording.begin() + static_cast<std::ptrdiff_t>(start) + frame_len);
  const auto mags = windowed_magnitude_dft(frame, window);
  std::vector<float> out(kModelBins, 0.0f);
  for (std::size_t k = 0; k < std::min<std::size_t>(mags.size(), kModelBins); ++k) {
    out[k] = static_cast<float>(mags[k]);
  }
  return out;
}

TrainingData build_training_dataset(const Dataset& dataset, const TrainingDataOptions& options) {
  require(dataset.textures.size() >= 2, "training needs at least 2 textures");
  require(options.stride >= 1, "stride must be positive");
  RenderConfig config = options.render;
  config.loop_rate_hz = dataset.loop_rate_hz;
  if (std::fmod(config.synthesis_rate_hz, config.loop_rate_hz) != 0.0) {
    config.synthesis_rate_hz = config.loop_rate_hz;
  }
  const double ratio = dataset.recording_rate_hz / dataset.loop_rate_hz;
  const auto hop = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - static_cast<double>(hop)) < 1e-9 && hop >= 1,
          "recording rate must be an integer multiple of the loop rate");
  const auto geometry = FrameGeometry::with_hop(dataset.recording_rate_hz, static_cast<int>(hop));
  const auto window = make_hann_window(geometry.frame_len);

  TrainingData out;
  out.stage1.num_classes = static_cast<int>(dataset.textures.size());
  for (std::size_t ti = 0; ti < dataset.textures.size(); ++ti) {
    const auto& t = dataset.textures[ti];
    out.stage2.texture_ids.push_back(t.texture.id);
    for (std::size_t k = 0; k < t.images.size(); ++k) {
      const auto image = load_pfm(dataset.root / t.images[k]);
      auto feature = toy_image_features(image);
      if (k == 0) {
        out.stage2.features.push_back(feature);
        out.canonical_images.push_back(image);
      }
      out.stage1.features.push_back(std::move(feature));
      out.stage1.labels.push_back(static_cast<int>(ti));
    }
  }

  std::vector<float> forces(kActionSteps);
  std::vector<float> velocities(2 * kActionSteps);
  for (const auto& entry : dataset.trajectories) {
    const auto ti = static_cast<std::uint32_t>(dataset.texture_index(entry.texture_id));
    const auto traj = load_trajectory(dataset.root / entry.trajectory);
    const auto wav = read_wav(dataset.root / entry.recording);
    if (wav.sample_rate_hz != dataset.recording_rate_hz) {
      fail(ErrorCode::kValidation, entry.recording + ": sample rate does not match the manifest");
    }
    const auto loops = resample_trajectory(traj.samples, dataset.loop_rate_hz);
    const auto trace = compute_action_trace(loops, config);
    Stage2Set& set = entry.split == "train" ? out.stage2.train : out.stage2.heldout;
    for (std::size_t i = 0; i < loops.size(); i += static_cast<std::size_t>(options.stride)) {
      const std::size_t start = i * hop;
      if (start + static_cast<std::size_t>(geometry.frame_len) > wav.samples.size()) break;
      for (int k = 0; k < kActionSteps; ++k) {
        const auto idx = static_cast<std::ptrdiff_t>(i) - (kActionSteps - 1) + k;
        const bool valid = idx >= 0;
        const auto u = static_cast<std::size_t>(std::max<std::ptrdiff_t>(idx, 0));
        forces[k] = valid ? static_cast<float>(trace.normal_force_n[u]) : 0.0f;
        velocities[2 * k] = valid ? static_cast<float>(trace.velocity_mm_s[u][0]) : 0.0f;
        velocities[2 * k + 1] = valid ? static_cast<float>(trace.velocity_mm_s[u][1]) : 0.0f;
      }
      set.append(ti, forces, velocities, target_frame(wav.samples, start, geometry.frame_len, window));
    }
  }
  return out;
}

}  // namespace vtex
