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

// Real-time rendering loop: probe physics, velocity filtering, action window,
// model inference, phase retrieval, overlap-add, speed gating and actuator
// compensation.

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vtex/model.hpp"
#include "vtex/phase.hpp"
#include "vtex/spectral.hpp"

namespace vtex {

struct RenderConfig {
  double loop_rate_hz = 500.0;
  double synthesis_rate_hz = 500.0;  // integer multiple of the loop rate
  double stiffness_n_per_mm = 0.5;
  double speed_threshold_mm_s = 5.0;
  double force_clamp_n = 3.3;
  double velocity_lpf_cutoff_hz = 20.0;

  void validate() const;
  FrameGeometry geometry() const;
  int samples_per_loop() const;
};

// Position in mm; the virtual floor is the plane z = 0 and z points up.
struct ProbeSample {
  double t_s = 0.0;
  std::array<double, 3> position_mm{};
};

struct FeedbackForce {
  std::array<double, 3> force_n{};  // lateral components are zero
  double normal_n = 0.0;
};

// Hooke wall: below the floor the normal force is stiffness * depth, clamped
// to the device limit; above it there is no force.
FeedbackForce compute_feedback_force(const std::array<double, 3>& position_mm,
                                     const RenderConfig& config);

// Planar finite difference (x, y) / dt between two probe samples.
std::array<double, 2> derive_velocity(const ProbeSample& prev, const ProbeSample& curr);

// Per-axis first-order low-pass, bilinear transform with the cutoff prewarped
// so the -3 dB point is exact for any step size:
//   K = tan(pi fc dt),  y[n] = b0 (x[n] + x[n-1]) - a1 y[n-1],
//   b0 = K / (1 + K),   a1 = (K - 1) / (K + 1).
class VelocityFilter {
 public:
  explicit VelocityFilter(double cutoff_hz);
  std::array<double, 2> filter(const std::array<double, 2>& raw, double dt_s);
  void reset();

 private:
  double cutoff_hz_;
  std::array<double, 2> x_prev_{};
  std::array<double, 2> y_prev_{};
};

std::array<double, 2> filter_velocity(VelocityFilter& state, const std::array<double, 2>& raw,
                                      double dt_s);

// Rational filter b(z) / a(z) in direct form II transposed. Construction
// rejects denominators with a root on or outside the unit circle.
class ActuatorCompensator {
 public:
  ActuatorCompensator();  // identity
  ActuatorCompensator(std::vector<double> numerator, std::vector<double> denominator);

  static ActuatorCompensator identity() { return {}; }
  // Both coefficient lists, "b0,b1,...;a0,a1,...".
  static ActuatorCompensator parse(std::string_view text);

  double process(double sample);
  void reset();
  bool is_identity() const;

  const std::vector<double>& numerator() const { return b_; }
  const std::vector<double>& denominator() const { return a_; }

 private:
  std::vector<double> b_;
  std::vector<double> a_;
  std::vector<double> state_;
};

double compensate_actuator(ActuatorCompensator& compensator, double sample);

// Schur-Cohn test: true when every root of a[0] z^n + ... + a[n] lies strictly
// inside the unit circle.
bool is_stable_denominator(std::span<const double> denominator);

struct TimingSummary {
  std::size_t loops = 0;
  double median_s = 0.0;
  double p95_s = 0.0;
  double p99_s = 0.0;
  double max_s = 0.0;
  double mean_s = 0.0;
};

TimingSummary summarize_timing(std::span<const double> durations_s);

// Keeps the most recent `capacity` loop durations.
class TimingStats {
 public:
  explicit TimingStats(std::size_t capacity = std::size_t{1} << 20);
  void record(double seconds);
  std::vector<double> durations() const;  // oldest first
  TimingSummary summary() const { return summarize_timing(durations()); }
  std::uint64_t total() const { return total_; }

 private:
  std::vector<double> ring_;
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::uint64_t total_ = 0;
};

struct StepInfo {
  double normal_force_n = 0.0;
  std::array<double, 2> velocity_mm_s{};  // filtered
  double speed_mm_s = 0.0;
  bool gated = false;
  double duration_s = 0.0;
};

// Streaming state for one rendering stream. Not thread-safe; one thread drives
// a session at a time. Sessions share only the immutable weights.
class RenderSession {
 public:
  RenderSession(const RenderConfig& config, std::shared_ptr<const WeightSet> weights,
                TextureEmbedding texture,
                ActuatorCompensator compensator = ActuatorCompensator::identity());

  // One loop from a probe sample; the velocity is the finite difference from
  // the previous sample (zero on the first call). Writes samples_per_loop()
  // samples.
  StepInfo render_step(const ProbeSample& probe, std::span<double> out);

  // One loop from an already known raw planar velocity.
  StepInfo step(const std::array<double, 3>& position_mm,
                const std::array<double, 2>& raw_velocity_mm_s, double dt_s,
                std::span<double> out);

  const RenderConfig& config() const { return config_; }
  const TextureEmbedding& texture() const { return texture_; }
  int samples_per_loop() const { return geometry_.hop; }
  const TimingStats& timing() const { return timing_; }
  std::uint64_t loops() const { return loops_; }

 private:
  RenderConfig config_;
  FrameGeometry geometry_;
  TextureEmbedding texture_;
  Predictor predictor_;
  ActionWindow window_;
  VelocityFilter filter_;
  SpsiState spsi_;
  OverlapAddSynthesizer ola_;
  ActuatorCompensator compensator_;
  TimingStats timing_;
  std::vector<double> model_bins_;
  std::vector<double> magnitudes_;
  std::vector<Complex> spectrum_;
  std::optional<ProbeSample> last_probe_;
  std::uint64_t loops_ = 0;
};

// Linear interpolation of a trajectory at t0 + i / loop_rate for
// i < floor(duration * loop_rate), so a trajectory lasting D seconds yields
// D * loop_rate loops.
std::vector<ProbeSample> resample_trajectory(std::span<const ProbeSample> samples,
                                             double loop_rate_hz);

// Per-loop model inputs for resampled probe samples, computed with the same
// force law and velocity filter as RenderSession.
struct ActionTrace {
  std::vector<double> t_s;
  std::vector<double> normal_force_n;
  std::vector<std::array<double, 2>> velocity_mm_s;  // filtered
};

ActionTrace compute_action_trace(std::span<const ProbeSample> loop_samples,
                                 const RenderConfig& config);

struct TrajectoryResult {
  std::vector<double> waveform;  // m/s^2 at synthesis rate
  std::vector<double> normal_force_n;
  std::vector<double> speed_mm_s;
  std::vector<double> loop_durations_s;
  TimingSummary timing;
};

TrajectoryResult run_trajectory(const RenderConfig& config, const TextureEmbedding& texture,
                                std::shared_ptr<const WeightSet> weights,
                                std::span<const ProbeSample> trajectory,
                                const ActuatorCompensator& compensator =
                                    ActuatorCompensator::identity());

}  // namespace vtex
