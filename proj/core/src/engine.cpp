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

#include "vtex/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "text_util.hpp"
#include "vtex/error.hpp"

namespace vtex {

void RenderConfig::validate() const {
  require(loop_rate_hz > 0.0 && std::isfinite(loop_rate_hz), "loop rate must be positive");
  require(synthesis_rate_hz > 0.0 && std::isfinite(synthesis_rate_hz),
          "synthesis rate must be positive");
  require(stiffness_n_per_mm > 0.0, "stiffness must be positive");
  require(speed_threshold_mm_s > 0.0, "speed threshold must be positive");
  require(force_clamp_n > 0.0, "force clamp must be positive");
  require(velocity_lpf_cutoff_hz > 0.0 && velocity_lpf_cutoff_hz < loop_rate_hz / 2.0,
          "velocity cutoff must be positive and below half the loop rate");
  geometry();
}

FrameGeometry RenderConfig::geometry() const {
  return FrameGeometry::make(synthesis_rate_hz, loop_rate_hz);
}

int RenderConfig::samples_per_loop() const { return geometry().hop; }

FeedbackForce compute_feedback_force(const std::array<double, 3>& position_mm,
                                     const RenderConfig& config) {
  FeedbackForce f;
  const double z = position_mm[2];
  if (!(z < 0.0)) return f;
  const double normal = std::min(config.stiffness_n_per_mm * -z, config.force_clamp_n);
  f.force_n = {0.0, 0.0, normal};
  f.normal_n = normal;
  return f;
}

std::array<double, 2> derive_velocity(const ProbeSample& prev, const ProbeSample& curr) {
  const double dt = curr.t_s - prev.t_s;
  require(dt > 0.0, "probe timestamps must increase (dt = " + std::to_string(dt) + ")");
  return {(curr.position_mm[0] - prev.position_mm[0]) / dt,
          (curr.position_mm[1] - prev.position_mm[1]) / dt};
}

VelocityFilter::VelocityFilter(double cutoff_hz) : cutoff_hz_(cutoff_hz) {
  require(cutoff_hz > 0.0, "filter cutoff must be positive");
}

std::array<double, 2> VelocityFilter::filter(const std::array<double, 2>& raw, double dt_s) {
  require(dt_s > 0.0, "filter step must be positive");
  const double wc = std::numbers::pi * cutoff_hz_ * dt_s;
  require(wc < std::numbers::pi / 2.0, "filter cutoff must be below the Nyquist rate");
  const double k = std::tan(wc);
  const double b0 = k / (1.0 + k);
  const double a1 = (k - 1.0) / (k + 1.0);
  std::array<double, 2> y{};
  for (int i = 0; i < 2; ++i) {
    y[i] = b0 * (raw[i] + x_prev_[i]) - a1 * y_prev_[i];
    x_prev_[i] = raw[i];
    y_prev_[i] = y[i];
  }
  return y;
}

void VelocityFilter::reset() {
  x_prev_ = {};
  y_prev_ = {};
}

std::array<double, 2> filter_velocity(VelocityFilter& state, const std::array<double, 2>& raw,
                                      double dt_s) {
  return state.filter(raw, dt_s);
}

bool is_stable_denominator(std::span<const double> denominator) {
  std::vector<double> p(denominator.begin(), denominator.end());
  while (p.size() > 1 && p.back() == 0.0) p.pop_back();
  if (p.empty() || p[0] == 0.0) return false;
  for (double& c : p) c /= denominator[0];
  for (std::size_t m = p.size() - 1; m >= 1; --m) {
    const double k = p[m];
    if (!(std::abs(k) < 1.0)) return false;
    std::vector<double> next(m);
    for (std::size_t i = 0; i < m; ++i) next[i] = (p[i] - k * p[m - i]) / (1.0 - k * k);
    p = std::move(next);
  }
  return true;
}

ActuatorCompensator::ActuatorCompensator() : b_{1.0}, a_{1.0} {}

ActuatorCompensator::ActuatorCompensator(std::vector<double> numerator,
                                         std::vector<double> denominator)
    : b_(std::move(numerator)), a_(std::move(denominator)) {
  require(!b_.empty() && !a_.empty(), "compensator needs numerator and denominator");
  for (double c : b_) require(std::isfinite(c), "compensator coefficients must be finite");
  for (double c : a_) require(std::isfinite(c), "compensator coefficients must be finite");
  require(a_[0] != 0.0, "compensator a0 must be nonzero");
  require(is_stable_denominator(a_), "compensator denominator has a pole on or outside the unit circle");
  const double a0 = a_[0];
  for (double& c : b_) c /= a0;
  for (double& c : a_) c /= a0;
  const std::size_t order = std::max(b_.size(), a_.size());
  b_.resize(order, 0.0);
  a_.resize(order, 0.0);
  state_.assign(order - 1, 0.0);
}

ActuatorCompensator ActuatorCompensator::parse(std::string_view text) {
  const auto halves = detail::split(text, ';');
  if (halves.size() != 2) {
    fail(ErrorCode::kInvalidArgument, "compensator must look like 'b0,b1,...;a0,a1,...'");
  }
  auto coefficients = [](std::string_view list) {
    std::vector<double> out;
    for (auto item : detail::split(list, ',')) {
      const auto v = detail::parse_number<double>(detail::trim(item));
      if (!v) fail(ErrorCode::kInvalidArgument, "bad compensator coefficient '" + std::string(item) + "'");
      out.push_back(*v);
    }
    return out;
  };
  return {coefficients(halves[0]), coefficients(halves[1])};
}

double ActuatorCompensator::process(double x) {
  const double y = b_[0] * x + (state_.empty() ? 0.0 : state_[0]);
  const std::size_t n = state_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double carry = i + 1 < n ? state_[i + 1] : 0.0;
    state_[i] = b_[i + 1] * x - a_[i + 1] * y + carry;
  }
  return y;
}

void ActuatorCompensator::reset() { std::fill(state_.begin(), state_.end(), 0.0); }

bool ActuatorCompensator::is_identity() const {
  if (b_[0] != 1.0) return false;
  for (std::size_t i = 1; i < b_.size(); ++i) {
    if (b_[i] != 0.0 || a_[i] != 0.0) return false;
  }
  return true;
}

double compensate_actuator(ActuatorCompensator& compensator, double sample) {
  return compensator.process(sample);
}

TimingSummary summarize_timing(std::span<const double> durations_s) {
  TimingSummary s;
  s.loops = durations_s.size();
  if (durations_s.empty()) return s;
  std::vector<double> sorted(durations_s.begin(), durations_s.end());
  std::sort(sorted.begin(), sorted.end());
  // Nearest-rank percentiles.
  auto rank = [&](double q) {
    const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(r, 1, sorted.size()) - 1];
  };
  s.median_s = rank(0.5);
  s.p95_s = rank(0.95);
  s.p99_s = rank(0.99);
  s.max_s = sorted.back();
  double total = 0.0;
  for (double d : sorted) total += d;
  s.mean_s = total / static_cast<double>(sorted.size());
  return s;
}

TimingStats::TimingStats(std::size_t capacity) : capacity_(capacity) {
  require(capacity > 0, "timing capacity must be positive");
}

void TimingStats::record(double seconds) {
  if (ring_.size() < capacity_) {
    ring_.push_back(seconds);
  } else {
    ring_[next_] = seconds;
    next_ = (next_ + 1) % capacity_;
  }
  ++total_;
}

std::vector<double> TimingStats::durations() const {
  std::vector<double> out;
  out.reserve(ring_.size());
  for (std::size_t i = 0; i < ring_.size(); ++i) out.push_back(ring_[(next_ + i) % ring_.size()]);
  return out;
}

// ---------------------------------------------------------------------------

RenderSession::RenderSession(const RenderConfig& config, std::shared_ptr<const WeightSet> weights,
                             TextureEmbedding texture, ActuatorCompensator compensator)
    : config_((config.validate(), config)),
      geometry_(config.geometry()),
      texture_(std::move(texture)),
      predictor_(std::move(weights), texture_.vector),
      filter_(config.velocity_lpf_cutoff_hz),
      spsi_(geometry_),
      ola_(geometry_),
      compensator_(std::move(compensator)),
      timing_(std::size_t{1} << 18) {
  require(predictor_.weights().arch.window == kActionSteps,
          "render path needs a 10-step action window");
  model_bins_.assign(static_cast<std::size_t>(predictor_.weights().arch.bins()), 0.0);
  magnitudes_.assign(static_cast<std::size_t>(geometry_.num_bins()), 0.0);
  spectrum_.assign(static_cast<std::size_t>(geometry_.num_bins()), Complex{});
}

StepInfo RenderSession::render_step(const ProbeSample& probe, std::span<double> out) {
  std::array<double, 2> velocity{};
  double dt = 1.0 / config_.loop_rate_hz;
  if (last_probe_) {
    velocity = derive_velocity(*last_probe_, probe);
    dt = probe.t_s - last_probe_->t_s;
  }
  last_probe_ = probe;
  return step(probe.position_mm, velocity, dt, out);
}

StepInfo RenderSession::step(const std::array<double, 3>& position_mm,
                             const std::array<double, 2>& raw_velocity_mm_s, double dt_s,
                             std::span<double> out) {
  const auto start = std::chrono::steady_clock::now();
  require(static_cast<int>(out.size()) == geometry_.hop,
          "output span must hold " + std::to_string(geometry_.hop) + " samples");
  StepInfo info;
  info.normal_force_n = compute_feedback_force(position_mm, config_).normal_n;
  info.velocity_mm_s = filter_.filter(raw_velocity_mm_s, dt_s);
  info.speed_mm_s = std::hypot(info.velocity_mm_s[0], info.velocity_mm_s[1]);
  window_.push(info.normal_force_n, info.velocity_mm_s[0], info.velocity_mm_s[1]);

  predictor_.predict(window_, model_bins_);
  // Bins are 10 Hz apart in both layouts: keep what fits below Nyquist.
  const std::size_t shared = std::min(model_bins_.size(), magnitudes_.size());
  std::copy_n(model_bins_.begin(), shared, magnitudes_.begin());
  spsi_step(spsi_, magnitudes_, spectrum_);
  ola_.push(spectrum_, out);

  info.gated = info.speed_mm_s < config_.speed_threshold_mm_s;
  if (info.gated) std::fill(out.begin(), out.end(), 0.0);
  for (double& s : out) s = compensator_.process(s);

  ++loops_;
  info.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  timing_.record(info.duration_s);
  return info;
}

// ---------------------------------------------------------------------------

std::vector<ProbeSample> resample_trajectory(std::span<const ProbeSample> samples,
                                             double loop_rate_hz) {
  require(samples.size() >= 2, "trajectory needs at least 2 samples");
  require(loop_rate_hz > 0.0, "loop rate must be positive");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    require(samples[i].t_s > samples[i - 1].t_s, "trajectory timestamps must increase");
  }
  const double t0 = samples.front().t_s;
  const double duration = samples.back().t_s - t0;
  const auto loops = static_cast<std::size_t>(std::floor(duration * loop_rate_hz + 1e-9));
  require(loops >= 1, "trajectory is shorter than one loop period");
  std::vector<ProbeSample> out(loops);
  std::size_t j = 0;
  for (std::size_t i = 0; i < loops; ++i) {
    const double t = t0 + static_cast<double>(i) / loop_rate_hz;
    while (j + 2 < samples.size() && samples[j + 1].t_s <= t) ++j;
    const auto& a = samples[j];
    const auto& b = samples[j + 1];
    const double u = std::clamp((t - a.t_s) / (b.t_s - a.t_s), 0.0, 1.0);
    out[i].t_s = t;
    for (int k = 0; k < 3; ++k) {
      out[i].position_mm[k] = a.position_mm[k] + u * (b.position_mm[k] - a.position_mm[k]);
    }
  }
  return out;
}

ActionTrace compute_action_trace(std::span<const ProbeSample> loop_samples,
                                 const RenderConfig& config) {
  config.validate();
  ActionTrace trace;
  VelocityFilter filter(config.velocity_lpf_cutoff_hz);
  for (std::size_t i = 0; i < loop_samples.size(); ++i) {
    std::array<double, 2> raw{};
    double dt = 1.0 / config.loop_rate_hz;
    if (i > 0) {
      raw = derive_velocity(loop_samples[i - 1], loop_samples[i]);
      dt = loop_samples[i].t_s - loop_samples[i - 1].t_s;
    }
    trace.t_s.push_back(loop_samples[i].t_s);
    trace.normal_force_n.push_back(compute_feedback_force(loop_samples[i].position_mm, config).normal_n);
    trace.velocity_mm_s.push_back(filter.filter(raw, dt));
  }
  return trace;
}

TrajectoryResult run_trajectory(const RenderConfig& config, const TextureEmbedding& texture,
                                std::shared_ptr<const WeightSet> weights,
                                std::span<const ProbeSample> trajectory,
                                const ActuatorCompensator& compensator) {
  const auto loops = resample_trajectory(trajectory, config.loop_rate_hz);
  RenderSession session(config, std::move(weights), texture, compensator);
  const auto hop = static_cast<std::size_t>(session.samples_per_loop());
  TrajectoryResult result;
  result.waveform.resize(loops.size() * hop);
  result.normal_force_n.reserve(loops.size());
  result.speed_mm_s.reserve(loops.size());
  result.loop_durations_s.reserve(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const auto info =
        session.render_step(loops[i], std::span(result.waveform).subspan(i * hop, hop));
    result.normal_force_n.push_back(info.normal_force_n);
    result.speed_mm_s.push_back(info.speed_mm_s);
    result.loop_durations_s.push_back(info.duration_s);
  }
  result.timing = summarize_timing(result.loop_durations_s);
  return result;
}

}  // namespace vtex
