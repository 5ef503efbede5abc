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

#include "vtex/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vtex/error.hpp"
#include "vtex/random.hpp"

namespace vtex {
namespace {

constexpr double kPi = std::numbers::pi;

void collect_peaks(std::span<const double> mag, std::vector<int>& peaks) {
  peaks.clear();
  const int n = static_cast<int>(mag.size());
  for (int m = 1; m + 1 < n; ++m) {
    if (mag[m] > mag[m - 1] && mag[m] >= mag[m + 1]) peaks.push_back(m);
  }
}

void validate_magnitudes(std::span<const double> mag, int expected_bins) {
  require(static_cast<int>(mag.size()) == expected_bins,
          "magnitude frame has " + std::to_string(mag.size()) +
              " bins, expected " + std::to_string(expected_bins));
  for (std::size_t k = 0; k < mag.size(); ++k) {
    if (!(mag[k] >= 0.0) || !std::isfinite(mag[k])) {
      fail(ErrorCode::kInvalidArgument,
           "magnitude bin " + std::to_string(k) + " is negative or not finite");
    }
  }
}

// Scratch kept per thread so the streaming step does not allocate once warm.
struct StepScratch {
  std::vector<int> peaks;
  std::vector<double> peak_phase;
};

StepScratch& scratch() {
  thread_local StepScratch s;
  return s;
}

}  // namespace

SpsiState::SpsiState(const FrameGeometry& g)
    : prev_phase(static_cast<std::size_t>(g.num_bins()), 0.0), geometry(g) {}

SpsiState::SpsiState(const FrameGeometry& g, std::uint64_t seed)
    : prev_phase(static_cast<std::size_t>(g.num_bins())), geometry(g) {
  Rng rng(seed);
  for (auto& p : prev_phase) p = wrap_phase(2.0 * kPi * rng.uniform() - kPi);
}

double wrap_phase(double radians) {
  double r = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

std::vector<int> find_peaks(std::span<const double> magnitude) {
  require(magnitude.size() >= 3, "peak picking needs at least 3 bins");
  std::vector<int> peaks;
  collect_peaks(magnitude, peaks);
  return peaks;
}

double interpolate_peak_offset(std::span<const double> magnitude, int m) {
  require(m >= 1 && m + 1 < static_cast<int>(magnitude.size()),
          "peak interpolation needs an interior bin");
  const double left = magnitude[m - 1];
  const double centre = magnitude[m];
  const double right = magnitude[m + 1];
  const double denom = left - 2.0 * centre + right;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

void spsi_step(SpsiState& state, std::span<const double> magnitude,
               std::span<Complex> out) {
  const int bins = state.geometry.num_bins();
  validate_magnitudes(magnitude, bins);
  require(static_cast<int>(out.size()) == bins, "output spectrum size mismatch");
  require(static_cast<int>(state.prev_phase.size()) == bins,
          "phase state does not match geometry");

  auto& s = scratch();
  collect_peaks(magnitude, s.peaks);
  if (!s.peaks.empty()) {
    // Advance each peak linearly in time at its interpolated frequency.
    const double advance = 2.0 * kPi * state.geometry.hop /
                           static_cast<double>(state.geometry.frame_len);
    s.peak_phase.resize(s.peaks.size());
    for (std::size_t i = 0; i < s.peaks.size(); ++i) {
      const int m = s.peaks[i];
      const double bin = m + interpolate_peak_offset(magnitude, m);
      s.peak_phase[i] = wrap_phase(state.prev_phase[m] + advance * bin);
    }
    // Identity phase locking: each bin takes the phase of the peak whose
    // region it lies in. Regions split at the lowest bin between neighbouring
    // peaks; the dividing bin itself goes to the lower peak.
    int begin = 0;
    for (std::size_t i = 0; i < s.peaks.size(); ++i) {
      int end = bins;  // exclusive
      if (i + 1 < s.peaks.size()) {
        const int lo = s.peaks[i];
        const int hi = s.peaks[i + 1];
        int trough = lo + 1;
        for (int b = lo + 2; b < hi; ++b) {
          if (magnitude[b] < magnitude[trough]) trough = b;
        }
        end = trough + 1;
      }
      for (int b = begin; b < end; ++b) state.prev_phase[b] = s.peak_phase[i];
      begin = end;
    }
  }
  ++state.frame_index;

  for (int k = 0; k < bins; ++k) {
    const Complex v = std::polar(magnitude[k], state.prev_phase[k]);
    out[k] = (k % 2 == 0) ? v : -v;
  }
}

std::vector<Complex> spsi_step(SpsiState& state,
                               std::span<const double> magnitude) {
  std::vector<Complex> out(static_cast<std::size_t>(state.geometry.num_bins()));
  spsi_step(state, magnitude, out);
  return out;
}

// ---------------------------------------------------------------------------

OverlapAddSynthesizer::OverlapAddSynthesizer(const FrameGeometry& geometry,
                                             double startup_floor)
    : geometry_(geometry),
      window_(make_hann_window(geometry.frame_len)),
      accumulator_(static_cast<std::size_t>(geometry.frame_len), 0.0),
      frame_(static_cast<std::size_t>(geometry.frame_len), 0.0),
      fft_(geometry.frame_len) {
  require(startup_floor >= 0.0 && startup_floor <= 1.0,
          "startup floor must be in [0, 1]");
  const int n = geometry.frame_len;
  const int hop = geometry.hop;
  ramp_frames_ = (n + hop - 1) / hop;
  denominators_.assign(static_cast<std::size_t>(ramp_frames_) * hop, 0.0);
  for (int r = 0; r < ramp_frames_; ++r) {
    for (int j = 0; j < hop; ++j) {
      double sum = 0.0;
      for (int d = 0; d <= r; ++d) {
        const int idx = d * hop + j;
        if (idx < n) sum += window_[idx] * window_[idx];
      }
      denominators_[static_cast<std::size_t>(r) * hop + j] = sum;
    }
  }
  const std::size_t steady = static_cast<std::size_t>(ramp_frames_ - 1) * hop;
  for (int r = 0; r + 1 < ramp_frames_; ++r) {
    for (int j = 0; j < hop; ++j) {
      double& d = denominators_[static_cast<std::size_t>(r) * hop + j];
      d = std::max(d, startup_floor * denominators_[steady + j]);
    }
  }
}

void OverlapAddSynthesizer::push(std::span<const Complex> spectrum,
                                 std::span<double> out) {
  const int n = geometry_.frame_len;
  const int hop = geometry_.hop;
  require(static_cast<int>(out.size()) == hop, "output must hold hop samples");
  fft_.inverse(spectrum, frame_);
  for (int i = 0; i < n; ++i) accumulator_[i] += window_[i] * frame_[i];

  const std::uint64_t row =
      std::min<std::uint64_t>(frames_, static_cast<std::uint64_t>(ramp_frames_ - 1));
  const double* den = denominators_.data() + row * hop;
  for (int j = 0; j < hop; ++j) {
    out[j] = den[j] > 0.0 ? accumulator_[j] / den[j] : 0.0;
  }
  std::copy(accumulator_.begin() + hop, accumulator_.end(), accumulator_.begin());
  std::fill(accumulator_.end() - hop, accumulator_.end(), 0.0);
  ++frames_;
}

std::vector<double> synthesize_stream(const MagnitudeFrames& frames,
                                      const FrameGeometry& geometry) {
  SpsiState state(geometry);
  OverlapAddSynthesizer ola(geometry);
  std::vector<Complex> spectrum(static_cast<std::size_t>(geometry.num_bins()));
  std::vector<double> signal(frames.size() * static_cast<std::size_t>(geometry.hop));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    spsi_step(state, frames[k], spectrum);
    ola.push(spectrum, std::span<double>(signal).subspan(k * geometry.hop, geometry.hop));
  }
  return signal;
}

// ---------------------------------------------------------------------------

GriffinLimResult griffin_lim(const MagnitudeFrames& frames,
                             const FrameGeometry& geometry,
                             const GriffinLimOptions& options) {
  require(!frames.empty(), "empty frame stream");
  require(options.iterations >= 1, "iterations must be at least 1");
  const int n = geometry.frame_len;
  const int hop = geometry.hop;
  const int bins = geometry.num_bins();
  for (const auto& f : frames) validate_magnitudes(f, bins);

  const std::size_t count = frames.size();
  const std::size_t length = (count - 1) * hop + n;
  const auto window = make_hann_window(n);

  std::vector<double> denom(length, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    for (int i = 0; i < n; ++i) denom[k * hop + i] += window[i] * window[i];
  }

  std::vector<std::vector<Complex>> spectra(count, std::vector<Complex>(bins));
  std::optional<Rng> rng;
  if (options.seed) rng.emplace(*options.seed);
  for (std::size_t k = 0; k < count; ++k) {
    for (int b = 0; b < bins; ++b) {
      const double phase = rng ? 2.0 * kPi * rng->uniform() : 0.0;
      spectra[k][b] = std::polar(frames[k][b], phase);
    }
  }

  RealFft fft(n);
  std::vector<double> frame(static_cast<std::size_t>(n));
  std::vector<Complex> spectrum(static_cast<std::size_t>(bins));
  const int nyquist = (n % 2 == 0) ? n / 2 : -1;
  double reference = 0.0;
  for (const auto& f : frames) {
    for (int b = 0; b < bins; ++b) {
      reference += ((b == 0 || b == nyquist) ? 1.0 : 2.0) * f[b] * f[b];
    }
  }

  GriffinLimResult result;
  result.signal.assign(length, 0.0);
  result.errors.reserve(static_cast<std::size_t>(options.iterations));
  for (int it = 0; it < options.iterations; ++it) {
    // Least-squares signal for the current spectra.
    std::fill(result.signal.begin(), result.signal.end(), 0.0);
    for (std::size_t k = 0; k < count; ++k) {
      fft.inverse(spectra[k], frame);
      for (int i = 0; i < n; ++i) {
        result.signal[k * hop + i] += window[i] * frame[i];
      }
    }
    for (std::size_t i = 0; i < length; ++i) {
      result.signal[i] = denom[i] > 1e-12 ? result.signal[i] / denom[i] : 0.0;
    }
    // Re-analyse and impose the target magnitudes.
    double num = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      for (int i = 0; i < n; ++i) frame[i] = window[i] * result.signal[k * hop + i];
      fft.forward(frame, spectrum);
      for (int b = 0; b < bins; ++b) {
        const double mag = std::abs(spectrum[b]);
        const double diff = mag - frames[k][b];
        num += ((b == 0 || b == nyquist) ? 1.0 : 2.0) * diff * diff;
        spectra[k][b] = mag > 0.0 ? spectrum[b] * (frames[k][b] / mag)
                                  : Complex(frames[k][b], 0.0);
      }
    }
    result.errors.push_back(reference > 0.0 ? std::sqrt(num / reference)
                                            : std::sqrt(num));
  }
  return result;
}

}  // namespace vtex
