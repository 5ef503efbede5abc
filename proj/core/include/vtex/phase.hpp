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

// Causal phase retrieval for streams of STFT magnitudes (single pass
// spectrogram inversion), weighted overlap-add synthesis, and an offline
// Griffin-Lim reconstruction used as a quality reference in tests.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vtex/spectral.hpp"

namespace vtex {

// Phase memory for one stream.
//
// Stored phases are referenced to the centre sample (N/2) of each analysis
// frame. In that reference the main lobe of a Hann-windowed partial is in
// phase across its bins, which is what identity phase locking assumes. The
// spectra handed to the inverse DFT are rotated back to the frame-start
// reference by exp(i pi k).
struct SpsiState {
  std::vector<double> prev_phase;  // wrapped to (-pi, pi], one per bin
  FrameGeometry geometry;
  std::uint64_t frame_index = 0;

  explicit SpsiState(const FrameGeometry& geometry);
  // Uniform random initial phases instead of zeros.
  SpsiState(const FrameGeometry& geometry, std::uint64_t seed);
};

// Interior local maxima: mag[m] > mag[m-1] && mag[m] >= mag[m+1]. A plateau
// reports its leftmost sample (if the plateau rises on its left).
std::vector<int> find_peaks(std::span<const double> magnitude);

// Fractional offset in (-0.5, 0.5) of the true peak from bin m, from a
// parabola through the three magnitudes around m.
double interpolate_peak_offset(std::span<const double> magnitude, int m);

// Wraps an angle into (-pi, pi].
double wrap_phase(double radians);

// Advances the state by one frame and returns the frame-start-referenced
// spectrum magnitude[k] * exp(i phase[k]).
std::vector<Complex> spsi_step(SpsiState& state,
                               std::span<const double> magnitude);
// Allocation-free variant; `out` must hold num_bins values.
void spsi_step(SpsiState& state, std::span<const double> magnitude,
               std::span<Complex> out);

// Streaming weighted overlap-add. Each pushed spectrum is inverted, windowed
// with the analysis Hann, and accumulated at offset frame_index * hop; the hop
// samples that just became final are emitted.
//
// Normalization divides by the precomputed sum of squared windows over the
// frames pushed so far. During the first frame_len samples that sum is still
// ramping up; it is floored at `startup_floor` times its steady-state value so
// inconsistent early frames cannot be amplified without bound.
class OverlapAddSynthesizer {
 public:
  explicit OverlapAddSynthesizer(const FrameGeometry& geometry,
                                 double startup_floor = 0.05);

  // Writes geometry.hop samples to `out`.
  void push(std::span<const Complex> spectrum, std::span<double> out);

  const FrameGeometry& geometry() const { return geometry_; }
  std::uint64_t frames_pushed() const { return frames_; }

 private:
  FrameGeometry geometry_;
  std::vector<double> window_;
  std::vector<double> accumulator_;  // frame_len samples, starting at the next output
  std::vector<double> frame_;
  // denominators_[r * hop + j]: sample j of the hop emitted after frame r,
  // for r < ramp_frames_; the last row is the steady state.
  std::vector<double> denominators_;
  int ramp_frames_ = 0;
  std::uint64_t frames_ = 0;
  RealFft fft_;
};

// Batch form of the streaming path: spsi_step -> inverse -> window -> overlap-add
// for every frame, emitting hop samples per frame (frames.size() * hop total).
// Each frame must have geometry.num_bins() values.
std::vector<double> synthesize_stream(const MagnitudeFrames& frames,
                                      const FrameGeometry& geometry);

struct GriffinLimOptions {
  int iterations = 100;
  // Random initial phase when set; zeros otherwise.
  std::optional<std::uint64_t> seed;
};

struct GriffinLimResult {
  std::vector<double> signal;  // (frames - 1) * hop + frame_len samples
  // spectral_consistency_error after each iteration.
  std::vector<double> errors;
};

// Offline iterative reconstruction; every frame's estimate depends on all
// other frames. Not usable in a causal stream.
GriffinLimResult griffin_lim(const MagnitudeFrames& frames,
                             const FrameGeometry& geometry,
                             const GriffinLimOptions& options);

}  // namespace vtex
