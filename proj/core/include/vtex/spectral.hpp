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

// Short-time Fourier utilities shared by training, synthesis and tests.
//
// Conventions used everywhere in vtex:
//   * Windows are periodic (DFT-even) Hann: w[n] = 0.5 (1 - cos(2 pi n / N)).
//   * Forward DFT is unnormalized, X[k] = sum_n x[n] exp(-2 pi i k n / N).
//   * Inverse DFT carries the 1/N factor, so inverse(forward(x)) == x.
//   * Only the non-negative bins 0..N/2 are stored for real signals.
//   * Analysis frame k covers samples [k * hop, k * hop + N) and its phase is
//     referenced to the first sample of that span.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vtex {

using Complex = std::complex<double>;

// Every frame spans 0.1 s, so bins are 10 Hz apart at any sample rate.
inline constexpr double kFrameSeconds = 0.1;
inline constexpr double kBinSpacingHz = 10.0;
// The model predicts bins 0..99 (0 to 990 Hz).
inline constexpr int kModelBins = 100;

struct FrameGeometry {
  double sample_rate_hz = 0.0;
  int frame_len = 0;
  int hop = 0;

  // frame_len = 0.1 * sample_rate (must be integral); hop = sample_rate /
  // loop_rate (must be integral and no larger than frame_len).
  static FrameGeometry make(double sample_rate_hz, double loop_rate_hz);
  // Direct construction for analysis setups that do not derive from a loop.
  static FrameGeometry with_hop(double sample_rate_hz, int hop);

  int num_bins() const { return frame_len / 2 + 1; }
  double bin_spacing_hz() const { return sample_rate_hz / frame_len; }
};

// One predicted 0.1 s magnitude spectrum, bin k at k * 10 Hz.
struct MagnitudeFrame {
  std::array<double, kModelBins> bins{};
  double timestamp_s = 0.0;
};

// A stream of magnitude frames in some geometry's bin layout. Frames may carry
// fewer bins than the geometry (the missing bins are not compared).
using MagnitudeFrames = std::vector<std::vector<double>>;

std::vector<double> make_hann_window(int len);

// Mixed-radix complex FFT with a precomputed plan. The plan is immutable and
// safe to share; scratch lives in the caller-provided buffers.
class Fft {
 public:
  explicit Fft(int n);

  int size() const { return n_; }

  // out[k] = sum_n in[n] exp(-2 pi i k n / N). in and out must not alias.
  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  // out[n] = 1/N sum_k in[k] exp(+2 pi i k n / N). in and out must not alias.
  void inverse(std::span<const Complex> in, std::span<Complex> out) const;

 private:
  void transform(const Complex* in, Complex* out, std::size_t fstride,
                 std::size_t factor_index, bool inverse) const;
  void butterfly(Complex* out, std::size_t fstride, std::size_t m,
                 std::size_t p, bool inverse) const;

  int n_;
  std::vector<std::size_t> factors_;  // (radix, remaining length) pairs
  std::vector<Complex> twiddles_;     // exp(-2 pi i k / N)
};

// Real-signal transforms over one frame length, with owned scratch. Not safe
// for concurrent use of the same instance.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return fft_.size(); }
  int num_bins() const { return fft_.size() / 2 + 1; }

  // Writes the N/2 + 1 non-negative bins of the DFT of `in`.
  void forward(std::span<const double> in, std::span<Complex> out);
  // Hermitian-extends `in` (N/2 + 1 bins) and writes the real inverse DFT.
  // The imaginary parts of the DC and (even N) Nyquist bins are ignored.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  Fft fft_;
  std::vector<Complex> a_;
  std::vector<Complex> b_;
};

// |DFT(frame .* window)| over bins 0..N/2.
std::vector<double> windowed_magnitude_dft(std::span<const double> frame,
                                           std::span<const double> window);

// Real inverse DFT of a half spectrum with geometry.num_bins() bins.
std::vector<double> inverse_frame(std::span<const Complex> spectrum,
                                  const FrameGeometry& geometry);

// Hann-windowed magnitudes for every full frame of `signal`.
MagnitudeFrames stft_magnitudes(std::span<const double> signal,
                                const FrameGeometry& geometry);

// Normalized L2 distance between `frames` and the Hann STFT magnitudes of
// `signal`, over the bins both have:
//
//   sqrt( sum_k sum_b c_b (|S_k[b]| - M_k[b])^2 / sum_k sum_b c_b M_k[b]^2 )
//
// where c_b is the bin's multiplicity in the full (two-sided) spectrum: 1 for
// DC and an even-length Nyquist bin, 2 otherwise. The weighting makes the
// metric the full-spectrum distance that Griffin-Lim iterations decrease. When
// the input frames carry no energy the unnormalized distance is returned, so
// a zero reference against a zero signal scores 0.
double spectral_consistency_error(const MagnitudeFrames& frames,
                                  std::span<const double> signal,
                                  const FrameGeometry& geometry);
double spectral_consistency_error(std::span<const MagnitudeFrame> frames,
                                  std::span<const double> signal,
                                  const FrameGeometry& geometry);

}  // namespace vtex
