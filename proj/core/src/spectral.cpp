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

#include "vtex/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vtex/error.hpp"

namespace vtex {

FrameGeometry FrameGeometry::make(double sample_rate_hz, double loop_rate_hz) {
  require(std::isfinite(loop_rate_hz) && loop_rate_hz > 0.0,
          "loop rate must be positive");
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0,
          "sample rate must be positive");
  const double ratio = sample_rate_hz / loop_rate_hz;
  const double hop = std::round(ratio);
  require(hop >= 1.0 && std::abs(ratio - hop) < 1e-9 * ratio,
          "sample rate must be an integer multiple of the loop rate");
  return with_hop(sample_rate_hz, static_cast<int>(hop));
}

FrameGeometry FrameGeometry::with_hop(double sample_rate_hz, int hop) {
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0,
          "sample rate must be positive");
  const double exact = kFrameSeconds * sample_rate_hz;
  const double len = std::round(exact);
  require(std::abs(exact - len) < 1e-6,
          "sample rate must give an integral 0.1 s frame (multiple of 10 Hz)");
  require(len >= 4.0, "sample rate too low: frame shorter than 4 samples");
  FrameGeometry g;
  g.sample_rate_hz = sample_rate_hz;
  g.frame_len = static_cast<int>(len);
  g.hop = hop;
  require(hop >= 1 && hop <= g.frame_len, "hop must be in [1, frame_len]");
  return g;
}

std::vector<double> make_hann_window(int len) {
  require(len >= 2, "window length must be at least 2");
  std::vector<double> w(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / len));
  }
  // Exact zero at the start; exact one at the centre for even lengths.
  w[0] = 0.0;
  if (len % 2 == 0) w[len / 2] = 1.0;
  return w;
}

// ---------------------------------------------------------------------------
// Fft

Fft::Fft(int n) : n_(n) {
  require(n >= 1, "FFT size must be positive");
  std::size_t remaining = static_cast<std::size_t>(n);
  std::size_t p = 4;
  if (remaining == 1) {
    factors_ = {1, 1};
  }
  while (remaining > 1) {
    while (remaining % p != 0) {
      if (p == 4) {
        p = 2;
      } else if (p == 2) {
        p = 3;
      } else {
        p += 2;
      }
      if (p * p > remaining) p = remaining;
    }
    remaining /= p;
    factors_.push_back(p);
    factors_.push_back(remaining);
  }
  twiddles_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double phase = -2.0 * std::numbers::pi * k / n;
    twiddles_[k] = Complex(std::cos(phase), std::sin(phase));
  }
}

void Fft::forward(std::span<const Complex> in, std::span<Complex> out) const {
  require(static_cast<int>(in.size()) == n_ && static_cast<int>(out.size()) == n_,
          "FFT buffer size mismatch");
  transform(in.data(), out.data(), 1, 0, false);
}

void Fft::inverse(std::span<const Complex> in, std::span<Complex> out) const {
  require(static_cast<int>(in.size()) == n_ && static_cast<int>(out.size()) == n_,
          "FFT buffer size mismatch");
  transform(in.data(), out.data(), 1, 0, true);
  const double scale = 1.0 / n_;
  for (auto& v : out) v *= scale;
}

void Fft::transform(const Complex* in, Complex* out, std::size_t fstride,
                    std::size_t factor_index, bool inverse) const {
  const std::size_t p = factors_[factor_index];
  const std::size_t m = factors_[factor_index + 1];
  if (m == 1) {
    for (std::size_t i = 0; i < p; ++i) out[i] = in[i * fstride];
  } else {
    for (std::size_t q = 0; q < p; ++q) {
      transform(in + q * fstride, out + q * m, fstride * p, factor_index + 2,
                inverse);
    }
  }
  butterfly(out, fstride, m, p, inverse);
}

void Fft::butterfly(Complex* out, std::size_t fstride, std::size_t m,
                    std::size_t p, bool inverse) const {
  if (p == 1) return;
  const std::size_t n = static_cast<std::size_t>(n_);
  auto twiddle = [&](std::size_t idx) {
    return inverse ? std::conj(twiddles_[idx]) : twiddles_[idx];
  };
  if (p == 2) {
    for (std::size_t u = 0; u < m; ++u) {
      const Complex t = out[u + m] * twiddle(u * fstride);
      out[u + m] = out[u] - t;
      out[u] += t;
    }
    return;
  }
  constexpr std::size_t kSmall = 16;
  Complex small[kSmall];
  std::vector<Complex> large;
  Complex* scratch = small;
  if (p > kSmall) {
    large.resize(p);
    scratch = large.data();
  }
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0, k = u; q < p; ++q, k += m) scratch[q] = out[k];
    for (std::size_t q1 = 0, k = u; q1 < p; ++q1, k += m) {
      std::size_t twidx = 0;
      Complex acc = scratch[0];
      for (std::size_t q = 1; q < p; ++q) {
        twidx += fstride * k;
        if (twidx >= n) twidx -= n;
        acc += scratch[q] * twiddle(twidx);
      }
      out[k] = acc;
    }
  }
}

// ---------------------------------------------------------------------------
// RealFft

RealFft::RealFft(int n)
    : fft_(n), a_(static_cast<std::size_t>(n)), b_(static_cast<std::size_t>(n)) {}

void RealFft::forward(std::span<const double> in, std::span<Complex> out) {
  const int n = size();
  require(static_cast<int>(in.size()) == n, "real FFT input length mismatch");
  require(static_cast<int>(out.size()) == num_bins(),
          "real FFT output must hold N/2 + 1 bins");
  for (int i = 0; i < n; ++i) a_[i] = Complex(in[i], 0.0);
  fft_.forward(a_, b_);
  for (int k = 0; k < num_bins(); ++k) out[k] = b_[k];
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) {
  const int n = size();
  require(static_cast<int>(in.size()) == num_bins(),
          "inverse real FFT expects N/2 + 1 bins");
  require(static_cast<int>(out.size()) == n, "inverse real FFT output length");
  a_[0] = Complex(in[0].real(), 0.0);
  for (int k = 1; k <= (n - 1) / 2; ++k) {
    a_[k] = in[k];
    a_[n - k] = std::conj(in[k]);
  }
  if (n % 2 == 0 && n > 1) a_[n / 2] = Complex(in[n / 2].real(), 0.0);
  fft_.inverse(a_, b_);
  for (int i = 0; i < n; ++i) out[i] = b_[i].real();
}

// ---------------------------------------------------------------------------

std::vector<double> windowed_magnitude_dft(std::span<const double> frame,
                                           std::span<const double> window) {
  require(frame.size() == window.size(),
          "frame and window lengths differ (" + std::to_string(frame.size()) +
              " vs " + std::to_string(window.size()) + ")");
  require(!frame.empty(), "empty frame");
  const int n = static_cast<int>(frame.size());
  std::vector<double> windowed(frame.size());
  for (int i = 0; i < n; ++i) windowed[i] = frame[i] * window[i];
  RealFft fft(n);
  std::vector<Complex> spectrum(static_cast<std::size_t>(fft.num_bins()));
  fft.forward(windowed, spectrum);
  std::vector<double> mags(spectrum.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k) mags[k] = std::abs(spectrum[k]);
  return mags;
}

std::vector<double> inverse_frame(std::span<const Complex> spectrum,
                                  const FrameGeometry& geometry) {
  require(static_cast<int>(spectrum.size()) == geometry.num_bins(),
          "spectrum has " + std::to_string(spectrum.size()) + " bins, expected " +
              std::to_string(geometry.num_bins()));
  RealFft fft(geometry.frame_len);
  std::vector<double> out(static_cast<std::size_t>(geometry.frame_len));
  fft.inverse(spectrum, out);
  return out;
}

MagnitudeFrames stft_magnitudes(std::span<const double> signal,
                                const FrameGeometry& geometry) {
  const int n = geometry.frame_len;
  MagnitudeFrames frames;
  if (static_cast<int>(signal.size()) < n) return frames;
  const std::size_t count = (signal.size() - n) / geometry.hop + 1;
  const auto window = make_hann_window(n);
  RealFft fft(n);
  std::vector<double> windowed(static_cast<std::size_t>(n));
  std::vector<Complex> spectrum(static_cast<std::size_t>(fft.num_bins()));
  frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double* start = signal.data() + k * geometry.hop;
    for (int i = 0; i < n; ++i) windowed[i] = start[i] * window[i];
    fft.forward(windowed, spectrum);
    std::vector<double> mags(spectrum.size());
    for (std::size_t b = 0; b < spectrum.size(); ++b) mags[b] = std::abs(spectrum[b]);
    frames.push_back(std::move(mags));
  }
  return frames;
}

double spectral_consistency_error(const MagnitudeFrames& frames,
                                  std::span<const double> signal,
                                  const FrameGeometry& geometry) {
  require(!frames.empty(), "empty frame stream");
  const int n = geometry.frame_len;
  const std::size_t needed =
      (frames.size() - 1) * static_cast<std::size_t>(geometry.hop) + n;
  require(signal.size() >= needed,
          "signal of " + std::to_string(signal.size()) +
              " samples does not cover " + std::to_string(frames.size()) +
              " frames (needs " + std::to_string(needed) + ")");
  const auto window = make_hann_window(n);
  RealFft fft(n);
  std::vector<double> windowed(static_cast<std::size_t>(n));
  std::vector<Complex> spectrum(static_cast<std::size_t>(fft.num_bins()));
  const int nyquist = (n % 2 == 0) ? n / 2 : -1;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& mags = frames[k];
    const double* start = signal.data() + k * geometry.hop;
    for (int i = 0; i < n; ++i) windowed[i] = start[i] * window[i];
    fft.forward(windowed, spectrum);
    const std::size_t shared = std::min(mags.size(), spectrum.size());
    for (std::size_t b = 0; b < shared; ++b) {
      const double weight =
          (b == 0 || static_cast<int>(b) == nyquist) ? 1.0 : 2.0;
      const double diff = std::abs(spectrum[b]) - mags[b];
      num += weight * diff * diff;
      den += weight * mags[b] * mags[b];
    }
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

double spectral_consistency_error(std::span<const MagnitudeFrame> frames,
                                  std::span<const double> signal,
                                  const FrameGeometry& geometry) {
  MagnitudeFrames converted;
  converted.reserve(frames.size());
  for (const auto& f : frames) {
    converted.emplace_back(f.bins.begin(), f.bins.end());
  }
  return spectral_consistency_error(converted, signal, geometry);
}

}  // namespace vtex
