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

#include <cmath>
#include <numbers>

#include "criteria.hpp"
#include "vtex/error.hpp"
#include "vtex/phase.hpp"
#include "vtex/random.hpp"

namespace vtex {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(WrapPhase, MapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_phase(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_phase(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_phase(-kPi), kPi);
  EXPECT_NEAR(wrap_phase(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_phase(2.5 * kPi), 0.5 * kPi, 1e-12);
  EXPECT_NEAR(wrap_phase(-2.5 * kPi), -0.5 * kPi, 1e-12);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = 100.0 * (rng.uniform() - 0.5);
    const double w = wrap_phase(x);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(x - w, 2.0 * kPi), 0.0, 1e-9);
  }
}

TEST(FindPeaks, StrictLeftNonStrictRight) {
  const std::vector<double> mag = {0, 1, 0, 2, 2, 1, 3, 4, 4, 4, 0, 5};
  // 1 (bin 1), plateau 2,2 reports bin 3, plateau 4,4,4 reports bin 7; the
  // edge value at bin 11 is not interior.
  EXPECT_EQ(find_peaks(mag), (std::vector<int>{1, 3, 7}));
  EXPECT_TRUE(find_peaks(std::vector<double>(10, 1.0)).empty());
  EXPECT_THROW(find_peaks(std::vector<double>{1.0, 2.0}), Error);
}

TEST(PeakInterpolation, RecoversParabolaVertex) {
  // Samples of a parabola with vertex at 5.3.
  std::vector<double> mag(10);
  for (int i = 0; i < 10; ++i) mag[i] = 10.0 - (i - 5.3) * (i - 5.3);
  EXPECT_NEAR(interpolate_peak_offset(mag, 5), 0.3, 1e-12);
  const std::vector<double> flat = {1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(interpolate_peak_offset(flat, 1), 0.0);
}

TEST(Spsi, FirstFrameUsesZeroPhasesInCentreReference) {
  const auto g = FrameGeometry::with_hop(100.0, 2);  // 10 samples, 6 bins
  SpsiState state(g);
  const std::vector<double> mag = {1, 2, 3, 4, 5, 6};
  const auto spectrum = spsi_step(state, mag);
  // No interior peak: phases stay zero, and the output alternates sign.
  for (int k = 0; k < 6; ++k) {
    EXPECT_DOUBLE_EQ(spectrum[k].real(), (k % 2 == 0 ? 1.0 : -1.0) * mag[k]);
    EXPECT_DOUBLE_EQ(spectrum[k].imag(), 0.0);
  }
}

TEST(Spsi, PeakAdvancesByInterpolatedFrequencyTimesHop) {
  const auto g = FrameGeometry::with_hop(100.0, 3);  // N = 10, hop 3
  SpsiState state(g);
  const std::vector<double> mag = {0.0, 1.0, 4.0, 1.0, 0.0, 0.0};
  spsi_step(state, mag);
  // Symmetric peak at bin 2: phase advance 2 pi * 3 * 2 / 10.
  const double expected = wrap_phase(2.0 * kPi * 3.0 * 2.0 / 10.0);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(state.prev_phase[k], expected, 1e-12);
  spsi_step(state, mag);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(state.prev_phase[k], wrap_phase(2.0 * expected), 1e-12);
}

TEST(Spsi, RegionsSplitAtTroughBetweenPeaks) {
  const auto g = FrameGeometry::with_hop(200.0, 5);  // N = 20, 11 bins
  SpsiState state(g);
  const std::vector<double> mag = {0, 3, 1, 0.5, 0.2, 1, 4, 1, 0, 0, 0};
  spsi_step(state, mag);
  const double first = wrap_phase(2.0 * kPi * 5.0 / 20.0 *
                                  (1 + interpolate_peak_offset(mag, 1)));
  const double second = wrap_phase(2.0 * kPi * 5.0 / 20.0 *
                                   (6 + interpolate_peak_offset(mag, 6)));
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(state.prev_phase[k], first, 1e-12) << k;
  for (int k = 5; k < 11; ++k) EXPECT_NEAR(state.prev_phase[k], second, 1e-12) << k;
}

TEST(Spsi, RejectsBadFrames) {
  const auto g = FrameGeometry::with_hop(100.0, 2);
  SpsiState state(g);
  EXPECT_THROW(spsi_step(state, std::vector<double>(5, 1.0)), Error);
  EXPECT_THROW(spsi_step(state, std::vector<double>{1, 1, -1, 1, 1, 1}), Error);
  EXPECT_THROW(spsi_step(state, std::vector<double>{1, 1, NAN, 1, 1, 1}), Error);
}

TEST(OverlapAdd, ReconstructsTrueSpectraExactlyAfterStartup) {
  // Feeding the analysis spectra (with their true phases) must give back the
  // signal once the normalization is past its startup ramp.
  const auto g = FrameGeometry::with_hop(200.0, 5);
  Rng rng(4);
  std::vector<double> x(400);
  for (auto& v : x) v = rng.normal();
  RealFft fft(g.frame_len);
  OverlapAddSynthesizer ola(g, 0.0);
  std::vector<double> out(static_cast<std::size_t>(g.hop));
  std::vector<Complex> spectrum(static_cast<std::size_t>(g.num_bins()));
  const auto window = make_hann_window(g.frame_len);
  const int frames = (400 - g.frame_len) / g.hop + 1;
  std::vector<double> y;
  for (int k = 0; k < frames; ++k) {
    std::vector<double> frame(x.begin() + k * g.hop, x.begin() + k * g.hop + g.frame_len);
    for (int i = 0; i < g.frame_len; ++i) frame[i] *= window[i];
    fft.forward(frame, spectrum);
    ola.push(spectrum, out);
    y.insert(y.end(), out.begin(), out.end());
  }
  // Normalization by the partial window sum makes the ramp exact too, except
  // sample 0, which only the zero-valued first window tap covers.
  EXPECT_EQ(y[0], 0.0);
  for (std::size_t i = 1; i < y.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-10) << i;
}

TEST(OverlapAdd, StartupFloorBoundsEarlyGain) {
  const auto g = FrameGeometry::with_hop(200.0, 5);
  OverlapAddSynthesizer ola(g);
  std::vector<Complex> spectrum(static_cast<std::size_t>(g.num_bins()), Complex(1.0, 0.0));
  std::vector<double> out(static_cast<std::size_t>(g.hop));
  ola.push(spectrum, out);
  // The inverse of a flat spectrum is an impulse at 0 whose windowed value is
  // zero; nothing is amplified.
  for (double v : out) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(OverlapAddSynthesizer(g, 1.5), Error);
}

TEST(SynthesizeStream, PureToneReconstructionIsConsistent) {
  const auto g = FrameGeometry::make(1000.0, 500.0);
  std::vector<double> x(2000);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2.0 * kPi * 120.0 * n / 1000.0);
  auto frames = stft_magnitudes(x, g);
  const auto y = synthesize_stream(frames, g);
  EXPECT_EQ(y.size(), frames.size() * static_cast<std::size_t>(g.hop));
  frames.resize((y.size() - g.frame_len) / g.hop + 1);
  EXPECT_LT(spectral_consistency_error(frames, y, g), 0.05);
}

TEST(GriffinLim, ErrorsDoNotIncrease) {
  const auto g = FrameGeometry::with_hop(200.0, 5);
  Rng rng(8);
  std::vector<double> x(300);
  for (auto& v : x) v = rng.normal();
  const auto frames = stft_magnitudes(x, g);
  const auto result = griffin_lim(frames, g, {30, 5u});
  ASSERT_EQ(result.errors.size(), 30u);
  for (std::size_t i = 1; i < result.errors.size(); ++i) {
    EXPECT_LE(result.errors[i], result.errors[i - 1] + 1e-12);
  }
  EXPECT_EQ(result.signal.size(), (frames.size() - 1) * g.hop + g.frame_len);
}

TEST(SpsiCriteria, CausalityHoldsBitExactly) {
  const auto outcome = acceptance::spsi_causality(20, 99);
  EXPECT_TRUE(outcome.pass) << outcome.detail;
}

TEST(SpsiCriteria, QualityAgainstGriffinLim) {
  const auto outcome = acceptance::spsi_quality();
  EXPECT_TRUE(outcome.pass) << outcome.detail;
}

}  // namespace
}  // namespace vtex
