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

// Hot paths of the render loop at published sizes.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "vtex/engine.hpp"
#include "vtex/model.hpp"
#include "vtex/phase.hpp"
#include "vtex/random.hpp"
#include "vtex/spectral.hpp"

namespace {

using namespace vtex;

std::shared_ptr<const WeightSet> published_weights() {
  static const auto weights =
      std::make_shared<const WeightSet>(WeightSet::random(Architecture::published(), 1));
  return weights;
}

TextureEmbedding some_texture(const WeightSet& weights) {
  Rng rng(2);
  TextureEmbedding e{"bench", "bench", {}};
  for (int i = 0; i < weights.arch.embedding_dim(); ++i) {
    e.vector.push_back(static_cast<float>(std::abs(rng.normal())));
  }
  return e;
}

void BM_RealFftInverse(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RealFft fft(n);
  Rng rng(3);
  std::vector<Complex> spectrum(static_cast<std::size_t>(n / 2 + 1));
  for (auto& c : spectrum) c = {rng.normal(), rng.normal()};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    fft.inverse(spectrum, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_RealFftInverse)->Arg(50)->Arg(200)->Arg(256)->Arg(1000);

void BM_SpsiStep(benchmark::State& state) {
  const auto g = FrameGeometry::make(static_cast<double>(state.range(0)), 500.0);
  SpsiState spsi(g);
  Rng rng(4);
  std::vector<double> mag(static_cast<std::size_t>(g.num_bins()));
  for (auto& m : mag) m = std::abs(rng.normal());
  std::vector<Complex> out(mag.size());
  for (auto _ : state) {
    spsi_step(spsi, mag, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_SpsiStep)->Arg(500)->Arg(2000)->Arg(10000);

void BM_PredictorForward(benchmark::State& state) {
  const auto weights = published_weights();
  Predictor predictor(weights, some_texture(*weights).vector);
  ActionWindow window;
  for (int i = 0; i < kActionSteps; ++i) window.push(1.0 + 0.1 * i, 40.0, -20.0);
  std::vector<double> out(kModelBins);
  for (auto _ : state) {
    predictor.predict(window, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_PredictorForward);

void BM_RenderStep(benchmark::State& state) {
  const auto weights = published_weights();
  RenderConfig config;
  config.synthesis_rate_hz = static_cast<double>(state.range(0));
  RenderSession session(config, weights, some_texture(*weights));
  std::vector<double> out(static_cast<std::size_t>(session.samples_per_loop()));
  std::uint64_t i = 0;
  for (auto _ : state) {
    const double t = static_cast<double>(i++) / config.loop_rate_hz;
    const double phase = std::numbers::pi * t;
    session.render_step({t, {20.0 * std::cos(phase), 20.0 * std::sin(phase), -2.0}}, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_RenderStep)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
