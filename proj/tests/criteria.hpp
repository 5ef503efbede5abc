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

// Checks behind the acceptance binary. Each returns pass/fail plus the
// measured numbers; none of them throws on an unmet threshold.

#include <filesystem>
#include <string>

namespace vtex::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 50 random magnitude streams: the synthesized prefix is bit-identical when
// every later frame is replaced.
Outcome spsi_causality(int streams = 50, std::uint64_t seed = 2024);

// 10 stationary one- and two-tone streams: SPSI consistency error at most
// twice that of 100 Griffin-Lim iterations and below 0.2; under 10 s total.
Outcome spsi_quality();

// Analytic gradients of both training losses against central differences on
// a downsized network; relative error below 1e-4.
Outcome gradient_check();

// Hooke force, device clamp, exact-zero gating and the velocity filter's
// -3 dB point.
Outcome physics_constants();

// Trains on `data` through the CLI into `out`; stage-2 held-out loss at most
// 0.7 of the mean baseline, stage-1 accuracy at least 0.95, under 10 minutes.
Outcome training_signal(const std::filesystem::path& data, const std::filesystem::path& out);

// The loader accepts the published layer sizes and rejects a file or an
// expectation that differs in any network.
Outcome architecture_fidelity(const std::filesystem::path& weights,
                              const std::filesystem::path& scratch);

// Full-size render loop over `duration_s` simulated seconds: median <= 2 ms,
// p99 <= 4 ms.
Outcome loop_budget(const std::filesystem::path& weights, const std::filesystem::path& scratch,
                    double duration_s = 30.0);

// `synth --image` of each canonical height map equals `synth --texture-id`
// byte for byte; noisy height maps resolve to their own texture in >= 90 of
// 100 trials.
Outcome unseen_route(const std::filesystem::path& model_dir, const std::filesystem::path& data,
                     const std::filesystem::path& scratch);

// Fixed weights, texture and trajectory render the stored golden waveform
// exactly, twice. With `update` the golden file is rewritten instead.
Outcome determinism_golden(const std::filesystem::path& golden, bool update = false);

}  // namespace vtex::acceptance
