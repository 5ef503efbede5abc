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

// The vtex command line, callable in-process.
//
//   vtex synth        render a trajectory to WAV, CSV and a timing report
//   vtex train        two-stage training on a dataset directory
//   vtex eval         held-out spectral metrics
//   vtex bench        render-loop latency
//   vtex serve        websocket streaming service
//   vtex make-dataset write a synthetic dataset
//
// Exit codes: 0 ok, 1 acceptance failure (bench over budget, eval worse than
// the baseline), 2 usage or validation error.

#include <ostream>
#include <string>
#include <vector>

namespace vtex::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vtex::cli
