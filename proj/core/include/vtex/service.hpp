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

// Websocket streaming service.
//
// HTTP GET /health returns {"status":"ok","version":...,"textures":N,"sessions":M}.
// A websocket upgrade on /session opens a render session:
//
//   client -> {"type":"hello","texture_id":"...","synthesis_rate_hz":500}
//   server -> {"type":"ready","texture_id":...,"sample_rate_hz":...,
//              "loop_rate_hz":...,"chunk_samples":...,"scale":...}
//   client -> {"type":"state","t_s":...,"x_mm":...,"y_mm":...,"z_mm":...}  (any rate)
//   server -> {"type":"started","sample_offset":N}  once, when the first state
//              is applied; N samples of silence preceded it
//   server -> binary chunks, one per 20 ms of output
//
// Chunk layout, little-endian:
//   u32 sequence   contiguous over the chunks actually sent, from 0
//   u16 samples    sample count
//   u16 dropped    chunks dropped since the previous sent chunk
//   f32 x samples  acceleration / scale, clamped to [-1, 1]
//
// The server renders at the loop rate against its own clock. A state with
// client time t is applied at loop L0 + round((t - t_first) * loop_rate), where
// L0 is the loop at which the first state arrived, or immediately if that loop
// has passed; positions are held between states. The raw velocity is the
// difference of the last two states over their time difference; after 250 ms
// without a new state the probe is treated as stationary.
//
// Close codes: 4400 protocol violation, 4404 unknown texture, 4500 render error.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "vtex/engine.hpp"
#include "vtex/model.hpp"

namespace vtex {

inline constexpr std::uint16_t kCloseProtocol = 4400;
inline constexpr std::uint16_t kCloseUnknownTexture = 4404;
inline constexpr std::uint16_t kCloseRenderError = 4500;
inline constexpr std::size_t kChunkHeaderBytes = 8;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  RenderConfig render;        // synthesis rate may be overridden per session
  double chunk_seconds = 0.02;
  double scale = 20.0;  // m/s^2 mapped to 1.0
  std::size_t max_pending_chunks = 8;
  double silence_seconds = 0.25;
  int threads = 1;
  bool stop_on_signals = false;  // SIGINT and SIGTERM end run()
};

// "host:port"; throws invalid-argument on malformed input.
void parse_bind_address(std::string_view text, ServiceConfig& config);

struct ChunkHeader {
  std::uint32_t sequence = 0;
  std::uint16_t samples = 0;
  std::uint16_t dropped = 0;
};

ChunkHeader decode_chunk_header(std::string_view bytes);

class Server {
 public:
  // Binds immediately; throws io on failure (address in use, bad address).
  Server(ServiceConfig config, std::shared_ptr<const WeightSet> weights,
         std::shared_ptr<const TextureLibrary> library);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  // Serves until stop(); runs the configured number of threads, including
  // the caller's.
  void run();
  // Safe from any thread or a signal handler context via asio.
  void stop();
  std::size_t active_sessions() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vtex
