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

#include "vtex/service.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <deque>
#include <optional>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "vtex/error.hpp"

namespace vtex {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "chunk encoding assumes a little-endian host");

void parse_bind_address(std::string_view text, ServiceConfig& config) {
  const auto colon = text.rfind(':');
  require(colon != std::string_view::npos && colon > 0,
          "bind address must look like host:port, got '" + std::string(text) + "'");
  const auto port = detail::parse_number<unsigned>(text.substr(colon + 1));
  require(port && *port <= 65535, "bad port in bind address '" + std::string(text) + "'");
  config.host = std::string(text.substr(0, colon));
  config.port = static_cast<std::uint16_t>(*port);
}

ChunkHeader decode_chunk_header(std::string_view bytes) {
  require(bytes.size() >= kChunkHeaderBytes, "chunk shorter than its header");
  ChunkHeader header;
  std::memcpy(&header.sequence, bytes.data(), 4);
  std::memcpy(&header.samples, bytes.data() + 4, 2);
  std::memcpy(&header.dropped, bytes.data() + 6, 2);
  require(bytes.size() == kChunkHeaderBytes + 4 * std::size_t{header.samples},
          "chunk length does not match its sample count");
  return header;
}

namespace {

struct Shared {
  ServiceConfig config;
  std::shared_ptr<const WeightSet> weights;
  std::shared_ptr<const TextureLibrary> library;
  std::atomic<std::size_t> sessions{0};
};

struct ProtocolError {
  std::uint16_t code;
  std::string reason;
};

double number_field(const json& message, const char* key) {
  const auto it = message.find(key);
  if (it == message.end() || !it->is_number()) {
    throw ProtocolError{kCloseProtocol, std::string("missing numeric field ") + key};
  }
  const double value = it->get<double>();
  if (!std::isfinite(value)) {
    throw ProtocolError{kCloseProtocol, std::string("non-finite field ") + key};
  }
  return value;
}

class StreamSession : public std::enable_shared_from_this<StreamSession> {
 public:
  StreamSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), shared_(std::move(shared)) {
    ++shared_->sessions;
  }
  ~StreamSession() { --shared_->sessions; }

  void start(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, beast::bind_front_handler(&StreamSession::on_accept,
                                                        shared_from_this()));
  }

 private:
  struct Outgoing {
    std::string data;
    bool binary = false;
  };

  struct ClientState {
    std::uint64_t loop = 0;
    double t_s = 0.0;
    std::array<double, 3> position_mm{};
  };

  void on_accept(beast::error_code ec) {
    if (ec) return;
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_,
                   beast::bind_front_handler(&StreamSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finished_ = true;
      timer_.cancel();
      return;
    }
    if (closing_) return;
    const bool text = ws_.got_text();
    std::string payload = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      if (!text) throw ProtocolError{kCloseProtocol, "binary messages are not accepted"};
      json message;
      try {
        message = json::parse(payload);
      } catch (const json::exception&) {
        throw ProtocolError{kCloseProtocol, "malformed JSON"};
      }
      if (!message.is_object() || !message.contains("type") || !message["type"].is_string()) {
        throw ProtocolError{kCloseProtocol, "message without a type"};
      }
      const std::string type = message["type"].get<std::string>();
      if (!streaming_) {
        if (type != "hello") throw ProtocolError{kCloseProtocol, "expected hello"};
        handle_hello(message);
      } else {
        if (type != "state") throw ProtocolError{kCloseProtocol, "unexpected message " + type};
        handle_state(message);
      }
    } catch (const ProtocolError& error) {
      close_with(error.code, error.reason);
      return;
    }
    read_next();
  }

  void handle_hello(const json& message) {
    const auto id = message.find("texture_id");
    if (id == message.end() || !id->is_string()) {
      throw ProtocolError{kCloseProtocol, "hello needs texture_id"};
    }
    const TextureEmbedding* texture = shared_->library->find(id->get<std::string>());
    if (texture == nullptr) {
      throw ProtocolError{kCloseUnknownTexture, "unknown texture " + id->get<std::string>()};
    }
    render_ = shared_->config.render;
    if (message.contains("synthesis_rate_hz")) {
      render_.synthesis_rate_hz = number_field(message, "synthesis_rate_hz");
    }
    try {
      render_.validate();
    } catch (const Error& error) {
      throw ProtocolError{kCloseProtocol, error.what()};
    }
    texture_ = *texture;
    samples_per_loop_ = render_.samples_per_loop();
    chunk_loops_ = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(
               std::llround(shared_->config.chunk_seconds * render_.loop_rate_hz)));
    silence_loops_ = static_cast<std::uint64_t>(
        std::ceil(shared_->config.silence_seconds * render_.loop_rate_hz));
    chunk_.resize(chunk_loops_ * samples_per_loop_);

    json ready = {{"type", "ready"},
                  {"texture_id", texture_.id},
                  {"sample_rate_hz", render_.synthesis_rate_hz},
                  {"loop_rate_hz", render_.loop_rate_hz},
                  {"chunk_samples", chunk_.size()},
                  {"scale", shared_->config.scale}};
    enqueue({ready.dump(), false});
    streaming_ = true;
    clock_start_ = std::chrono::steady_clock::now();
    ticks_ = 0;
    schedule_tick();
  }

  void handle_state(const json& message) {
    ClientState state;
    state.t_s = number_field(message, "t_s");
    state.position_mm = {number_field(message, "x_mm"), number_field(message, "y_mm"),
                         number_field(message, "z_mm")};
    if (last_received_t_ && state.t_s <= *last_received_t_) {
      throw ProtocolError{kCloseProtocol, "state timestamps must increase"};
    }
    last_received_t_ = state.t_s;
    if (!first_t_) {
      first_t_ = state.t_s;
      first_loop_ = rendered_loops_;
    }
    const auto offset = std::llround((state.t_s - *first_t_) * render_.loop_rate_hz);
    state.loop = std::max(first_loop_ + static_cast<std::uint64_t>(offset), rendered_loops_);
    pending_.push_back(state);
  }

  void schedule_tick() {
    ++ticks_;
    const auto period = std::chrono::duration<double>(shared_->config.chunk_seconds);
    timer_.expires_at(clock_start_ +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          period * static_cast<double>(ticks_)));
    timer_.async_wait(beast::bind_front_handler(&StreamSession::on_tick, shared_from_this()));
  }

  void on_tick(beast::error_code ec) {
    if (ec || closing_ || finished_) return;
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start_).count();
    const auto due = static_cast<std::uint64_t>(std::floor(elapsed * render_.loop_rate_hz));
    try {
      while (rendered_loops_ + chunk_loops_ <= due) render_chunk();
    } catch (const std::exception& error) {
      close_with(kCloseRenderError, error.what());
      return;
    }
    schedule_tick();
  }

  void render_chunk() {
    for (std::uint64_t i = 0; i < chunk_loops_; ++i) {
      const std::span<double> out(chunk_.data() + i * samples_per_loop_,
                                  static_cast<std::size_t>(samples_per_loop_));
      render_loop(out);
      ++rendered_loops_;
    }

    std::size_t pending_chunks = 0;
    for (const auto& item : outgoing_) pending_chunks += item.binary ? 1 : 0;
    if (pending_chunks >= shared_->config.max_pending_chunks) {
      if (dropped_ < 0xffff) ++dropped_;
      return;
    }
    const auto count = static_cast<std::uint16_t>(chunk_.size());
    std::string bytes(kChunkHeaderBytes + 4 * chunk_.size(), '\0');
    std::memcpy(bytes.data(), &sequence_, 4);
    std::memcpy(bytes.data() + 4, &count, 2);
    std::memcpy(bytes.data() + 6, &dropped_, 2);
    for (std::size_t i = 0; i < chunk_.size(); ++i) {
      const auto v =
          static_cast<float>(std::clamp(chunk_[i] / shared_->config.scale, -1.0, 1.0));
      std::memcpy(bytes.data() + kChunkHeaderBytes + 4 * i, &v, 4);
    }
    ++sequence_;
    dropped_ = 0;
    enqueue({std::move(bytes), true});
  }

  void render_loop(std::span<double> out) {
    const std::uint64_t loop = rendered_loops_;
    double dt = 1.0 / render_.loop_rate_hz;
    while (!pending_.empty() && pending_.front().loop <= loop) {
      const ClientState state = pending_.front();
      pending_.pop_front();
      if (previous_) {
        dt = state.t_s - previous_->t_s;
        velocity_ = {(state.position_mm[0] - previous_->position_mm[0]) / dt,
                     (state.position_mm[1] - previous_->position_mm[1]) / dt};
      } else {
        velocity_ = {0.0, 0.0};
      }
      previous_ = state;
      last_state_loop_ = loop;
    }
    if (!previous_) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    if (!session_) {
      session_.emplace(render_, shared_->weights, texture_);
      json started = {{"type", "started"}, {"sample_offset", loop * samples_per_loop_}};
      enqueue({started.dump(), false});
    }
    std::array<double, 2> velocity = velocity_;
    if (loop - last_state_loop_ >= silence_loops_) velocity = {0.0, 0.0};
    session_->step(previous_->position_mm, velocity, dt, out);
  }

  void enqueue(Outgoing item) {
    if (closing_) return;
    outgoing_.push_back(std::move(item));
    if (!writing_) write_next();
  }

  void write_next() {
    if (outgoing_.empty()) {
      writing_ = false;
      if (close_pending_) do_close();
      return;
    }
    writing_ = true;
    ws_.binary(outgoing_.front().binary);
    ws_.async_write(net::buffer(outgoing_.front().data),
                    beast::bind_front_handler(&StreamSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    outgoing_.pop_front();
    if (ec) {
      writing_ = false;
      finished_ = true;
      timer_.cancel();
      return;
    }
    if (close_pending_) {
      outgoing_.clear();
      writing_ = false;
      do_close();
      return;
    }
    write_next();
  }

  void close_with(std::uint16_t code, const std::string& reason) {
    if (closing_) return;
    closing_ = true;
    timer_.cancel();
    close_reason_ = websocket::close_reason(static_cast<websocket::close_code>(code),
                                           reason.substr(0, 120));
    close_pending_ = true;
    if (!writing_) {
      outgoing_.clear();
      do_close();
    }
  }

  void do_close() {
    close_pending_ = false;
    ws_.async_close(close_reason_, [self = shared_from_this()](beast::error_code) {
      self->finished_ = true;
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Shared> shared_;

  bool streaming_ = false;
  bool closing_ = false;
  bool close_pending_ = false;
  bool finished_ = false;
  websocket::close_reason close_reason_;

  RenderConfig render_;
  TextureEmbedding texture_;
  std::optional<RenderSession> session_;
  int samples_per_loop_ = 0;
  std::uint64_t chunk_loops_ = 1;
  std::uint64_t silence_loops_ = 1;
  std::vector<double> chunk_;
  std::chrono::steady_clock::time_point clock_start_;
  std::uint64_t ticks_ = 0;
  std::uint64_t rendered_loops_ = 0;

  std::optional<double> last_received_t_;
  std::optional<double> first_t_;
  std::uint64_t first_loop_ = 0;
  std::deque<ClientState> pending_;
  std::optional<ClientState> previous_;
  std::array<double, 2> velocity_{};
  std::uint64_t last_state_loop_ = 0;

  std::deque<Outgoing> outgoing_;
  bool writing_ = false;
  std::uint32_t sequence_ = 0;
  std::uint16_t dropped_ = 0;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Shared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

 private:
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      if (request_.target() == "/session") {
        stream_.expires_never();
        std::make_shared<StreamSession>(stream_.release_socket(), shared_)
            ->start(std::move(request_));
        return;
      }
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    if (request_.method() == http::verb::get && request_.target() == "/health") {
      const json body = {{"status", "ok"},
                         {"version", std::string(version())},
                         {"textures", shared_->library->entries.size()},
                         {"sessions", shared_->sessions.load()}};
      respond(http::status::ok, "application/json", body.dump() + "\n");
      return;
    }
    respond(http::status::not_found, "text/plain", "not found\n");
  }

  void respond(http::status status, const char* type, std::string body) {
    response_.result(status);
    response_.version(request_.version());
    response_.set(http::field::content_type, type);
    response_.keep_alive(false);
    response_.body() = std::move(body);
    response_.prepare_payload();
    http::async_write(stream_, response_,
                      [self = shared_from_this()](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  http::response<http::string_body> response_;
  std::shared_ptr<Shared> shared_;
};

}  // namespace

struct Server::Impl {
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::signal_set signals;
  std::shared_ptr<Shared> shared;
  int threads;

  Impl(ServiceConfig config, std::shared_ptr<const WeightSet> weights,
       std::shared_ptr<const TextureLibrary> library)
      : ioc(std::max(1, config.threads)),
        acceptor(net::make_strand(ioc)),
        signals(ioc),
        shared(std::make_shared<Shared>()),
        threads(std::max(1, config.threads)) {
    shared->config = std::move(config);
    shared->weights = std::move(weights);
    shared->library = std::move(library);
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == net::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpSession>(std::move(socket), shared)->start();
      accept();
    });
  }
};

Server::Server(ServiceConfig config, std::shared_ptr<const WeightSet> weights,
               std::shared_ptr<const TextureLibrary> library) {
  require(weights != nullptr && library != nullptr, "server needs weights and a library");
  require(!library->entries.empty(), "texture library is empty");
  config.render.validate();
  require(config.chunk_seconds > 0.0 && config.scale > 0.0 && config.max_pending_chunks > 0,
          "chunk period, scale and queue bound must be positive");
  impl_ = std::make_unique<Impl>(std::move(config), std::move(weights), std::move(library));

  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->shared->config.host, ec);
  if (ec) fail(ErrorCode::kIo, "bad bind address " + impl_->shared->config.host);
  const tcp::endpoint endpoint(address, impl_->shared->config.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    fail(ErrorCode::kIo, "cannot listen on " + impl_->shared->config.host + ":" +
                             std::to_string(impl_->shared->config.port) + ": " + ec.message());
  }
  impl_->accept();
  if (impl_->shared->config.stop_on_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) impl_->ioc.stop();
    });
  }
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  std::vector<std::thread> workers;
  for (int i = 1; i < impl_->threads; ++i) {
    workers.emplace_back([this] { impl_->ioc.run(); });
  }
  impl_->ioc.run();
  for (auto& worker : workers) worker.join();
}

void Server::stop() { impl_->ioc.stop(); }

std::size_t Server::active_sessions() const { return impl_->shared->sessions.load(); }

}  // namespace vtex
