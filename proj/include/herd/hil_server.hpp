#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "herd/config.hpp"
#include "herd/engine.hpp"
#include "herd/hil.hpp"

namespace herd::hil {

struct ServeOptions {
  std::string listen = "127.0.0.1:7878";  // line-delimited JSON over TCP
  /// HTTP + WebSocket endpoint for browser clients. Defaults to the listen
  /// port + 1; port 0 picks a free port.
  std::optional<std::string> web_listen;
  std::chrono::milliseconds tick{1000};
  /// Served under / by the web endpoint when set.
  std::optional<std::filesystem::path> static_dir;
};

/// Splits "host:port". Throws ValidationError.
[[nodiscard]] std::pair<std::string, std::uint16_t> parse_address(std::string_view address);

/// Socket front end for a Coordinator. Raw TCP clients send one JSON object
/// per line. The web endpoint serves GET /network.json and upgrades GET /ws
/// to a WebSocket carrying one JSON object per text frame. Protocol errors are
/// answered on the connection without closing it.
class Server {
 public:
  Server(Coordinator& coordinator, std::shared_ptr<const RoadNetwork> net, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the I/O thread. Throws Error on bind failure.
  void start();
  void stop();

  [[nodiscard]] std::uint16_t port() const;
  [[nodiscard]] std::uint16_t web_port() const;

  /// Thread-safe; drops the line if the session has disconnected.
  void deliver(const std::string& session_id, const std::string& line);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Runs `config` with HIL enabled, one step per tick, until n_steps complete
/// or `stop` becomes true. `on_ready` fires once the sockets are bound.
SimResult serve(const SimConfig& config, const ServeOptions& options,
                const std::function<void(const Server&)>& on_ready = {}, const std::atomic<bool>* stop = nullptr,
                std::shared_ptr<MockTangle> ledger = nullptr);

}  // namespace herd::hil
