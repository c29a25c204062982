#include "herd/hil_server.hpp"

#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/core.h>

#include "herd/error.hpp"

namespace herd::hil {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxLine = 64 * 1024;

std::string content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_address(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos) throw ValidationError(fmt::format("address \"{}\" lacks a port", address));
  const std::string host(address.substr(0, colon));
  const std::string port(address.substr(colon + 1));
  unsigned long value = 0;
  try {
    std::size_t used = 0;
    value = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::logic_error&) {
    throw ValidationError(fmt::format("address \"{}\" has a bad port", address));
  }
  if (value > 65535) throw ValidationError(fmt::format("address \"{}\" has a bad port", address));
  return {host.empty() ? "0.0.0.0" : host, static_cast<std::uint16_t>(value)};
}

class Connection {
 public:
  virtual ~Connection() = default;
  virtual void send(std::string line) = 0;
};

struct Server::Impl {
  Impl(Coordinator& c, std::shared_ptr<const RoadNetwork> n, ServeOptions o)
      : coordinator(c), net(std::move(n)), options(std::move(o)), tcp_acceptor(io), web_acceptor(io) {}

  Coordinator& coordinator;
  std::shared_ptr<const RoadNetwork> net;
  ServeOptions options;
  asio::io_context io;
  tcp::acceptor tcp_acceptor;
  tcp::acceptor web_acceptor;
  std::thread thread;
  std::string network_json;

  std::mutex connections_mutex;
  std::unordered_map<std::string, std::weak_ptr<Connection>> connections;

  void attach(const std::string& session, const std::shared_ptr<Connection>& conn) {
    std::scoped_lock lock(connections_mutex);
    connections[session] = conn;
  }

  void detach(const std::string& session) {
    {
      std::scoped_lock lock(connections_mutex);
      connections.erase(session);
    }
    coordinator.close_session(session);
  }

  /// Parse errors are answered directly; valid messages go to the engine.
  void handle_line(const std::string& session, Connection& conn, std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) return;
    auto parsed = parse_client_message(line);
    if (!parsed.message) {
      conn.send(error_message(parsed.error));
      return;
    }
    coordinator.submit(session, std::move(*parsed.message));
  }

  void bind(tcp::acceptor& acceptor, const std::string& address) {
    auto [host, port] = parse_address(address);
    boost::system::error_code ec;
    const auto ip = asio::ip::make_address(host, ec);
    if (ec) throw Error(fmt::format("bind {}: bad host: {}", address, ec.message()));
    const tcp::endpoint ep(ip, port);
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error(fmt::format("bind {}: {}", address, ec.message()));
  }

  void accept_tcp();
  void accept_web();
};

namespace {

class TcpConnection : public Connection, public std::enable_shared_from_this<TcpConnection> {
 public:
  TcpConnection(tcp::socket socket, Server::Impl& server)
      : socket_(std::move(socket)), server_(server), buffer_(kMaxLine) {}

  void start() {
    session_ = server_.coordinator.open_session();
    server_.attach(session_, shared_from_this());
    read();
  }

  void send(std::string line) override {
    asio::post(socket_.get_executor(), [self = shared_from_this(), line = std::move(line)]() mutable {
      self->queue_.push_back(std::move(line) + "\n");
      if (self->queue_.size() == 1) self->write();
    });
  }

 private:
  void read() {
    asio::async_read_until(socket_, buffer_, '\n', [self = shared_from_this()](boost::system::error_code ec, std::size_t n) {
      if (ec) {
        if (ec == asio::error::not_found) {
          // Line longer than the buffer allows.
          self->send(error_message("parse"));
        }
        self->server_.detach(self->session_);
        return;
      }
      std::string line(asio::buffers_begin(self->buffer_.data()), asio::buffers_begin(self->buffer_.data()) + n - 1);
      self->buffer_.consume(n);
      self->server_.handle_line(self->session_, *self, std::move(line));
      self->read();
    });
  }

  void write() {
    asio::async_write(socket_, asio::buffer(queue_.front()), [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  tcp::socket socket_;
  Server::Impl& server_;
  asio::streambuf buffer_;
  std::deque<std::string> queue_;
  std::string session_;
};

class WsConnection : public Connection, public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void start(http::request<http::string_body> req) {
    ws_.read_message_max(kMaxLine);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->session_ = self->server_.coordinator.open_session();
      self->server_.attach(self->session_, self);
      self->read();
    });
  }

  void send(std::string line) override {
    asio::post(ws_.get_executor(), [self = shared_from_this(), line = std::move(line)]() mutable {
      self->queue_.push_back(std::move(line));
      if (self->queue_.size() == 1) self->write();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.detach(self->session_);
        return;
      }
      auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.handle_line(self->session_, *self, std::move(text));
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::string session_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void start() {
    http::async_read(stream_, buffer_, request_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->route();
    });
  }

 private:
  void route() {
    const std::string target(request_.target());
    if (websocket::is_upgrade(request_) && target == "/ws") {
      std::make_shared<WsConnection>(stream_.release_socket(), server_)->start(std::move(request_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(request_.version());
    res->keep_alive(false);
    if (request_.method() != http::verb::get) {
      res->result(http::status::method_not_allowed);
    } else if (target == "/network.json") {
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->body() = server_.network_json;
    } else if (!serve_static(target, *res)) {
      res->result(http::status::not_found);
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  bool serve_static(const std::string& target, http::response<http::string_body>& res) {
    if (!server_.options.static_dir) return false;
    std::string rel = target.substr(0, target.find('?'));
    if (rel.find("..") != std::string::npos) return false;
    if (rel.empty() || rel == "/") rel = "/index.html";
    const auto path = *server_.options.static_dir / rel.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream body;
    body << in.rdbuf();
    res.result(http::status::ok);
    res.set(http::field::content_type, content_type(path));
    res.body() = body.str();
    return true;
  }

  beast::tcp_stream stream_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

void Server::Impl::accept_tcp() {
  tcp_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<TcpConnection>(std::move(socket), *this)->start();
    accept_tcp();
  });
}

void Server::Impl::accept_web() {
  web_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpConnection>(std::move(socket), *this)->start();
    accept_web();
  });
}

Server::Server(Coordinator& coordinator, std::shared_ptr<const RoadNetwork> net, ServeOptions options)
    : impl_(std::make_unique<Impl>(coordinator, std::move(net), std::move(options))) {
  impl_->network_json = network_to_json(*impl_->net);
}

Server::~Server() { stop(); }

void Server::start() {
  impl_->bind(impl_->tcp_acceptor, impl_->options.listen);
  std::string web = impl_->options.web_listen.value_or("");
  if (web.empty()) {
    auto [host, port] = parse_address(impl_->options.listen);
    web = fmt::format("{}:{}", host, port == 0 ? 0 : port + 1);
  }
  impl_->bind(impl_->web_acceptor, web);
  impl_->accept_tcp();
  impl_->accept_web();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void Server::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->io.stop();
  impl_->thread.join();
}

std::uint16_t Server::port() const { return impl_->tcp_acceptor.local_endpoint().port(); }
std::uint16_t Server::web_port() const { return impl_->web_acceptor.local_endpoint().port(); }

void Server::deliver(const std::string& session_id, const std::string& line) {
  std::shared_ptr<Connection> conn;
  {
    std::scoped_lock lock(impl_->connections_mutex);
    auto it = impl_->connections.find(session_id);
    if (it == impl_->connections.end()) return;
    conn = it->second.lock();
  }
  if (conn) conn->send(line);
}

SimResult serve(const SimConfig& config, const ServeOptions& options, const std::function<void(const Server&)>& on_ready,
                const std::atomic<bool>* stop, std::shared_ptr<MockTangle> ledger) {
  SimConfig cfg = config;
  cfg.hil_enabled = true;
  auto sim = Simulation::initialize(cfg, std::move(ledger));
  Coordinator coordinator;
  Server server(coordinator, sim.network_ptr(), options);
  coordinator.set_sink([&server](const std::string& session, const std::string& line) { server.deliver(session, line); });
  sim.set_observer(&coordinator);
  server.start();
  if (on_ready) on_ready(server);

  auto next = std::chrono::steady_clock::now();
  while (!sim.finished() && !(stop && stop->load())) {
    next += options.tick;
    sim.step();
    std::this_thread::sleep_until(next);
  }
  server.stop();
  return sim.result();
}

}  // namespace herd::hil
