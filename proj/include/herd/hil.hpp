#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "herd/engine.hpp"
#include "herd/network.hpp"

namespace herd::hil {

// Client -> server messages. One JSON object per line or frame, each with a
// "type" field.
struct Join {
  std::string name;
};
struct Position {
  GeoPoint geo;
  std::optional<std::int64_t> ts;
};
struct Decision {
  bool accept = false;
  std::int64_t epoch_step = 0;
};
struct Leave {};

using ClientMessage = std::variant<Join, Position, Decision, Leave>;

/// Either a message or the reason it was rejected ("parse", "unknown-type",
/// "invalid").
struct Parsed {
  std::optional<ClientMessage> message;
  std::string error;
};

[[nodiscard]] Parsed parse_client_message(std::string_view line);

// Server -> client messages, without the trailing newline.
[[nodiscard]] std::string joined_message(std::string_view agent_id, double price, std::int64_t step);
[[nodiscard]] std::string price_message(double value, std::int64_t epoch_step);
[[nodiscard]] std::string route_message(std::string_view route_id, const std::vector<GeoPoint>& waypoints);
[[nodiscard]] std::string checkpoint_message(std::string_view message_id, std::int64_t step);
[[nodiscard]] std::string error_message(std::string_view reason);

enum class SessionState { Connected, Joined, Active, Closed };

struct PendingDecision {
  double price = 0.0;
  std::int64_t epoch_step = 0;
};

struct Session {
  std::string session_id;
  std::string name;
  std::string agent_id;  // "ext-N" once joined
  SessionState state = SessionState::Connected;
  std::optional<GeoPoint> last_position;
  std::int64_t last_position_step = -1;
  std::optional<PendingDecision> pending_decision;
  std::uint64_t applied = 0;  // inbound messages applied so far
};

/// Called with (session_id, line) for every outbound message.
using OutboundSink = std::function<void(const std::string&, const std::string&)>;

/// Bridges participant sessions and a running Simulation. Connection
/// handlers call open_session/submit from any thread; every mutation is
/// queued and applied on the engine thread at the next step boundary, and
/// replies are released after that step commits.
class Coordinator : public StepObserver {
 public:
  explicit Coordinator(OutboundSink sink = {});

  /// Thread-safe.
  [[nodiscard]] std::string open_session();
  /// Thread-safe. Messages from one session apply in submission order.
  void submit(const std::string& session_id, ClientMessage message);
  /// Thread-safe. Equivalent to a Leave.
  void close_session(const std::string& session_id);

  void set_sink(OutboundSink sink);

  void before_step(Simulation& sim) override;
  void after_step(Simulation& sim, const StepReport& report) override;

  /// Engine-thread view of the sessions.
  [[nodiscard]] const std::map<std::string, Session>& sessions() const { return sessions_; }
  [[nodiscard]] std::size_t queued() const;

 private:
  struct Inbound {
    std::string session_id;
    ClientMessage message;
  };

  void apply(Simulation& sim, Session& s, const Join& m);
  void apply(Simulation& sim, Session& s, const Position& m);
  void apply(Simulation& sim, Session& s, const Decision& m);
  void apply(Simulation& sim, Session& s, const Leave& m);
  void send(const Session& s, std::string line);

  OutboundSink sink_;
  mutable std::mutex inbox_mutex_;
  std::vector<Inbound> inbox_;
  std::atomic<std::uint64_t> next_session_{0};
  std::map<std::string, Session> sessions_;
  std::vector<std::pair<std::string, std::string>> outbox_;
};

}  // namespace herd::hil
