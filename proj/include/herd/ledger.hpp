#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "herd/network.hpp"

namespace herd {

/// Indexation-style checkpoint record. Coordinates are stored quantised to
/// six decimal places so that the stored value and its canonical text agree.
struct CheckpointMessage {
  std::string index;
  std::string agent_id;
  CartesianPoint position;
  GeoPoint geo;
  std::int64_t step = 0;
  std::string message_id;

  friend bool operator==(const CheckpointMessage&, const CheckpointMessage&) = default;
};

/// Round to six decimal places.
[[nodiscard]] double quantize6(double v);

/// Shortest decimal text of quantize6(v): at most six fractional digits,
/// no trailing zeros, no exponent, "-0" folded to "0".
[[nodiscard]] std::string format_decimal6(double v);

/// Compact JSON with lexicographically sorted keys:
/// {"agent_id":..,"index":..,"location":{"lat":..,"lon":..,"x":..,"y":..},"step":..}
[[nodiscard]] std::string canonical_serialization(std::string_view index, std::string_view agent_id,
                                                  CartesianPoint position, GeoPoint geo, std::int64_t step);

/// Lowercase hex SHA-256.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

enum class LedgerHealth { Healthy, Unhealthy };

/// In-process append-only message store with tag lookup. Messages are never
/// modified or removed once stored. A single writer may post while readers
/// query concurrently.
class MockTangle {
 public:
  MockTangle() = default;
  MockTangle(const MockTangle&) = delete;
  MockTangle& operator=(const MockTangle&) = delete;

  /// Stand-in for seed/address generation: records and returns a session id
  /// derived from `label`.
  std::string open_session(std::string_view label);
  [[nodiscard]] std::vector<std::string> sessions() const;

  [[nodiscard]] LedgerHealth health_check() const {
    return fault_.load() ? LedgerHealth::Unhealthy : LedgerHealth::Healthy;
  }
  /// Test hook: while set, health_check reports Unhealthy and posts fail.
  void set_fault(bool on) { fault_.store(on); }

  /// Stores the message (once per distinct content) and returns its id.
  /// Throws LedgerUnavailable while unhealthy.
  std::string post_checkpoint(std::string_view index, std::string_view agent_id, CartesianPoint position, GeoPoint geo,
                              std::int64_t step);

  /// Throws NotFound for unknown ids.
  [[nodiscard]] CheckpointMessage fetch_by_id(std::string_view message_id) const;
  [[nodiscard]] std::optional<CheckpointMessage> find(std::string_view message_id) const;

  /// Messages posted under `index` in insertion order.
  [[nodiscard]] std::vector<CheckpointMessage> query_by_index(std::string_view index) const;

  [[nodiscard]] std::size_t size() const;
  /// All messages in insertion order.
  [[nodiscard]] std::vector<CheckpointMessage> messages() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<CheckpointMessage> log_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_index_;
  std::vector<std::string> sessions_;
  std::atomic<bool> fault_{false};
};

[[nodiscard]] inline LedgerHealth health_check(const MockTangle& ledger) { return ledger.health_check(); }

/// JSON array of messages in insertion order.
[[nodiscard]] std::string ledger_dump_json(const std::vector<CheckpointMessage>& messages);
[[nodiscard]] std::vector<CheckpointMessage> parse_ledger_dump(std::string_view json_text);

}  // namespace herd
