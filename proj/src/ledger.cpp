#include "herd/ledger.hpp"

#include <cmath>
#include <memory>
#include <mutex>

#include <fmt/core.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "herd/error.hpp"

namespace herd {

namespace {

using nlohmann::json;

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

json message_to_json(const CheckpointMessage& m) {
  return {{"index", m.index},
          {"agent_id", m.agent_id},
          {"location", {{"x", m.position.x}, {"y", m.position.y}, {"lat", m.geo.lat}, {"lon", m.geo.lon}}},
          {"step", m.step},
          {"message_id", m.message_id}};
}

}  // namespace

double quantize6(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

std::string format_decimal6(double v) {
  std::string s = fmt::format("{:.6f}", quantize6(v));
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string canonical_serialization(std::string_view index, std::string_view agent_id, CartesianPoint position,
                                    GeoPoint geo, std::int64_t step) {
  return fmt::format(R"({{"agent_id":{},"index":{},"location":{{"lat":{},"lon":{},"x":{},"y":{}}},"step":{}}})",
                     json_string(agent_id), json_string(index), format_decimal6(geo.lat), format_decimal6(geo.lon),
                     format_decimal6(position.x), format_decimal6(position.y), step);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

std::string MockTangle::open_session(std::string_view label) {
  auto id = sha256_hex(label).substr(0, 16);
  std::unique_lock lock(mutex_);
  sessions_.push_back(id);
  return id;
}

std::vector<std::string> MockTangle::sessions() const {
  std::shared_lock lock(mutex_);
  return sessions_;
}

std::string MockTangle::post_checkpoint(std::string_view index, std::string_view agent_id, CartesianPoint position,
                                        GeoPoint geo, std::int64_t step) {
  if (health_check() != LedgerHealth::Healthy) throw LedgerUnavailable("ledger failed its health check");

  CheckpointMessage m;
  m.index = std::string(index);
  m.agent_id = std::string(agent_id);
  m.position = {quantize6(position.x), quantize6(position.y)};
  m.geo = {quantize6(geo.lat), quantize6(geo.lon)};
  m.step = step;
  m.message_id = sha256_hex(canonical_serialization(m.index, m.agent_id, m.position, m.geo, m.step));

  std::unique_lock lock(mutex_);
  if (by_id_.contains(m.message_id)) return m.message_id;
  const std::size_t slot = log_.size();
  by_id_.emplace(m.message_id, slot);
  by_index_[m.index].push_back(slot);
  log_.push_back(m);
  return m.message_id;
}

std::optional<CheckpointMessage> MockTangle::find(std::string_view message_id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(std::string(message_id));
  if (it == by_id_.end()) return std::nullopt;
  return log_[it->second];
}

CheckpointMessage MockTangle::fetch_by_id(std::string_view message_id) const {
  if (auto m = find(message_id)) return *m;
  throw NotFound(fmt::format("no message with id {}", message_id));
}

std::vector<CheckpointMessage> MockTangle::query_by_index(std::string_view index) const {
  std::shared_lock lock(mutex_);
  std::vector<CheckpointMessage> out;
  auto it = by_index_.find(std::string(index));
  if (it == by_index_.end()) return out;
  out.reserve(it->second.size());
  for (auto slot : it->second) out.push_back(log_[slot]);
  return out;
}

std::size_t MockTangle::size() const {
  std::shared_lock lock(mutex_);
  return log_.size();
}

std::vector<CheckpointMessage> MockTangle::messages() const {
  std::shared_lock lock(mutex_);
  return log_;
}

std::string ledger_dump_json(const std::vector<CheckpointMessage>& messages) {
  json doc = json::array();
  for (const auto& m : messages) doc.push_back(message_to_json(m));
  return doc.dump(1);
}

std::vector<CheckpointMessage> parse_ledger_dump(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw ParseError(fmt::format("ledger dump: {}", ex.what()));
  }
  if (!doc.is_array()) throw ParseError("ledger dump: expected a JSON array");
  std::vector<CheckpointMessage> out;
  out.reserve(doc.size());
  try {
    for (const auto& j : doc) {
      CheckpointMessage m;
      m.index = j.at("index").get<std::string>();
      m.agent_id = j.at("agent_id").get<std::string>();
      const auto& loc = j.at("location");
      m.position = {loc.at("x").get<double>(), loc.at("y").get<double>()};
      m.geo = {loc.at("lat").get<double>(), loc.at("lon").get<double>()};
      m.step = j.at("step").get<std::int64_t>();
      m.message_id = j.at("message_id").get<std::string>();
      out.push_back(std::move(m));
    }
  } catch (const json::exception& ex) {
    throw ParseError(fmt::format("ledger dump: {}", ex.what()));
  }
  return out;
}

}  // namespace herd
