#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "herd/error.hpp"
#include "herd/ledger.hpp"

using namespace herd;

namespace {

// Computed outside this code base with Python's hashlib over the literal
// canonical text below.
constexpr const char* kGoldenCanonical =
    R"({"agent_id":"p0","index":"herd-routes/golden","location":{"lat":51.4974,"lon":-0.1776,"x":12.345679,"y":50},"step":42})";
constexpr const char* kGoldenId = "1206217fcc062b0c4dda577305224565dda2a72db2f236e8b699be54c97247d5";

CartesianPoint pt(double x, double y) { return {x, y}; }
const GeoPoint kGeo{51.4974, -0.1776};

}  // namespace

TEST(LedgerFormat, Decimal6) {
  EXPECT_EQ(format_decimal6(50.0), "50");
  EXPECT_EQ(format_decimal6(12.3456789), "12.345679");
  EXPECT_EQ(format_decimal6(-0.0000001), "0");
  EXPECT_EQ(format_decimal6(-0.1776), "-0.1776");
  EXPECT_EQ(format_decimal6(0.1), "0.1");
  EXPECT_EQ(format_decimal6(1e7), "10000000");
}

TEST(LedgerFormat, CanonicalSerializationIsSortedCompact) {
  EXPECT_EQ(canonical_serialization("herd-routes/golden", "p0", pt(12.3456789, 50.0), kGeo, 42), kGoldenCanonical);
  EXPECT_EQ(canonical_serialization("i", "we\"ird", pt(0, 0), {0, 0}, 0),
            R"({"agent_id":"we\"ird","index":"i","location":{"lat":0,"lon":0,"x":0,"y":0},"step":0})");
}

TEST(LedgerFormat, GoldenMessageId) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(kGoldenCanonical), kGoldenId);
  MockTangle t;
  EXPECT_EQ(t.post_checkpoint("herd-routes/golden", "p0", pt(12.3456789, 50.0), kGeo, 42), kGoldenId);
}

TEST(Ledger, IdempotentRepost) {
  MockTangle t;
  const auto a = t.post_checkpoint("idx", "p1", pt(1, 2), kGeo, 5);
  EXPECT_EQ(t.size(), 1u);
  const auto b = t.post_checkpoint("idx", "p1", pt(1, 2), kGeo, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(t.size(), 1u);
  const auto c = t.post_checkpoint("idx", "p1", pt(1, 2), kGeo, 6);
  EXPECT_NE(a, c);
  EXPECT_EQ(t.size(), 2u);
}

TEST(Ledger, FetchRoundTrip) {
  MockTangle t;
  const auto id = t.post_checkpoint("idx", "p7", pt(3.25, -4.5), {51.5, -0.18}, 99);
  const auto m = t.fetch_by_id(id);
  EXPECT_EQ(m.index, "idx");
  EXPECT_EQ(m.agent_id, "p7");
  EXPECT_EQ(m.position, pt(3.25, -4.5));
  EXPECT_EQ(m.geo, (GeoPoint{51.5, -0.18}));
  EXPECT_EQ(m.step, 99);
  EXPECT_EQ(m.message_id, id);
  EXPECT_EQ(sha256_hex(canonical_serialization(m.index, m.agent_id, m.position, m.geo, m.step)), id);
  EXPECT_THROW((void)t.fetch_by_id("deadbeef"), NotFound);
  EXPECT_FALSE(t.find("deadbeef"));
}

TEST(Ledger, QueryByIndexKeepsOrder) {
  MockTangle t;
  std::vector<std::string> demo;
  demo.push_back(t.post_checkpoint("herd-routes-demo", "a", pt(0, 0), kGeo, 1));
  (void)t.post_checkpoint("other", "a", pt(0, 0), kGeo, 2);
  demo.push_back(t.post_checkpoint("herd-routes-demo", "b", pt(0, 0), kGeo, 3));
  (void)t.post_checkpoint("third", "a", pt(0, 0), kGeo, 4);
  demo.push_back(t.post_checkpoint("herd-routes-demo", "a", pt(1, 0), kGeo, 5));
  const auto got = t.query_by_index("herd-routes-demo");
  ASSERT_EQ(got.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(got[i].message_id, demo[i]);

  std::vector<CheckpointMessage> brute;
  for (const auto& m : t.messages())
    if (m.index == "herd-routes-demo") brute.push_back(m);
  EXPECT_EQ(brute, got);
  EXPECT_TRUE(t.query_by_index("missing").empty());
}

TEST(Ledger, FaultFlag) {
  MockTangle t;
  EXPECT_EQ(health_check(t), LedgerHealth::Healthy);
  t.set_fault(true);
  EXPECT_EQ(health_check(t), LedgerHealth::Unhealthy);
  EXPECT_THROW((void)t.post_checkpoint("i", "a", pt(0, 0), kGeo, 0), LedgerUnavailable);
  EXPECT_EQ(t.size(), 0u);
  t.set_fault(false);
  EXPECT_EQ(health_check(t), LedgerHealth::Healthy);
  EXPECT_NO_THROW((void)t.post_checkpoint("i", "a", pt(0, 0), kGeo, 0));
}

TEST(Ledger, ThousandPostsAllResolveAndStoreOnlyGrows) {
  MockTangle t;
  std::vector<std::string> ids;
  std::set<std::string> distinct;
  std::size_t last_size = 0;
  for (int i = 0; i < 1000; ++i) {
    ids.push_back(t.post_checkpoint("bulk", "p" + std::to_string(i % 13), pt(i * 0.5, i % 7), kGeo, i / 3));
    distinct.insert(ids.back());
    EXPECT_GE(t.size(), last_size);
    last_size = t.size();
  }
  EXPECT_EQ(t.size(), distinct.size());
  const auto snapshot = t.messages();
  for (const auto& id : ids) EXPECT_EQ(t.fetch_by_id(id).message_id, id);
  for (std::size_t i = 0; i < snapshot.size(); ++i) EXPECT_EQ(t.fetch_by_id(snapshot[i].message_id), snapshot[i]);
}

TEST(Ledger, ConcurrentReadersDuringWrites) {
  MockTangle t;
  std::atomic<bool> done{false};
  std::thread reader([&] {
    std::size_t seen = 0;
    while (!done) {
      const auto all = t.messages();
      EXPECT_GE(all.size(), seen);
      seen = all.size();
      for (const auto& m : all) EXPECT_TRUE(t.find(m.message_id));
    }
  });
  for (int i = 0; i < 500; ++i) (void)t.post_checkpoint("c", "p", pt(i, 0), kGeo, i);
  done = true;
  reader.join();
  EXPECT_EQ(t.size(), 500u);
}

TEST(Ledger, DumpRoundTripAndSessions) {
  MockTangle t;
  const auto s1 = t.open_session("run-a");
  const auto s2 = t.open_session("run-a");
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.size(), 16u);
  for (int i = 0; i < 5; ++i) (void)t.post_checkpoint("d", "p", pt(i * 1.1, 2), kGeo, i);
  const auto dump = ledger_dump_json(t.messages());
  EXPECT_EQ(parse_ledger_dump(dump), t.messages());
  EXPECT_EQ(ledger_dump_json(parse_ledger_dump(dump)), dump);
}
