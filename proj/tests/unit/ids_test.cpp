#include <doctest.h>

#include <regex>
#include <set>
#include <thread>

#include "brainstorm/ids.hpp"

using namespace brainstorm;

TEST_SUITE("ids") {
  TEST_CASE("ids are lowercase 8-4-4-4-12 hex") {
    const std::regex shape("[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}");
    CHECK(format_id(0, 0) == "00000000-0000-0000-0000-000000000000");
    CHECK(format_id(0x0123456789abcdefULL, 0xfedcba9876543210ULL) == "01234567-89ab-cdef-fedc-ba9876543210");
    RandomIdSource random;
    DeterministicIdSource det(3);
    SessionConfig c;
    for (int i = 0; i < 20; ++i) {
      CHECK(std::regex_match(random.session_id(c), shape));
      CHECK(std::regex_match(det.action_id("s", i), shape));
    }
  }

  TEST_CASE("deterministic ids are a function of seed and inputs") {
    DeterministicIdSource a(9), b(9), other(10);
    SessionConfig c;
    CHECK(a.session_id(c) == b.session_id(c));
    CHECK(a.session_id(c) != a.session_id(c));
    CHECK(a.action_id("s", 4) == b.action_id("s", 4));
    CHECK(a.action_id("s", 4) != a.action_id("s", 5));
    CHECK(a.action_id("s", 4) != a.note_id("s", 4));
    CHECK(a.action_id("s", 4) != other.action_id("s", 4));
  }

  TEST_CASE("random ids do not collide across threads") {
    RandomIdSource ids;
    std::vector<std::vector<std::string>> per(4);
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t) {
      ts.emplace_back([&, t] {
        for (int i = 0; i < 500; ++i) per[t].push_back(ids.action_id("s", i));
      });
    }
    for (auto& t : ts) t.join();
    std::set<std::string> all;
    for (const auto& v : per) all.insert(v.begin(), v.end());
    CHECK(all.size() == 2000);
  }

  TEST_CASE("logical clock steps one second per turn") {
    LogicalClock clock(parse_timestamp("2025-01-01T00:00:00.000Z"));
    CHECK(format_timestamp(clock.stamp(0)) == "2025-01-01T00:00:00.000Z");
    CHECK(format_timestamp(clock.stamp(61)) == "2025-01-01T00:01:01.000Z");
  }

  TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  }
}
