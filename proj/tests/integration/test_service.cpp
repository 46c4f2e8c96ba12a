#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

#include "fixtures.hpp"
#include "sitescout/service.hpp"

using namespace sitescout;
using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

struct Served {
  explicit Served(const std::string& scenario, int tick_ms = 5, bool auto_start = true)
      : mission(fixture::load(scenario), options(auto_start)), service(mission, ServiceOptions{"127.0.0.1", 0, tick_ms, {}}) {
    port = service.start();
  }

  static MissionOptions options(bool auto_start) {
    MissionOptions o;
    o.auto_start = auto_start;
    return o;
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(5, 0);
    return c;
  }

  json state() {
    auto res = client().Get("/api/state");
    EXPECT_TRUE(res);
    return res ? json::parse(res->body) : json{};
  }

  template <class Pred>
  json wait_for(Pred pred, std::chrono::milliseconds limit = 20s) {
    const auto end = std::chrono::steady_clock::now() + limit;
    json s = state();
    while (!pred(s) && std::chrono::steady_clock::now() < end) {
      std::this_thread::sleep_for(5ms);
      s = state();
    }
    return s;
  }

  Mission mission;
  Service service;
  int port = 0;
};

}  // namespace

TEST(Service, StateMapAndGroundTruthDocuments) {
  Served s("two_room");
  const json st = s.wait_for([](const json& j) { return j["tick"].get<int>() >= 2; });
  EXPECT_EQ(st["schema"], 1);
  EXPECT_GE(st["phi"].get<double>(), 0.0);
  EXPECT_EQ(st["agents"].size(), 2u);
  EXPECT_TRUE(st["agents"][0].contains("state"));

  auto c = s.client();
  const auto map = c.Get("/api/map");
  ASSERT_TRUE(map);
  EXPECT_EQ(map->status, 200);
  EXPECT_EQ(map->get_header_value("Access-Control-Allow-Origin"), "*");
  const json m = json::parse(map->body);
  EXPECT_EQ(m["palette"]["free"], 254);
  EXPECT_EQ(m["palette"]["unknown"], 205);
  EXPECT_EQ(m["palette"]["occupied"], 0);
  EXPECT_EQ(m["rows"].size(), m["height"].get<std::size_t>());
  EXPECT_EQ(m["rows"][0].size(), m["width"].get<std::size_t>());

  const auto gt = c.Get("/api/groundtruth");
  ASSERT_TRUE(gt);
  const json g = json::parse(gt->body);
  EXPECT_EQ(g["width"], m["width"]);
  EXPECT_EQ(g["openings"][0]["id"], "door-ab");

  const auto pre = c.Options("/api/command");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
}

TEST(Service, CommandErrors) {
  Served s("two_room_interactive", 20);
  auto c = s.client();
  auto bad = c.Post("/api/command", "{\"kind\":\"dance\"}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["error"], "InvalidCommand");
  bad = c.Post("/api/command", "not json", "application/json");
  EXPECT_EQ(bad->status, 400);
  const auto again = c.Post("/api/command", "{\"kind\":\"start\"}", "application/json");
  EXPECT_EQ(again->status, 409);
  const auto unknown = c.Post("/api/help/RA9-req-4/grasp", "{\"x\":1,\"y\":2}", "application/json");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(json::parse(unknown->body)["error"], "UnknownRequest");
}

TEST(Service, StopHaltsWithinOneTick) {
  Served s("two_room", 30);
  s.wait_for([](const json& j) { return j["tick"].get<int>() >= 2; });
  auto c = s.client();
  const auto res = c.Post("/api/command", "{\"kind\":\"stop\"}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  const json ack = json::parse(res->body);
  EXPECT_EQ(ack["accepted"], true);
  const std::uint64_t at = ack["tick"];
  const json st = s.wait_for([](const json& j) { return j["outcome"] != "Running"; }, 5s);
  EXPECT_EQ(st["outcome"], "Aborted");
  EXPECT_EQ(st["abort_reason"], "OperatorStop");
  EXPECT_LE(st["tick"].get<std::uint64_t>(), at + 1);
  const auto late = c.Post("/api/command", "{\"kind\":\"stop\"}", "application/json");
  EXPECT_EQ(late->status, 409);
}

TEST(Service, WaitsForStartCommand) {
  Served s("single_room", 5, false);
  std::this_thread::sleep_for(50ms);
  json st = s.state();
  EXPECT_EQ(st["started"], false);
  EXPECT_EQ(st["tick"], 0);
  auto c = s.client();
  EXPECT_EQ(c.Post("/api/command", "{\"kind\":\"start\"}", "application/json")->status, 202);
  st = s.wait_for([](const json& j) { return j["tick"].get<int>() >= 1; }, 5s);
  EXPECT_EQ(st["started"], true);
}

TEST(Service, EventStreamDeliversOrderedEvents) {
  Served s("two_room", 5);
  httplib::Client c("127.0.0.1", s.port);
  c.set_read_timeout(5, 0);
  std::string body;
  std::vector<std::uint64_t> ids;
  c.Get("/api/events", [&](const char* data, std::size_t n) {
    body.append(data, n);
    std::size_t pos;
    while ((pos = body.find("\n\n")) != std::string::npos) {
      const std::string frame = body.substr(0, pos);
      body.erase(0, pos + 2);
      if (frame.rfind("id: ", 0) != 0) continue;
      ids.push_back(std::stoull(frame.substr(4, frame.find('\n') - 4)));
      const auto data_at = frame.find("data: ");
      EXPECT_NE(data_at, std::string::npos);
      const json doc = json::parse(frame.substr(data_at + 6));
      EXPECT_EQ(doc["schema"], 1);
      EXPECT_TRUE(doc.contains("type"));
    }
    return ids.size() < 20;
  });
  ASSERT_GE(ids.size(), 20u);
  for (std::size_t i = 1; i < ids.size(); ++i) EXPECT_EQ(ids[i], ids[i - 1] + 1);

  // Resuming after a known id starts right after it.
  std::vector<std::uint64_t> resumed;
  httplib::Headers h{{"Last-Event-ID", std::to_string(ids[5])}};
  body.clear();
  c.Get("/api/events", h, [&](const char* data, std::size_t n) {
    body.append(data, n);
    std::size_t pos;
    while ((pos = body.find("\n\n")) != std::string::npos) {
      const std::string frame = body.substr(0, pos);
      body.erase(0, pos + 2);
      if (frame.rfind("id: ", 0) == 0) resumed.push_back(std::stoull(frame.substr(4, frame.find('\n') - 4)));
    }
    return resumed.empty();
  });
  ASSERT_FALSE(resumed.empty());
  EXPECT_EQ(resumed[0], ids[5] + 1);
}

TEST(Service, InteractiveGraspThroughEndpointFinishesMission) {
  Served s("two_room_interactive", 2);
  const json waiting = s.wait_for([](const json& j) {
    for (const auto& p : j["pending"]) {
      if (p["status"] == "assigned") return true;
    }
    return false;
  });
  ASSERT_EQ(waiting["pending"].size(), 1u);
  const std::string id = waiting["pending"][0]["request_id"];
  // Wait until the assistant has asked for the grasp.
  const auto end = std::chrono::steady_clock::now() + 20s;
  while (!s.mission.human().is_open(id) && std::chrono::steady_clock::now() < end) std::this_thread::sleep_for(5ms);
  ASSERT_TRUE(s.mission.human().is_open(id));
  const Point2 handle = *s.mission.scenario().obstacles[0].handle;
  auto c = s.client();
  const json body{{"x", handle.x}, {"y", handle.y}};
  const auto res = c.Post("/api/help/" + id + "/grasp", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  const json done = s.wait_for([](const json& j) { return j["outcome"] != "Running"; }, 30s);
  EXPECT_EQ(done["outcome"], "Done");
  EXPECT_GE(done["phi"].get<double>(), 95.0);
}

TEST(Service, ConcurrentReadersSeeWholeSnapshots) {
  Served s("single_room", 1);
  std::vector<std::thread> readers;
  std::atomic<int> bad{0};
  for (int r = 0; r < 4; ++r) {
    readers.emplace_back([&] {
      httplib::Client c("127.0.0.1", s.port);
      std::uint64_t last = 0;
      for (int i = 0; i < 40; ++i) {
        const auto res = c.Get("/api/state");
        if (!res) {
          ++bad;
          continue;
        }
        const json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded() || j["tick"].get<std::uint64_t>() < last) ++bad;
        else last = j["tick"];
      }
    });
  }
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
}

TEST(EventHub, WaitAfterAndCapacity) {
  EventHub hub(3);
  EXPECT_TRUE(hub.wait_after(0, 1ms).empty());
  for (int i = 0; i < 5; ++i) hub.publish("e" + std::to_string(i));
  EXPECT_EQ(hub.last_seq(), 5u);
  const auto got = hub.wait_after(0, 1ms);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].first, 3u);
  EXPECT_EQ(got[2].second, "e4");
  EXPECT_TRUE(hub.wait_after(5, 1ms).empty());
  std::thread later([&] {
    std::this_thread::sleep_for(20ms);
    hub.publish("late");
  });
  const auto woke = hub.wait_after(5, 2s);
  later.join();
  ASSERT_EQ(woke.size(), 1u);
  EXPECT_EQ(woke[0].second, "late");
  hub.close();
  EXPECT_TRUE(hub.closed());
}
