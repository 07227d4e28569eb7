// Copyright 2026 The Navi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "navi/scene_sim.hpp"
#include "navi/gateway.hpp"

namespace navi {
namespace {

using nlohmann::json;

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(NAVI_FIXTURE_DIR) + "/" + name, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct View {
  DepthFrame frame;
  HeadPose pose;
};

View box_view(double t = 0.0) {
  SceneSpec scene;
  scene.boxes = {person_box(2.0, 0.0)};
  const HeadPose pose = look_pose(Vec3(0, 0, 1.6), 0.0, 20.0, t);
  return {render_depth(scene, pose, default_intrinsics()), pose};
}

json parse(const HttpResponse& r) { return json::parse(r.body); }

class GatewayTest : public ::testing::Test {
 protected:
  void start_session() {
    ASSERT_EQ(gw.create_session(session_request_body(default_intrinsics())).status, 200);
  }
  Gateway gw{SessionConfig{}};
};

TEST_F(GatewayTest, EverythingWaitsForASession) {
  const View v = box_view();
  EXPECT_EQ(gw.ingest_frame(frame_request_body(v.frame, v.pose)).status, 409);
  EXPECT_EQ(gw.heading("0", "0", "0").status, 409);
  EXPECT_EQ(gw.obstacles().status, 409);
}

TEST_F(GatewayTest, SessionValidatesIntrinsics) {
  EXPECT_EQ(gw.create_session("{").status, 400);
  EXPECT_EQ(gw.create_session("{}").status, 400);
  EXPECT_EQ(gw.create_session(R"({"intrinsics":{"width":0}})").status, 400);
  start_session();
  EXPECT_EQ(parse(gw.obstacles()), json::array());
}

TEST_F(GatewayTest, IngestReportsTheFrame) {
  start_session();
  const View v = box_view();
  const HttpResponse r = gw.ingest_frame(frame_request_body(v.frame, v.pose));
  ASSERT_EQ(r.status, 200) << r.body;
  const json doc = parse(r);
  EXPECT_EQ(doc.at("frame_id"), 0);
  EXPECT_EQ(doc.at("obstacles_total"), 1);
  EXPECT_EQ(doc.at("warnings"), json::array());
  EXPECT_GE(doc.at("processing_ms").get<double>(), 0.0);

  const json obstacles = parse(gw.obstacles());
  ASSERT_EQ(obstacles.size(), 1u);
  EXPECT_EQ(obstacles[0].at("id"), 0);
}

TEST_F(GatewayTest, MalformedFramesAreRejected) {
  start_session();
  const View v = box_view();
  const json good = json::parse(frame_request_body(v.frame, v.pose));
  auto status_with = [&](const std::function<void(json&)>& edit) {
    json doc = good;
    edit(doc);
    return gw.ingest_frame(doc.dump()).status;
  };
  EXPECT_EQ(gw.ingest_frame("not json").status, 400);
  EXPECT_EQ(gw.ingest_frame("[]").status, 400);
  EXPECT_EQ(status_with([](json& d) { d.erase("timestamp"); }), 400);
  EXPECT_EQ(status_with([](json& d) { d["timestamp"] = "soon"; }), 400);
  EXPECT_EQ(status_with([](json& d) { d.erase("pose"); }), 400);
  EXPECT_EQ(status_with([](json& d) { d["pose"]["rotation"][0] = 2.0; }), 400);
  EXPECT_EQ(status_with([](json& d) { d["depth"] = "***"; }), 400);
  EXPECT_EQ(status_with([](json& d) { d["depth"] = base64_encode(std::vector<unsigned char>(12, 0)); }), 400);
  EXPECT_EQ(status_with([&](json& d) {
              std::vector<float> depth = v.frame.depth;
              depth[7] = -1.0F;
              d["depth"] = base64_encode(encode_depth_bytes(depth));
            }),
            400);
  // Nothing above reached the pipeline.
  EXPECT_EQ(parse(gw.obstacles()), json::array());
  EXPECT_EQ(gw.ingest_frame(good.dump()).status, 200);
}

TEST(Gateway, OversizedBodyIs413) {
  SessionConfig cfg;
  cfg.max_body_bytes = 1000;
  Gateway gw(cfg);
  EXPECT_EQ(gw.ingest_frame(std::string(1001, ' ')).status, 413);
  EXPECT_EQ(gw.ingest_frame(std::string(1000, ' ')).status, 400);
}

TEST(Gateway, FullQueueIs503) {
  SessionConfig cfg;
  cfg.max_queue_depth = 1;
  Gateway gw(cfg);
  ASSERT_EQ(gw.create_session(session_request_body(default_intrinsics())).status, 200);
  const View v = box_view();
  const std::string body = frame_request_body(v.frame, v.pose);

  constexpr int kClients = 12;
  std::vector<int> status(kClients);
  std::vector<std::thread> clients;
  std::atomic<bool> go{false};
  for (int i = 0; i < kClients; ++i) {
    clients.emplace_back([&, i] {
      while (!go) std::this_thread::yield();
      status[i] = gw.ingest_frame(body).status;
    });
  }
  go = true;
  for (auto& c : clients) c.join();
  const auto ok = std::count(status.begin(), status.end(), 200);
  const auto busy = std::count(status.begin(), status.end(), 503);
  EXPECT_EQ(ok + busy, kClients);
  EXPECT_GE(ok, 1);
  EXPECT_GE(busy, 1);
  // Admitted frames were all processed, in turn.
  const json next = parse(gw.ingest_frame(body));
  EXPECT_EQ(next.at("frame_id"), ok);
}

TEST_F(GatewayTest, HeadingMatchesThePlanner) {
  start_session();
  const View v = box_view();
  ASSERT_EQ(gw.ingest_frame(frame_request_body(v.frame, v.pose)).status, 200);

  Pipeline p(default_intrinsics(), PipelineConfig{});
  p.process(v.frame, v.pose);
  for (double desired : {0.0, 30.0, -20.0, 350.0, 725.0}) {
    const HeadingQuery q{Vec2(0.2, -0.1), normalize_deg(desired), p.flat_obstacles()};
    const json want = heading_to_json(find_safe_heading(q, PlannerParams{}));
    const HttpResponse r = gw.heading("0.2", "-0.1", std::to_string(desired));
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(parse(r), want) << desired;
  }
  EXPECT_EQ(parse(gw.heading("0.2", "-0.1", "0")).at("status"), "deviated");
}

TEST_F(GatewayTest, HeadingIsNormalizedAndValidated) {
  start_session();
  EXPECT_EQ(parse(gw.heading("0", "0", "-90")).at("heading"), 270.0);
  EXPECT_EQ(parse(gw.heading("0", "0", "360")).at("heading"), 0.0);
  EXPECT_EQ(gw.heading("", "0", "0").status, 400);
  EXPECT_EQ(gw.heading("1x", "0", "0").status, 400);
  EXPECT_EQ(gw.heading("0", "nan", "0").status, 400);
  EXPECT_EQ(gw.heading("0", "0", "inf").status, 400);
}

TEST_F(GatewayTest, ReadersSeeWholeSnapshotsDuringIngest) {
  start_session();
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!done) {
      const HttpResponse o = gw.obstacles();
      const HttpResponse h = gw.heading("0", "0", "0");
      if (o.status != 200 || h.status != 200 || !json::parse(o.body).is_array()) ++bad;
    }
  });
  for (int i = 0; i < 5; ++i) {
    const View v = box_view(0.2 * i);
    ASSERT_EQ(gw.ingest_frame(frame_request_body(v.frame, v.pose)).status, 200);
  }
  done = true;
  reader.join();
  EXPECT_EQ(bad, 0);
  EXPECT_EQ(parse(gw.obstacles()).size(), 1u);
}

TEST_F(GatewayTest, NewSessionStartsAnEmptyMap) {
  start_session();
  const View v = box_view();
  ASSERT_EQ(gw.ingest_frame(frame_request_body(v.frame, v.pose)).status, 200);
  start_session();
  EXPECT_EQ(parse(gw.obstacles()), json::array());
}

TEST_F(GatewayTest, NavigationEndpoints) {
  EXPECT_EQ(gw.nav_fix(R"({"lat":59.33,"lon":18.07})").status, 409);
  EXPECT_EQ(gw.nav_plan(fixture("empty_routes.json")).status, 400);
  const HttpResponse plan = gw.nav_plan(fixture("three_waypoints.json"));
  ASSERT_EQ(plan.status, 200);
  EXPECT_EQ(parse(plan).at("steps"), 3);
  EXPECT_EQ(gw.nav_fix("{}").status, 400);
  EXPECT_EQ(gw.nav_fix(R"({"lat":95,"lon":0})").status, 400);

  const json far = parse(gw.nav_fix(R"({"lat":59.0,"lon":18.07})"));
  EXPECT_TRUE(far.at("instruction").is_null());
  EXPECT_EQ(far.at("current_step"), 0);
  const json near = parse(gw.nav_fix(R"({"lat":59.33,"lon":18.07})"));
  EXPECT_NE(near.at("instruction").get<std::string>().find("Drottninggatan"), std::string::npos);
  EXPECT_EQ(near.at("current_step"), 1);
  EXPECT_FALSE(near.at("finished"));
}

TEST(GatewayHttp, ServesEveryRouteOverTheWire) {
  SessionConfig cfg;
  cfg.max_body_bytes = 2u << 20;
  Gateway gw(cfg);
  httplib::Server server;
  gw.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto post = [&](const std::string& path, const std::string& body) {
    return client.Post(path, body, "application/json");
  };
  auto res = client.Get("/obstacles");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);

  res = post("/session", session_request_body(default_intrinsics()));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  const View v = box_view();
  res = post("/frames", frame_request_body(v.frame, v.pose));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");

  res = client.Get("/heading?x=0&y=0&desired=0");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("status"), "deviated");

  res = client.Get("/heading?x=0&y=0");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = client.Get("/obstacles");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, gw.obstacles().body);

  res = post("/frames", std::string(cfg.max_body_bytes + 1, ' '));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 413);

  res = post("/nav/plan", fixture("walk_then_transit.json"));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = post("/nav/fix", R"({"lat":59.3428,"lon":18.0465})");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body).at("current_step"), 1);

  server.stop();
  serving.join();
}

class ConfigFile {
 public:
  explicit ConfigFile(const std::string& text)
      : path_(std::filesystem::temp_directory_path() / ("navi_cfg_" + std::to_string(::getpid()) + ".json")) {
    std::ofstream(path_) << text;
  }
  ~ConfigFile() { std::filesystem::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

TEST(SessionConfigFile, EnvironmentOverridesListenAddress) {
  ConfigFile file(R"({"version": 1, "listen_address": "127.0.0.1:9000", "dbscan": {"eps": 0.25}})");
  ::unsetenv(SessionConfig::kListenEnv);
  SessionConfig cfg = load_session_config(file.path());
  EXPECT_EQ(cfg.listen_address, "127.0.0.1:9000");
  EXPECT_EQ(cfg.pipeline.dbscan.eps, 0.25);

  ::setenv(SessionConfig::kListenEnv, "0.0.0.0:7001", 1);
  cfg = load_session_config(file.path());
  EXPECT_EQ(cfg.host(), "0.0.0.0");
  EXPECT_EQ(cfg.port(), 7001);

  ::setenv(SessionConfig::kListenEnv, "no-port", 1);
  EXPECT_THROW(load_session_config(file.path()), FormatError);
  ::unsetenv(SessionConfig::kListenEnv);
}

TEST(SessionConfigFile, RejectsBadDocuments) {
  EXPECT_THROW(session_config_from_json(json{{"version", 2}}), FormatError);
  EXPECT_THROW(session_config_from_json(json{{"version", 1}, {"voxel", 0.1}}), FormatError);
  EXPECT_THROW(session_config_from_json(json{{"version", 1}, {"dbscan", {{"eps", -1}}}}), FormatError);
  EXPECT_THROW(session_config_from_json(json{{"version", 1}, {"max_queue_depth", 0}}), FormatError);
  EXPECT_THROW(load_session_config("/nonexistent/navi.json"), FormatError);
}

TEST(SessionConfigFile, RoundTrips) {
  SessionConfig cfg;
  cfg.pipeline.planner.clearance = 0.5;
  cfg.pipeline.lock_floor = true;
  cfg.replay_path = "/data/run1";
  const SessionConfig back = session_config_from_json(session_config_to_json(cfg));
  EXPECT_EQ(session_config_to_json(back), session_config_to_json(cfg));
}

}  // namespace
}  // namespace navi
