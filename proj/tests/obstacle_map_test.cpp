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

#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "navi/obstacle_map.hpp"

namespace navi {
namespace {

Aabb cube(double x, double y, double z, double half = 0.25) {
  return Aabb::centered(Vec3(x, y, z), Vec3::Constant(half));
}

std::vector<Aabb> random_boxes(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> half(0.05, 0.6);
  std::vector<Aabb> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(Aabb::centered(Vec3(pos(rng), pos(rng), pos(rng) * 0.2 + 1.0),
                                 Vec3(half(rng), half(rng), half(rng))));
  }
  return out;
}

TEST(ObstacleMap, FirstDetectionCreatesObstacle) {
  ObstacleMap map;
  const std::vector<Aabb> dets{cube(2, 0, 1)};
  map.integrate(dets, 1.5);
  ASSERT_EQ(map.size(), 1u);
  const Obstacle& o = map.obstacles()[0];
  EXPECT_EQ(o.id, 0u);
  EXPECT_EQ(o.box, dets[0]);
  EXPECT_EQ(o.observations, 1u);
  EXPECT_EQ(o.first_seen, 1.5);
  EXPECT_EQ(o.last_seen, 1.5);
  EXPECT_EQ(map.next_id(), 1u);
}

TEST(ObstacleMap, NearbyDetectionBlendsCorners) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{Aabb{Vec3(0, 0, 0), Vec3(1, 1, 1)}}, 0.0);
  map.integrate(std::vector<Aabb>{Aabb{Vec3(0.1, 0, 0), Vec3(1.1, 1, 1.5)}}, 1.0);
  ASSERT_EQ(map.size(), 1u);
  const Obstacle& o = map.obstacles()[0];
  // 0.7 * old + 0.3 * new, per corner.
  EXPECT_NEAR(o.box.min.x(), 0.03, 1e-12);
  EXPECT_NEAR(o.box.max.x(), 1.03, 1e-12);
  EXPECT_NEAR(o.box.max.z(), 1.15, 1e-12);
  EXPECT_EQ(o.observations, 2u);
  EXPECT_EQ(o.first_seen, 0.0);
  EXPECT_EQ(o.last_seen, 1.0);
}

TEST(ObstacleMap, FarDetectionCreatesSecondObstacle) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 0.0);
  map.integrate(std::vector<Aabb>{cube(0.51, 0, 1)}, 1.0);
  EXPECT_EQ(map.size(), 2u);
  EXPECT_EQ(map.obstacles()[1].id, 1u);
}

TEST(ObstacleMap, MergeDistanceIsInclusive) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 0.0);
  map.integrate(std::vector<Aabb>{cube(0.5, 0, 1)}, 1.0);
  EXPECT_EQ(map.size(), 1u);
}

TEST(ObstacleMap, EachObstacleAbsorbsAtMostOneDetectionPerCall) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 0.0);
  // Both are within range; the closer one merges, the other is new.
  map.integrate(std::vector<Aabb>{cube(0.3, 0, 1), cube(0.1, 0, 1)}, 1.0);
  ASSERT_EQ(map.size(), 2u);
  EXPECT_NEAR(map.obstacles()[0].box.center().x(), 0.03, 1e-12);
  EXPECT_EQ(map.obstacles()[1].box, cube(0.3, 0, 1));
}

TEST(ObstacleMap, ExpiryWindowIsClosed) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 1.0);
  map.expire(11.0);  // exactly 10 s unseen: kept
  EXPECT_EQ(map.size(), 1u);
  map.expire(11.0001);
  EXPECT_TRUE(map.empty());
}

TEST(ObstacleMap, IdsNeverReused) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 0.0);
  map.expire(100.0);
  map.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 100.0);
  ASSERT_EQ(map.size(), 1u);
  EXPECT_EQ(map.obstacles()[0].id, 1u);
}

TEST(ObstacleMap, RejectsInvalidDetection) {
  ObstacleMap map;
  Aabb bad{Vec3(1, 0, 0), Vec3(0, 1, 1)};
  EXPECT_THROW(map.integrate(std::span<const Aabb>(&bad, 1), 0.0), std::invalid_argument);
}

TEST(ObstacleMap, FreeFunctionsLeaveInputUntouched) {
  ObstacleMap before;
  before.integrate(std::vector<Aabb>{cube(0, 0, 1)}, 0.0);
  const ObstacleMap copy = before;
  const ObstacleMap after = integrate(before, std::vector<Aabb>{cube(3, 0, 1)}, 1.0);
  EXPECT_EQ(before, copy);
  EXPECT_EQ(after.size(), 2u);
  EXPECT_TRUE(expire(after, 50.0).empty());
  EXPECT_EQ(after.size(), 2u);
}

TEST(ObstacleMap, PropertiesUnderRandomSequences) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 30; ++trial) {
    ObstacleMap map;
    std::set<std::uint64_t> ever;
    double now = 0.0;
    for (int step = 0; step < 40; ++step) {
      now += 0.5;
      const auto before = map.obstacles();
      const auto dets = random_boxes(rng, count(rng));
      map.integrate(dets, now);
      // Size grows by at most the number of detections.
      EXPECT_LE(map.size(), before.size() + dets.size());
      EXPECT_GE(map.size(), before.size());
      for (const Obstacle& o : map.obstacles()) {
        EXPECT_TRUE(o.box.is_valid());
        EXPECT_LE(o.first_seen, o.last_seen);
        EXPECT_GE(o.observations, 1u);
        EXPECT_LT(o.id, map.next_id());
        ever.insert(o.id);
      }
      if (step % 7 == 6) {
        map.expire(now);
        for (const Obstacle& o : map.obstacles()) EXPECT_LE(now - o.last_seen, map.policy().expiry);
      }
    }
    EXPECT_EQ(ever.size(), map.next_id());
  }
}

TEST(ProjectTo2d, KeepsOnlyBoxesMeetingTheSlab) {
  ObstacleMap map;
  map.integrate(std::vector<Aabb>{Aabb{Vec3(0, 0, 0.0), Vec3(1, 1, 0.05)},  // below
                                  Aabb{Vec3(2, 0, 0.0), Vec3(3, 1, 1.8)},   // person
                                  Aabb{Vec3(4, 0, 2.5), Vec3(5, 1, 3.0)},   // above
                                  Aabb{Vec3(6, 0, 2.2), Vec3(7, 1, 2.4)}},  // touches top
                0.0);
  const auto flat = map.project_2d(HeightSlab{});
  ASSERT_EQ(flat.size(), 2u);
  EXPECT_EQ(flat[0].id, 1u);
  EXPECT_EQ(flat[0].rect.min, Vec2(2, 0));
  EXPECT_EQ(flat[0].rect.max, Vec2(3, 1));
  EXPECT_EQ(flat[1].id, 3u);
  EXPECT_EQ(project_2d(map, 0.1, 2.2), flat);
}

TEST(ProjectTo2d, RejectsEmptySlab) {
  EXPECT_THROW(ObstacleMap{}.project_2d(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ObstacleMap{}.project_2d(2.0, 1.0), std::invalid_argument);
}

TEST(Persistence, RoundTripIsExact) {
  std::mt19937_64 rng(3);
  ObstacleMap map;
  for (int step = 0; step < 10; ++step) map.integrate(random_boxes(rng, 4), 0.1 * step + 1e-9);
  map.expire(0.95);
  const ObstacleMap back = load_map(save_map(map));
  EXPECT_EQ(back, map);
  EXPECT_EQ(save_map(back), save_map(map));
}

TEST(Persistence, EmptyMapRoundTrips) {
  const ObstacleMap back = load_map(save_map(ObstacleMap{}));
  EXPECT_TRUE(back.empty());
  EXPECT_EQ(back.next_id(), 0u);
}

std::string error_of(std::string_view doc) {
  try {
    load_map(doc);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

TEST(Persistence, ErrorsNameTheOffendingField) {
  EXPECT_NE(error_of("{not json").find("not valid JSON"), std::string::npos);
  EXPECT_NE(error_of(R"({"next_id":0,"obstacles":[]})").find("$.version"), std::string::npos);
  EXPECT_NE(error_of(R"({"version":2,"next_id":0,"obstacles":[]})").find("version"), std::string::npos);
  const std::string missing_max =
      R"({"version":1,"next_id":1,"obstacles":[{"id":0,"box":{"min":[0,0,0]},"observations":1,"first_seen":0,"last_seen":0}]})";
  EXPECT_NE(error_of(missing_max).find("$.obstacles[0].box.max"), std::string::npos);
  const std::string bad_vec =
      R"({"version":1,"next_id":1,"obstacles":[{"id":0,"box":{"min":[0,0],"max":[1,1,1]},"observations":1,"first_seen":0,"last_seen":0}]})";
  EXPECT_NE(error_of(bad_vec).find("$.obstacles[0].box.min"), std::string::npos);
}

TEST(Persistence, RejectsBrokenInvariants) {
  const auto doc = [](const std::string& obstacle, int next_id) {
    return R"({"version":1,"next_id":)" + std::to_string(next_id) + R"(,"obstacles":[)" + obstacle + "]}";
  };
  const std::string ok = R"({"id":0,"box":{"min":[0,0,0],"max":[1,1,1]},"observations":1,"first_seen":0,"last_seen":1})";
  EXPECT_NO_THROW(load_map(doc(ok, 1)));
  EXPECT_THROW(load_map(doc(ok, 0)), FormatError);  // id >= next_id
  EXPECT_THROW(load_map(doc(ok + "," + ok, 1)), FormatError);  // duplicate id
  EXPECT_THROW(load_map(doc(R"({"id":0,"box":{"min":[2,0,0],"max":[1,1,1]},"observations":1,"first_seen":0,"last_seen":1})", 1)),
               FormatError);
  EXPECT_THROW(load_map(doc(R"({"id":0,"box":{"min":[0,0,0],"max":[1,1,1]},"observations":0,"first_seen":0,"last_seen":1})", 1)),
               FormatError);
  EXPECT_THROW(load_map(doc(R"({"id":0,"box":{"min":[0,0,0],"max":[1,1,1]},"observations":1,"first_seen":2,"last_seen":1})", 1)),
               FormatError);
  EXPECT_THROW(load_map(doc(R"({"id":-1,"box":{"min":[0,0,0],"max":[1,1,1]},"observations":1,"first_seen":0,"last_seen":1})", 1)),
               FormatError);
}

TEST(MapStore, SnapshotsStayValidAcrossPublishes) {
  MapStore store;
  const auto empty = store.snapshot();
  ObstacleMap next;
  next.integrate(std::vector<Aabb>{cube(1, 1, 1)}, 0.0);
  store.publish(next);
  EXPECT_TRUE(empty->empty());
  EXPECT_EQ(store.snapshot()->size(), 1u);
}

TEST(MapStore, ConcurrentReadersSeeWholeVersions) {
  MapStore store;
  std::atomic<bool> done{false};
  std::atomic<int> torn{0};
  std::thread reader([&] {
    while (!done) {
      const auto snap = store.snapshot();
      // Every published version k holds exactly k obstacles with ids 0..k-1.
      for (std::size_t i = 0; i < snap->size(); ++i) {
        if (snap->obstacles()[i].id != i) ++torn;
      }
      if (snap->next_id() != snap->size()) ++torn;
    }
  });
  ObstacleMap map;
  for (int k = 0; k < 200; ++k) {
    map.integrate(std::vector<Aabb>{cube(2.0 * k, 0, 1)}, k);
    store.publish(map);
  }
  done = true;
  reader.join();
  EXPECT_EQ(torn.load(), 0);
  EXPECT_EQ(store.snapshot()->size(), 200u);
}

}  // namespace
}  // namespace navi
