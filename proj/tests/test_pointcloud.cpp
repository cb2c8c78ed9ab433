// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "lidarsdf/pointcloud.hpp"
#include "test_util.hpp"

using namespace lidarsdf;
using lidarsdf::testing::TempDir;
using lidarsdf::testing::write_text;

namespace {

void write_records(const std::filesystem::path& path, const std::vector<std::vector<float>>& records,
                   std::size_t extra_bytes = 0) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& rec : records) {
    for (float f : rec) {
      const auto bits = std::bit_cast<std::uint32_t>(f);
      for (int i = 0; i < 4; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  for (std::size_t i = 0; i < extra_bytes; ++i) out.put(0);
}

PointCloud cloud_of(const std::vector<Point3>& pts, const std::vector<int>& classes = {}) {
  PointCloud c;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CloudPoint p;
    p.position = pts[i];
    if (!classes.empty()) p.class_id = classes[i];
    c.points.push_back(p);
  }
  return c;
}

// Oracle: plain double loop.
double hausdorff_double_loop(const std::vector<Point3>& a, const std::vector<Point3>& b) {
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, std::sqrt(squared_distance(q, p)));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST_CASE("ascii loader reads points in file order with default origin") {
  TempDir dir;
  write_text(dir / "a.xyz", "0 0 0\n1 2 3\n");
  const auto cloud = load_ascii_xyz(dir / "a.xyz");
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[1].position == Point3{1, 2, 3});
  CHECK(cloud.sensor_origin == Point3{0, 0, 0});
  CHECK_FALSE(cloud.points[0].class_id.has_value());
}

TEST_CASE("ascii loader honors origin header and optional columns") {
  TempDir dir;
  write_text(dir / "b.xyz", "# origin 1 0 0\n# a comment\n\n2 0 0\n3 0 0 0.5 7\n");
  const auto cloud = load_ascii_xyz(dir / "b.xyz");
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.sensor_origin == Point3{1, 0, 0});
  CHECK(cloud.points[0].position == Point3{2, 0, 0});
  CHECK(cloud.points[1].intensity.value() == 0.5);
  CHECK(cloud.points[1].class_id.value() == 7);
}

TEST_CASE("ascii loader errors") {
  TempDir dir;
  write_text(dir / "empty.xyz", "");
  CHECK_THROWS_WITH_AS(load_ascii_xyz(dir / "empty.xyz"), doctest::Contains("zero points"), ValidationError);
  write_text(dir / "bad.xyz", "0 0 0\n1 2\n");
  CHECK_THROWS_WITH_AS(load_ascii_xyz(dir / "bad.xyz"), doctest::Contains("line 2"), ValidationError);
  write_text(dir / "nan.xyz", "0 0 nan\n");
  CHECK_THROWS_AS(load_ascii_xyz(dir / "nan.xyz"), ValidationError);
  CHECK_THROWS_AS(load_ascii_xyz(dir / "missing.xyz"), ValidationError);
}

TEST_CASE("binary records decode little-endian float32 x y z intensity ring") {
  TempDir dir;
  write_records(dir / "two.bin", {{0, 0, 0, 10, 1}, {1, 0, 0, 20, 2}});
  CHECK(std::filesystem::file_size(dir / "two.bin") == 40);
  const auto cloud = load_bin_records(dir / "two.bin");
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[1].position == Point3{1, 0, 0});
  CHECK(cloud.points[0].intensity.value() == 10.0);
  CHECK(cloud.points[1].ring.value() == 2);
  CHECK_FALSE(cloud.points[0].class_id.has_value());
}

TEST_CASE("binary loader rejects truncated records and NaN coordinates") {
  TempDir dir;
  write_records(dir / "short.bin", {{0, 0, 0, 10, 1}, {1, 0, 0, 20, 2}}, 1);
  CHECK_THROWS_WITH_AS(load_bin_records(dir / "short.bin"), doctest::Contains("truncated record"), ValidationError);
  write_records(dir / "nan.bin", {{0, 0, 0, 1, 1}, {std::numeric_limits<float>::quiet_NaN(), 0, 0, 1, 1}});
  CHECK_THROWS_WITH_AS(load_bin_records(dir / "nan.bin"), doctest::Contains("record 1"), ValidationError);
}

TEST_CASE("class sidecar must match the point count") {
  TempDir dir;
  write_records(dir / "three.bin", {{0, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {2, 0, 0, 0, 0}});
  write_text(dir / "labels.txt", "4\n5\n");
  auto cloud = load_bin_records(dir / "three.bin");
  CHECK_THROWS_WITH_AS(attach_class_labels(cloud, load_class_sidecar(dir / "labels.txt")),
                       doctest::Contains("label count mismatch"), ValidationError);
  write_text(dir / "labels.txt", "4\n5\n6\n");
  attach_class_labels(cloud, load_class_sidecar(dir / "labels.txt"));
  CHECK(cloud.points[2].class_id.value() == 6);
}

TEST_CASE("filter_classes keeps points outside the drop set in order") {
  const auto cloud = cloud_of({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, {1, 2, 1, 3});
  FilterConfig cfg;
  cfg.drop_class_ids = {1};
  const auto kept = filter_classes(cloud, cfg);
  REQUIRE(kept.size() == 2);
  CHECK(kept.points[0].class_id == 2);
  CHECK(kept.points[1].class_id == 3);

  cfg.drop_class_ids = {};
  CHECK(filter_classes(cloud, cfg).size() == 4);
  cfg.drop_class_ids = {1, 2, 3};
  CHECK(filter_classes(cloud, cfg).empty());

  CHECK_THROWS_AS(filter_classes(cloud_of({{0, 0, 0}}), cfg), ValidationError);
}

TEST_CASE("ground filter uses a strict threshold") {
  const auto cloud = cloud_of({{0, 0, -2.0}, {0, 0, -1.563}, {0, 0, 0.5}});
  const auto split = ground_filter(cloud, FilterConfig{});
  REQUIRE(split.floor.size() == 1);
  CHECK(split.floor.points[0].position.z == -2.0);
  REQUIRE(split.obstacles.size() == 2);
  CHECK(split.obstacles.points[0].position.z == -1.563);

  const auto above = ground_filter(cloud_of({{0, 0, 1}, {0, 0, 2}}), FilterConfig{});
  CHECK(above.floor.empty());
}

TEST_CASE("ground filter partitions every point exactly once") {
  std::mt19937_64 rng(3);
  const auto pts = lidarsdf::testing::random_points(500, rng, -4.0, 4.0);
  const auto split = ground_filter(cloud_of(pts), FilterConfig{});
  std::size_t below = 0;
  for (const auto& p : pts) below += p.z < -1.563 ? 1 : 0;
  CHECK(split.floor.size() == below);
  CHECK(split.floor.size() + split.obstacles.size() == pts.size());
}

TEST_CASE("class and ground filters commute") {
  std::mt19937_64 rng(11);
  const auto pts = lidarsdf::testing::random_points(300, rng, -4.0, 4.0);
  std::vector<int> classes(pts.size());
  std::uniform_int_distribution<int> cls(0, 5);
  for (auto& c : classes) c = cls(rng);
  FilterConfig cfg;
  cfg.drop_class_ids = {0, 3};
  const auto cloud = cloud_of(pts, classes);
  const auto a = ground_filter(filter_classes(cloud, cfg), cfg).obstacles;
  const auto b = filter_classes(ground_filter(cloud, cfg).obstacles, cfg);
  CHECK(a.positions() == b.positions());
}

TEST_CASE("directed Hausdorff distance") {
  CHECK(directed_hausdorff(cloud_of({{0, 0, 0}}), cloud_of({{3, 4, 0}})) == 5.0);
  std::mt19937_64 rng(5);
  const auto pts = lidarsdf::testing::random_points(40, rng);
  CHECK(directed_hausdorff(cloud_of(pts), cloud_of(pts)) == 0.0);
  CHECK_THROWS_AS(directed_hausdorff(PointCloud{}, cloud_of(pts)), ValidationError);
}

TEST_CASE("directed Hausdorff matches the double loop on random clouds") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = lidarsdf::testing::random_points(50, rng);
    const auto b = lidarsdf::testing::random_points(50, rng);
    CHECK(directed_hausdorff(cloud_of(a), cloud_of(b)) == hausdorff_double_loop(a, b));
    CHECK(directed_hausdorff(cloud_of(a), cloud_of(b)) >= 0.0);
  }
}

TEST_CASE("scene change gate") {
  const auto a = cloud_of({{0, 0, 0}, {1, 0, 0}});
  FilterConfig cfg;
  CHECK_FALSE(scene_change_gate(a, a, cfg));
  CHECK(scene_change_gate(cloud_of({{0, 0, 0}}), cloud_of({{3, 4, 0}}), cfg));
  cfg.hausdorff_threshold = 1e300;
  CHECK_FALSE(scene_change_gate(cloud_of({{0, 0, 0}}), cloud_of({{3, 4, 0}}), cfg));
}

TEST_CASE("binary -> ascii -> ascii loader round-trips positions") {
  TempDir dir;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<float> u(-50.0f, 50.0f);
  std::vector<std::vector<float>> recs(64);
  for (auto& r : recs) r = {u(rng), u(rng), u(rng), u(rng), 3.0f};
  write_records(dir / "c.bin", recs);
  const auto bin = load_bin_records(dir / "c.bin");
  write_ascii_xyz(bin, dir / "c.xyz");
  const auto ascii = load_ascii_xyz(dir / "c.xyz");
  REQUIRE(ascii.size() == bin.size());
  for (std::size_t i = 0; i < bin.size(); ++i) {
    CHECK(static_cast<float>(ascii.points[i].position.x) == recs[i][0]);
    CHECK(static_cast<float>(ascii.points[i].position.y) == recs[i][1]);
    CHECK(static_cast<float>(ascii.points[i].position.z) == recs[i][2]);
  }
}
