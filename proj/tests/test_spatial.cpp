// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "lidarsdf/spatial.hpp"
#include "test_util.hpp"

using namespace lidarsdf;

TEST_CASE("single point index") {
  const std::vector<Point3> pts = {{0, 0, 0}};
  const auto index = build_index(pts, 1);
  CHECK(index.leaf_count() == 1);
  const auto hit = nearest(index, {1, 0, 0});
  CHECK(hit.point == Point3{0, 0, 0});
  CHECK(hit.distance == 1.0);
  CHECK(nearest_bruteforce(pts, {1, 0, 0}).distance == 1.0);
  CHECK(nearest_bruteforce(pts, {-7, 3, 2}).point == Point3{0, 0, 0});
}

TEST_CASE("query at an indexed point has zero distance") {
  std::mt19937_64 rng(1);
  const auto pts = lidarsdf::testing::random_points(200, rng);
  const auto index = build_index(pts, 4);
  CHECK(nearest(index, pts[37]).distance == 0.0);
  CHECK(nearest(index, pts[37]).index == 37);
}

TEST_CASE("leaves hold at most leaf_capacity points and cover the input") {
  std::mt19937_64 rng(2);
  const auto pts = lidarsdf::testing::random_points(100, rng);
  const auto index = build_index(pts, 2);
  std::vector<std::size_t> all;
  for (const auto& leaf : index.leaves()) {
    CHECK(leaf.size() <= 2);
    CHECK_FALSE(leaf.empty());
    all.insert(all.end(), leaf.begin(), leaf.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(pts.size());
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  CHECK(all == expected);
}

TEST_CASE("default capacity gives about fifty leaves") {
  std::mt19937_64 rng(3);
  const auto pts = lidarsdf::testing::random_points(1000, rng);
  const auto index = build_index(pts, default_leaf_capacity(pts.size()));
  CHECK(default_leaf_capacity(1000) == 20);
  CHECK(index.leaf_count() >= 50);
  CHECK(index.leaf_count() <= 64);
}

TEST_CASE("ties break toward the lowest insertion index") {
  const std::vector<Point3> pts = {{5, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
  CHECK(nearest_bruteforce(pts, {0, 0, 0}).index == 1);
  const auto index = build_index(pts, 1);
  CHECK(nearest(index, {0, 0, 0}).index == 1);

  // Duplicates and symmetric lattices stress the far-side tie handling.
  std::vector<Point3> lattice;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      for (int k = 0; k < 2; ++k) lattice.push_back({double(i), double(j), 0.0});
  const auto lidx = build_index(lattice, 3);
  for (int i = -6; i <= 6; ++i)
    for (int j = -6; j <= 6; ++j) {
      const Point3 q{i * 0.5, j * 0.5, 0.25};
      const auto a = nearest(lidx, q);
      const auto b = nearest_bruteforce(lattice, q);
      CHECK(a.index == b.index);
      CHECK(a.distance == b.distance);
    }
}

TEST_CASE("kd-tree matches brute force exactly on random instances") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> size(1, 2000);
  std::uniform_int_distribution<std::size_t> cap(1, 64);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = lidarsdf::testing::random_points(size(rng), rng);
    const auto index = build_index(pts, cap(rng));
    const auto queries = lidarsdf::testing::random_points(300, rng, -12.0, 12.0);
    for (const auto& q : queries) {
      const auto a = nearest(index, q);
      const auto b = nearest_bruteforce(pts, q);
      REQUIRE(a.distance == b.distance);
      REQUIRE(a.index == b.index);
    }
  }
}

TEST_CASE("build is deterministic") {
  std::mt19937_64 rng(5);
  const auto pts = lidarsdf::testing::random_points(777, rng);
  const auto a = build_index(pts, 7);
  const auto b = build_index(pts, 7);
  CHECK(a.leaves() == b.leaves());
  REQUIRE(a.nodes().size() == b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    CHECK(a.nodes()[i].axis == b.nodes()[i].axis);
    CHECK(a.nodes()[i].split == b.nodes()[i].split);
  }
}

TEST_CASE("query cost stays well below a linear scan") {
  std::mt19937_64 rng(6);
  const std::size_t n = 100000;
  const auto pts = lidarsdf::testing::random_points(n, rng);
  const auto index = build_index(pts, default_leaf_capacity(n));
  const auto queries = lidarsdf::testing::random_points(200, rng);
  std::size_t visited = 0;
  for (const auto& q : queries) index.nearest(q, visited);
  CHECK(static_cast<double>(visited) / queries.size() < n / 10.0);
}

TEST_CASE("empty input and zero capacity are rejected") {
  CHECK_THROWS_AS(build_index(std::vector<Point3>{}, 4), ValidationError);
  CHECK_THROWS_AS(build_index(std::vector<Point3>{{0, 0, 0}}, 0), ValidationError);
  CHECK_THROWS_AS(nearest_bruteforce(std::vector<Point3>{}, {0, 0, 0}), ValidationError);
}
