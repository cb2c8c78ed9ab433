// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact nearest-neighbor search over obstacle surface points.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lidarsdf/geometry.hpp"

namespace lidarsdf {

struct NearestResult {
  Point3 point;
  double distance = 0.0;
  std::size_t index = 0;  // insertion order of `point`
};

/**
 * KD-tree with axis-aligned median splits on the widest-spread axis.
 *
 * Nearest queries are exact and break distance ties toward the lowest
 * insertion index, so results are identical to a linear scan. The tree is
 * immutable after construction and safe for concurrent queries.
 */
class SurfaceIndex {
 public:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t begin = 0;  // range into order_ (leaves only)
    std::uint32_t end = 0;

    bool is_leaf() const { return axis < 0; }
  };

  SurfaceIndex(std::vector<Point3> points, std::size_t leaf_capacity);

  NearestResult nearest(const Point3& query) const;
  /// Same query, additionally counting visited nodes into `nodes_visited`.
  NearestResult nearest(const Point3& query, std::size_t& nodes_visited) const;

  std::size_t size() const { return points_.size(); }
  std::size_t leaf_capacity() const { return leaf_capacity_; }
  std::size_t leaf_count() const;
  const std::vector<Point3>& points() const { return points_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Insertion indices stored in each leaf, in tree order.
  std::vector<std::vector<std::size_t>> leaves() const;

 private:
  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Point3& query, double& best_d2, std::size_t& best,
              std::size_t& visited) const;

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_capacity_;
};

SurfaceIndex build_index(std::span<const Point3> points, std::size_t leaf_capacity);

/// ceil(n / 50): roughly fifty leaves for any cloud size.
std::size_t default_leaf_capacity(std::size_t point_count);

inline NearestResult nearest(const SurfaceIndex& index, const Point3& query) {
  return index.nearest(query);
}

/// Linear scan with the same contract as SurfaceIndex::nearest.
NearestResult nearest_bruteforce(std::span<const Point3> points, const Point3& query);

}  // namespace lidarsdf
