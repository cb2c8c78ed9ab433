// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/spatial.hpp"

#include <algorithm>
#include <limits>

namespace lidarsdf {

SurfaceIndex::SurfaceIndex(std::vector<Point3> points, std::size_t leaf_capacity)
    : points_(std::move(points)), leaf_capacity_(leaf_capacity) {
  if (points_.empty()) throw ValidationError("build_index: empty point set");
  if (leaf_capacity_ < 1) throw ValidationError("build_index: leaf_capacity must be >= 1");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("build_index: too many points");
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * (points_.size() / leaf_capacity_ + 1));
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t SurfaceIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{});
  if (end - begin <= leaf_capacity_) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Point3 lo = points_[order_[begin]];
  Point3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Point3& p = points_[order_[i]];
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  int axis = 0;
  double spread = hi.x - lo.x;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > spread) {
      spread = hi[a] - lo[a];
      axis = a;
    }
  }

  // Lower half takes the extra point on odd counts; equal coordinates are
  // ordered by insertion index so the build is deterministic.
  const std::uint32_t mid = begin + (end - begin + 1) / 2;
  auto less = [&](std::uint32_t a, std::uint32_t b) {
    const double ca = points_[a][axis];
    const double cb = points_[b][axis];
    return ca < cb || (ca == cb && a < b);
  };
  std::nth_element(order_.begin() + begin, order_.begin() + (mid - 1), order_.begin() + end, less);

  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid - 1]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

NearestResult SurfaceIndex::nearest(const Point3& query) const {
  std::size_t visited = 0;
  return nearest(query, visited);
}

NearestResult SurfaceIndex::nearest(const Point3& query, std::size_t& nodes_visited) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  search(0, query, best_d2, best, nodes_visited);
  return {points_[best], std::sqrt(best_d2), best};
}

void SurfaceIndex::search(std::uint32_t node_id, const Point3& query, double& best_d2,
                          std::size_t& best, std::size_t& visited) const {
  ++visited;
  const Node& node = nodes_[node_id];
  if (node.is_leaf()) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = squared_distance(points_[idx], query);
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  const bool go_left = diff <= 0.0;
  search(go_left ? node.left : node.right, query, best_d2, best, visited);
  // Equality still descends: an equidistant point with a lower index may
  // live on the far side.
  if (diff * diff <= best_d2) search(go_left ? node.right : node.left, query, best_d2, best, visited);
}

std::size_t SurfaceIndex::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::vector<std::vector<std::size_t>> SurfaceIndex::leaves() const {
  std::vector<std::vector<std::size_t>> out;
  for (const Node& n : nodes_) {
    if (!n.is_leaf()) continue;
    out.emplace_back(order_.begin() + n.begin, order_.begin() + n.end);
  }
  return out;
}

SurfaceIndex build_index(std::span<const Point3> points, std::size_t leaf_capacity) {
  return SurfaceIndex(std::vector<Point3>(points.begin(), points.end()), leaf_capacity);
}

std::size_t default_leaf_capacity(std::size_t point_count) {
  return std::max<std::size_t>(1, (point_count + 49) / 50);
}

NearestResult nearest_bruteforce(std::span<const Point3> points, const Point3& query) {
  if (points.empty()) throw ValidationError("nearest_bruteforce: empty point set");
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = squared_distance(points[i], query);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {points[best], std::sqrt(best_d2), best};
}

}  // namespace lidarsdf
