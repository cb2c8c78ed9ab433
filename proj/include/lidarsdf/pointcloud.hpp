// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// LiDAR point cloud loading, class/ground filtering and scan similarity.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <vector>

#include "lidarsdf/geometry.hpp"

namespace lidarsdf {

struct CloudPoint {
  Point3 position;
  std::optional<int> class_id;
  std::optional<double> intensity;
  std::optional<int> ring;
};

struct PointCloud {
  std::vector<CloudPoint> points;
  Point3 sensor_origin{};
  std::optional<std::int64_t> timestamp;  // microseconds

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::vector<Point3> positions() const;
};

struct FilterConfig {
  std::set<int> drop_class_ids;        // background + ego classes
  double ground_z_threshold = -1.563;  // sensor mounting height [m]
  double hausdorff_threshold = 0.5;    // [m]

  void validate() const;
};

/// Binary record layout. Field offsets are in floats; -1 marks an absent field.
struct RecordLayout {
  std::size_t floats_per_record = 5;
  int x = 0;
  int y = 1;
  int z = 2;
  int intensity = 3;
  int ring = 4;

  std::size_t record_bytes() const { return floats_per_record * 4; }
};

/// Parses whitespace-separated `x y z [intensity] [class_id]` lines. Lines
/// starting with `#` are comments, except `# origin x y z` which sets the
/// sensor origin.
PointCloud load_ascii_xyz(const std::filesystem::path& path);

/// Writes the format read by load_ascii_xyz, including the origin header.
/// Intensity and class columns are emitted when every point carries them.
void write_ascii_xyz(const PointCloud& cloud, const std::filesystem::path& path);

/// Reads little-endian float32 records.
PointCloud load_bin_records(const std::filesystem::path& path, const RecordLayout& layout = {});

/// Newline-separated decimal class ids, one per point.
std::vector<int> load_class_sidecar(const std::filesystem::path& path);

/// Throws "label count mismatch" when the counts disagree.
void attach_class_labels(PointCloud& cloud, const std::vector<int>& class_ids);

PointCloud filter_classes(const PointCloud& cloud, const FilterConfig& config);

struct GroundSplit {
  PointCloud obstacles;
  PointCloud floor;
};

/// Strict comparison: a point exactly at the threshold is an obstacle.
GroundSplit ground_filter(const PointCloud& cloud, const FilterConfig& config);

/// max_{p in a} min_{q in b} |p - q|. Not symmetric.
double directed_hausdorff(const PointCloud& a, const PointCloud& b);

/// True when `curr` moved away from `prev` by more than the threshold.
bool scene_change_gate(const PointCloud& prev, const PointCloud& curr, const FilterConfig& config);

}  // namespace lidarsdf
