// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic scenes with exact signed distances and a simulated spinning
// LiDAR. Used as ground truth for training and reconstruction checks.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "lidarsdf/augment.hpp"
#include "lidarsdf/geometry.hpp"
#include "lidarsdf/pointcloud.hpp"

namespace lidarsdf {

struct Sphere {
  Point3 center;
  double radius = 1.0;
};

struct Box {
  Point3 center;
  Point3 half_extents{1.0, 1.0, 1.0};
};

/// Capped cylinder with a vertical (z) axis.
struct Cylinder {
  Point3 center;
  double radius = 1.0;
  double half_height = 1.0;
};

using Primitive = std::variant<Sphere, Box, Cylinder>;

/// Union of primitives. The min() of member distances is exact outside and
/// conservative inside overlapping members.
struct Scene {
  std::vector<Primitive> primitives;

  void validate() const;
  Scene translated(const Point3& offset) const;
};

double analytic_sdf(const Primitive& primitive, const Point3& p);
double analytic_sdf(const Scene& scene, const Point3& p);

/// Outward normal from central differences of the analytic field.
Point3 analytic_normal(const Scene& scene, const Point3& p, double step = 1e-6);

struct ScanConfig {
  std::size_t azimuth_steps = 128;
  std::vector<double> elevations;  // [rad]
  double max_range = 50.0;         // [m]
  Point3 origin{};

  void validate() const;
  /// Unit direction for beam (elevation index, azimuth index).
  Point3 direction(std::size_t elevation_index, std::size_t azimuth_index) const;
};

/// `count` evenly spaced elevations from `min_deg` to `max_deg` inclusive.
std::vector<double> elevation_fan(double min_deg, double max_deg, std::size_t count);

/// Sphere(center (6, 2, 0), r 1) and box(center (8, -3, 0), half extents (2, 1, 1)).
Scene street_scene();
/// 128 azimuth steps x 16 beams between -12 and +12 degrees, origin at 0.
ScanConfig street_scan();

inline constexpr double kSurfaceThreshold = 1e-4;  // [m]

struct TraceResult {
  bool hit = false;
  double t = 0.0;
  Point3 point;
  std::size_t steps = 0;
};

/// Sphere tracing: advance by the current distance until it drops below
/// kSurfaceThreshold or the ray leaves max_range.
TraceResult sphere_trace(const Scene& scene, const Point3& origin, const Point3& direction, double max_range);

/// One point per beam that hits, ordered by (elevation, azimuth).
PointCloud simulate_scan(const Scene& scene, const ScanConfig& config);

struct OracleDataset {
  Dataset dataset;
  std::vector<double> true_sdf;  // analytic distance at every sample
};

OracleDataset oracle_dataset(const Scene& scene, const ScanConfig& config, const SampleSpec& spec,
                             AugmentMethod method = AugmentMethod::kGaussian,
                             const ConfidenceParams& conf_params = {});

/// JSON scene document, see docs/formats.md.
Scene load_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& json_text);
std::string scene_to_json(const Scene& scene);

}  // namespace lidarsdf
