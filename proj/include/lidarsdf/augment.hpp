// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-sample generation along LiDAR rays.
//
// Every obstacle point defines a ray from the sensor origin. Samples before
// the hit are free space (positive), samples past it are behind the surface
// (negative, truncated at `truncation_dmax`). The sign comes from the side of
// the hit a sample was drawn on; the magnitude is the distance to the nearest
// surface point anywhere in the cloud.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lidarsdf/confidence.hpp"
#include "lidarsdf/geometry.hpp"
#include "lidarsdf/pointcloud.hpp"
#include "lidarsdf/spatial.hpp"

namespace lidarsdf {

struct Ray {
  Point3 origin;
  Point3 direction;  // unit length
  double t_hit = 0.0;

  Point3 at(double t) const { return origin + direction * t; }
};

struct SampleSpec {
  std::size_t n_positive = 4;
  std::size_t n_negative = 4;
  double truncation_dmax = 3.0;  // [m]
  double gaussian_sigma = 0.5;   // [m]
  std::uint64_t seed = 0;

  void validate() const;
};

enum class AugmentMethod { kUniform, kGaussian };

std::string to_string(AugmentMethod method);
AugmentMethod parse_augment_method(const std::string& name);

enum class SampleSide { kPositive, kNegative };

struct TaggedPoint {
  Point3 position;
  SampleSide side = SampleSide::kPositive;
  double t = 0.0;
  std::size_t ray = 0;
};

enum class SampleKind : std::uint8_t { kSurface, kPositive, kNegative };

struct LabeledSample {
  static constexpr std::size_t kUnknownRay = static_cast<std::size_t>(-1);

  Point3 position;
  double sdf = 0.0;
  double confidence = 1.0;
  std::size_t source_ray = kUnknownRay;
  SampleKind kind = SampleKind::kSurface;
};

struct Dataset {
  std::vector<LabeledSample> samples;  // surface samples first
  SampleSpec spec;
  AugmentMethod method = AugmentMethod::kGaussian;
  ConfidenceParams confidence;
  std::size_t surface_count = 0;

  std::size_t size() const { return samples.size(); }
};

/// One ray per obstacle point, ordered like the cloud.
std::vector<Ray> rays_from_cloud(const PointCloud& obstacles);

/// Generator used for ray `ray_index`: seeded with `seed ^ ray_index` so
/// results do not depend on processing order.
std::mt19937_64 ray_generator(std::uint64_t seed, std::size_t ray_index);

/// t ~ U(0, t_hit) for positives, t ~ U(t_hit, t_hit + dmax) for negatives.
std::vector<TaggedPoint> sample_uniform(const Ray& ray, const SampleSpec& spec, std::mt19937_64& rng,
                                        std::size_t ray_index = 0);

/// n_positive + n_negative draws of t ~ N(t_hit, sigma), rejected until
/// t lies in (0, t_hit + dmax], then tagged by side of t_hit.
std::vector<TaggedPoint> sample_gaussian(const Ray& ray, const SampleSpec& spec, std::mt19937_64& rng,
                                         std::size_t ray_index = 0);

std::vector<LabeledSample> label_samples(std::span<const TaggedPoint> positions, const SurfaceIndex& index,
                                         std::span<const Ray> rays, const SampleSpec& spec,
                                         const ConfidenceParams& conf_params);

/// Surface points (sdf 0, confidence 1) followed by the labeled augmented
/// samples of every ray, in ray order. Pure function of its arguments.
Dataset build_dataset(const PointCloud& obstacles, const SampleSpec& spec, AugmentMethod method,
                      const ConfidenceParams& conf_params);

/// Text export: a `#` header with the generation parameters, then one
/// `x y z sdf confidence` record per line at 9 significant digits.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace lidarsdf
