// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "lidarsdf/augment.hpp"
#include "lidarsdf/confidence.hpp"
#include "lidarsdf/model.hpp"
#include "lidarsdf/pointcloud.hpp"
#include "lidarsdf/reconstruct.hpp"
#include "lidarsdf/synthetic.hpp"

namespace lidarsdf {

struct ScanSettings {
  std::size_t azimuth_steps = 128;
  double elevation_min_deg = -12.0;
  double elevation_max_deg = 12.0;
  std::size_t elevation_count = 16;
  double max_range = 50.0;
  Point3 origin{};

  ScanConfig resolve() const;
};

struct EvaluationSettings {
  double holdout_fraction = 0.2;
  std::size_t shell_samples = 5000;
  double shell_halfwidth = 0.5;  // [m]
};

struct ExtractSettings {
  Bounds3 bounds{{3.0, -6.0, -2.0}, {12.0, 5.0, 2.0}};
  GridResolution resolution{91, 111, 41};
  double iso = 0.0;
};

struct SliceSettings {
  double z = 0.0;
  SliceBounds bounds{4.0, 11.0, -5.0, 4.0};
  std::size_t nx = 141;
  std::size_t ny = 181;
  double shade_range = 1.0;
};

struct SweepSettings {
  std::size_t min_layers = 1;
  std::size_t max_layers = 20;
  std::size_t hidden_width = 64;
  Activation activation = Activation::kRelu;
};

/// Everything a stage needs, loaded from one JSON document. A single master
/// seed drives sampling, initialization, shuffling and the held-out split.
struct ExperimentConfig {
  std::string experiment_id = "street-benchmark";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  ScanSettings scan;
  FilterConfig filter;
  AugmentMethod method = AugmentMethod::kGaussian;
  SampleSpec sample;
  ConfidenceParams confidence;
  MlpConfig model;
  TrainConfig training;
  EvaluationSettings evaluation;
  ExtractSettings extract;
  SliceSettings slice;
  SweepSettings sweep;

  ExperimentConfig();

  /// Copies `seed` into every seeded sub-config and ties the confidence
  /// d_max to the sampling truncation. Called after every change.
  void resolve();
  void set_seed(std::uint64_t value);
  void validate() const;
};

/// Parses a config document or a manifest (whose "config" member is used).
/// Missing keys keep their defaults; unknown keys and bad values raise
/// ValidationError naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace lidarsdf
