// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lidarsdf/config.hpp"

namespace lidarsdf {

inline constexpr const char* kVersion = "0.1.0";

/// Provenance record written next to every stage's outputs. Passing the file
/// back through --config reproduces the stage.
struct Manifest {
  std::string stage;
  ExperimentConfig config;
  std::map<std::string, std::string> inputs;     // role -> path
  std::map<std::string, std::string> artifacts;  // role -> file name
  nlohmann::json results = nlohmann::json::object();
  std::string started;
  std::string finished;
};

std::string utc_timestamp();
nlohmann::json manifest_to_json(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& dir);

/// FNV-1a over the serialized dataset; equal hashes mean identical samples.
std::uint64_t dataset_hash(const Dataset& dataset);
std::uint64_t samples_hash(const std::vector<LabeledSample>& samples);
std::string hex_hash(std::uint64_t h);

// ---------------------------------------------------------------- stages

struct IngestResult {
  PointCloud obstacles;
  PointCloud floor;
  std::size_t dropped_by_class = 0;
  std::optional<double> hausdorff_to_previous;
  std::optional<bool> scene_changed;
};

/// Optional class filtering, scene-change gate against `previous`, then the
/// ground split.
IngestResult ingest(const PointCloud& cloud, const FilterConfig& filter,
                    const std::optional<PointCloud>& previous = std::nullopt);

/// Obstacle cloud for a synthetic scene: simulated scan followed by ingest.
PointCloud scene_obstacles(const Scene& scene, const ExperimentConfig& config);

Dataset augment(const PointCloud& obstacles, const ExperimentConfig& config);
Dataset augment(const PointCloud& obstacles, const ExperimentConfig& config, AugmentMethod method);

struct HoldoutSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

/// Seeded shuffle, then the first (1 - fraction) of samples train.
HoldoutSplit split_dataset(const Dataset& dataset, double holdout_fraction, std::uint64_t seed);

struct ShellEvaluation {
  std::size_t samples = 0;
  double sign_agreement = 0.0;
  double mean_abs_error = 0.0;
  double within_tolerance = 0.0;  // fraction with |error| < 0.15 m
};

/// Monte-Carlo shell around the observed surfaces: a random scan hit is
/// pushed along the analytic normal by U(-h, h); points whose true distance
/// exceeds h are redrawn.
ShellEvaluation evaluate_shell(const SdfModel& model, const Scene& scene, const PointCloud& scan_hits,
                               const EvaluationSettings& settings, std::uint64_t seed);

// ----------------------------------------------------- comparative studies

struct ScatterRow {
  double sdf_label = 0.0;
  double sdf_pred = 0.0;
  double conf_pred = 0.0;
  bool valid = true;
};

bool confidence_valid(double confidence);

struct AugmentationArm {
  AugmentMethod method = AugmentMethod::kGaussian;
  std::string dataset_hash;
  std::string evaluation_hash;
  double final_huber_loss = 0.0;  // held-out loss on this arm's split
  std::vector<double> loss_history;
  std::vector<ScatterRow> scatter;
};

struct AugmentationComparison {
  std::vector<AugmentationArm> arms;  // uniform, gaussian
  std::vector<LabeledSample> evaluation;

  /// Negative-sdf evaluation samples with predicted confidence below zero.
  std::size_t negative_confidence_count(std::size_t arm) const;
};

/// Pooled held-out samples of both arms form the common evaluation set.
AugmentationComparison compare_augmentation(const PointCloud& obstacles, const ExperimentConfig& config);

struct SweepRow {
  std::size_t layers = 0;
  bool skip = false;
  std::size_t params = 0;
  double final_test_loss = 0.0;
  std::string dataset_hash;
};

std::vector<SweepRow> sweep_depth(const PointCloud& obstacles, const ExperimentConfig& config, unsigned threads);

struct EncoderRow {
  std::string model;  // "ANN" or "ANN+FF"
  AugmentMethod augmentation = AugmentMethod::kGaussian;
  double final_huber_loss = 0.0;
  std::string dataset_hash;
};

std::vector<EncoderRow> compare_encoder(const PointCloud& obstacles, const ExperimentConfig& config,
                                        unsigned threads);

// ------------------------------------------------------------- artifacts

void write_scatter_csv(const std::vector<ScatterRow>& rows, const std::filesystem::path& path);
void write_augmentation_csv(const AugmentationComparison& cmp, const std::filesystem::path& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
void write_encoder_csv(const std::vector<EncoderRow>& rows, const std::filesystem::path& path);

/// Runs independent jobs on up to `threads` workers; results land by index.
void run_parallel(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

}  // namespace lidarsdf
