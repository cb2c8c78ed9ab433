// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Neural signed distance field: random Fourier feature encoder followed by a
// fully connected network with a two-unit head (signed distance, confidence).
// Gradients are computed analytically; the optimizer is Adam.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidarsdf/augment.hpp"
#include "lidarsdf/geometry.hpp"

namespace lidarsdf {

/// Maps p to [sin(2π B p), cos(2π B p)] with a frozen 32x3 matrix B whose
/// entries are drawn from N(0, freq_scale²).
struct FourierEncoder {
  static constexpr int kFrequencies = 32;
  static constexpr int kOutputDim = 2 * kFrequencies;

  Eigen::Matrix<double, kFrequencies, 3> frequencies = Eigen::Matrix<double, kFrequencies, 3>::Zero();
  double freq_scale = 1.0;
  std::uint64_t seed = 0;

  static FourierEncoder create(double freq_scale, std::uint64_t seed);

  Eigen::Matrix<double, kOutputDim, 1> encode(const Point3& p) const;
  /// Column-wise encoding of a 3xN matrix into a 64xN matrix.
  Eigen::MatrixXd encode(const Eigen::Matrix3Xd& points) const;
};

inline Eigen::Matrix<double, FourierEncoder::kOutputDim, 1> encode(const FourierEncoder& encoder, const Point3& p) {
  return encoder.encode(p);
}

enum class Activation { kTanh, kRelu };
enum class ConfidenceHead { kLinear, kSigmoid };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& name);
std::string to_string(ConfidenceHead head);
ConfidenceHead parse_confidence_head(const std::string& name);

struct MlpConfig {
  std::size_t hidden_layers = 3;
  std::size_t hidden_width = 64;
  Activation activation = Activation::kTanh;
  bool skip_connections = false;
  bool use_encoder = true;  // false feeds raw xyz to the first layer
  double freq_scale = 1.0;  // [1/m]
  // Linear reproduces unconstrained confidence outputs; sigmoid keeps them in (0, 1).
  ConfidenceHead confidence_head = ConfidenceHead::kLinear;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t input_dim() const { return use_encoder ? FourierEncoder::kOutputDim : 3; }
  bool operator==(const MlpConfig&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Weights and biases of every layer, first hidden layer first and the
/// two-unit head last. Also used for gradients and optimizer moments.
using ParameterSet = std::vector<DenseLayer>;

ParameterSet zeros_like(const ParameterSet& params);

/// in*w + w + (L-1)(w² + w) + 2w + 2 with in = 64 (encoder) or 3.
std::size_t expected_parameter_count(const MlpConfig& config);

struct SdfPrediction {
  double sdf = 0.0;
  double confidence = 0.0;
};

class SdfModel {
 public:
  /// Seeded initialization: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  explicit SdfModel(const MlpConfig& config);
  /// Assembles a model from explicit parameters; throws on shape mismatch.
  SdfModel(const MlpConfig& config, FourierEncoder encoder, ParameterSet layers);

  const MlpConfig& config() const { return config_; }
  const FourierEncoder& encoder() const { return encoder_; }
  const ParameterSet& layers() const { return layers_; }
  ParameterSet& mutable_layers() { return layers_; }

  std::size_t parameter_count() const;
  bool parameters_finite() const;

  SdfPrediction forward(const Point3& p) const;
  /// Row 0: signed distance, row 1: confidence; one column per point.
  Eigen::Matrix2Xd forward_batch(std::span<const Point3> points) const;

  /// Network input for a 3xN batch of positions.
  Eigen::MatrixXd input_features(const Eigen::Matrix3Xd& points) const;

 private:
  MlpConfig config_;
  FourierEncoder encoder_;
  ParameterSet layers_;
};

inline SdfPrediction forward(const SdfModel& model, const Point3& p) { return model.forward(p); }

struct TrainConfig {
  double learning_rate = 0.4;
  double huber_delta = 1.0;             // [m]
  double confidence_loss_weight = 1.0;  // weight of the confidence term
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 0.5 r² inside |r| <= delta, delta (|r| - delta/2) outside.
double huber(double residual, double delta);
double huber_derivative(double residual, double delta);

/// Mean over the batch of huber(sdf error) + weight * huber(confidence error).
double batch_loss(const SdfModel& model, std::span<const LabeledSample> batch, const TrainConfig& tc);

/// Analytic gradient of batch_loss. The encoder matrix is frozen and has no
/// gradient. When `loss` is non-null it receives the batch loss.
ParameterSet gradients(const SdfModel& model, std::span<const LabeledSample> batch, const TrainConfig& tc,
                       double* loss = nullptr);

struct AdamState {
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;

  static AdamState for_model(const SdfModel& model);
};

/// One bias-corrected Adam update of every parameter.
void adam_step(SdfModel& model, AdamState& state, const ParameterSet& grads, const TrainConfig& tc);

/// Raised when the loss or a parameter becomes non-finite.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

struct TrainResult {
  SdfModel model;
  std::vector<double> loss_history;  // mean training loss per epoch
};

TrainResult train(std::span<const LabeledSample> samples, const MlpConfig& mc, const TrainConfig& tc);
inline TrainResult train(const Dataset& dataset, const MlpConfig& mc, const TrainConfig& tc) {
  return train(dataset.samples, mc, tc);
}

/// CSV with header `epoch,mean_loss`; epochs are 1-based.
void write_loss_csv(const std::vector<double>& history, const std::filesystem::path& path);

// Checkpoints. See docs/checkpoint_format.md for the byte layout.
void save_checkpoint(const SdfModel& model, const std::filesystem::path& path);
/// When `expected` is given, its architecture must match the stored one.
SdfModel load_checkpoint(const std::filesystem::path& path, const std::optional<MlpConfig>& expected = std::nullopt);

}  // namespace lidarsdf
