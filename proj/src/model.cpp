// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace lidarsdf {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> activation;  // act(pre) per hidden layer
  std::vector<Eigen::MatrixXd> hidden;      // block outputs (activation + skip)
  Eigen::MatrixXd raw_output;               // 2 x B, before any squashing
  Eigen::MatrixXd output;
};

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kTanh) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}

// Derivative of the activation expressed through its output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& a, Activation act) {
  if (act == Activation::kTanh) return (1.0 - a.array().square()).matrix();
  return (a.array() > 0.0).cast<double>().matrix();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::Matrix3Xd to_matrix(std::span<const Point3> points) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    m(0, c) = points[i].x;
    m(1, c) = points[i].y;
    m(2, c) = points[i].z;
  }
  return m;
}

Eigen::Matrix3Xd positions_of(std::span<const LabeledSample> batch) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    m(0, c) = batch[i].position.x;
    m(1, c) = batch[i].position.y;
    m(2, c) = batch[i].position.z;
  }
  return m;
}

ForwardCache run_forward(const SdfModel& model, const Eigen::Matrix3Xd& points) {
  const MlpConfig& cfg = model.config();
  const ParameterSet& layers = model.layers();
  ForwardCache cache;
  cache.input = model.input_features(points);
  const std::size_t hidden = layers.size() - 1;
  cache.activation.resize(hidden);
  cache.hidden.resize(hidden);
  const Eigen::MatrixXd* prev = &cache.input;
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::MatrixXd z = layers[l].weight * *prev;
    z.colwise() += layers[l].bias;
    cache.activation[l] = activate(z, cfg.activation);
    if (cfg.skip_connections && l > 0)
      cache.hidden[l] = cache.activation[l] + *prev;
    else
      cache.hidden[l] = cache.activation[l];
    prev = &cache.hidden[l];
  }
  cache.raw_output = layers.back().weight * *prev;
  cache.raw_output.colwise() += layers.back().bias;
  cache.output = cache.raw_output;
  if (cfg.confidence_head == ConfidenceHead::kSigmoid)
    cache.output.row(1) = cache.raw_output.row(1).unaryExpr([](double x) { return sigmoid(x); });
  return cache;
}

void require_nonempty(std::span<const LabeledSample> batch, const char* what) {
  if (batch.empty()) throw ValidationError(std::string(what) + ": empty batch");
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

FourierEncoder FourierEncoder::create(double freq_scale, std::uint64_t seed) {
  if (!(freq_scale > 0.0)) throw ValidationError("model.freq_scale must be > 0");
  FourierEncoder enc;
  enc.freq_scale = freq_scale;
  enc.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, freq_scale);
  for (int r = 0; r < kFrequencies; ++r)
    for (int c = 0; c < 3; ++c) enc.frequencies(r, c) = dist(rng);
  return enc;
}

Eigen::Matrix<double, FourierEncoder::kOutputDim, 1> FourierEncoder::encode(const Point3& p) const {
  const Eigen::Matrix<double, kFrequencies, 1> v = kTwoPi * (frequencies * Eigen::Vector3d(p.x, p.y, p.z));
  Eigen::Matrix<double, kOutputDim, 1> out;
  out.head<kFrequencies>() = v.array().sin().matrix();
  out.tail<kFrequencies>() = v.array().cos().matrix();
  return out;
}

Eigen::MatrixXd FourierEncoder::encode(const Eigen::Matrix3Xd& points) const {
  const Eigen::MatrixXd v = kTwoPi * (frequencies * points);
  Eigen::MatrixXd out(kOutputDim, points.cols());
  out.topRows(kFrequencies) = v.array().sin().matrix();
  out.bottomRows(kFrequencies) = v.array().cos().matrix();
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

std::string to_string(Activation activation) { return activation == Activation::kTanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(ConfidenceHead head) { return head == ConfidenceHead::kLinear ? "linear" : "sigmoid"; }

ConfidenceHead parse_confidence_head(const std::string& name) {
  if (name == "linear") return ConfidenceHead::kLinear;
  if (name == "sigmoid") return ConfidenceHead::kSigmoid;
  throw ValidationError("unknown confidence head '" + name + "'");
}

void MlpConfig::validate() const {
  if (hidden_layers < 1) throw ValidationError("model.hidden_layers must be >= 1");
  if (hidden_width < 1) throw ValidationError("model.hidden_width must be >= 1");
  if (!(freq_scale > 0.0) || !std::isfinite(freq_scale)) throw ValidationError("model.freq_scale must be > 0");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("train.learning_rate must be > 0");
  if (!(huber_delta > 0.0)) throw ValidationError("train.huber_delta must be > 0");
  if (!(confidence_loss_weight >= 0.0)) throw ValidationError("train.confidence_loss_weight must be >= 0");
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ValidationError("train.adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ValidationError("train.adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("train.adam_eps must be > 0");
}

std::size_t expected_parameter_count(const MlpConfig& c) {
  const std::size_t w = c.hidden_width;
  const std::size_t in = c.input_dim();
  return in * w + w + (c.hidden_layers - 1) * (w * w + w) + 2 * w + 2;
}

ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out;
  out.reserve(params.size());
  for (const auto& l : params)
    out.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  return out;
}

// ---------------------------------------------------------------------------
// Model

SdfModel::SdfModel(const MlpConfig& config) : config_(config) {
  config_.validate();
  if (config_.use_encoder) encoder_ = FourierEncoder::create(config_.freq_scale, config_.seed);
  std::mt19937_64 rng(config_.seed);
  auto make_layer = [&](std::size_t in, std::size_t out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
    return layer;
  };
  const std::size_t w = config_.hidden_width;
  layers_.push_back(make_layer(config_.input_dim(), w));
  for (std::size_t l = 1; l < config_.hidden_layers; ++l) layers_.push_back(make_layer(w, w));
  layers_.push_back(make_layer(w, 2));
}

SdfModel::SdfModel(const MlpConfig& config, FourierEncoder encoder, ParameterSet layers)
    : config_(config), encoder_(std::move(encoder)), layers_(std::move(layers)) {
  config_.validate();
  const auto w = static_cast<Eigen::Index>(config_.hidden_width);
  if (layers_.size() != config_.hidden_layers + 1) throw ValidationError("model: layer count does not match config");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Eigen::Index in = l == 0 ? static_cast<Eigen::Index>(config_.input_dim()) : w;
    const Eigen::Index out = l + 1 == layers_.size() ? 2 : w;
    if (layers_[l].weight.rows() != out || layers_[l].weight.cols() != in || layers_[l].bias.size() != out)
      throw ValidationError("model: layer " + std::to_string(l) + " has the wrong shape");
  }
}

std::size_t SdfModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool SdfModel::parameters_finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

Eigen::MatrixXd SdfModel::input_features(const Eigen::Matrix3Xd& points) const {
  if (config_.use_encoder) return encoder_.encode(points);
  return points;
}

SdfPrediction SdfModel::forward(const Point3& p) const {
  Eigen::Matrix3Xd m(3, 1);
  m << p.x, p.y, p.z;
  const ForwardCache cache = run_forward(*this, m);
  const SdfPrediction out{cache.output(0, 0), cache.output(1, 0)};
  if (!std::isfinite(out.sdf) || !std::isfinite(out.confidence)) {
    if (!parameters_finite()) throw Error("forward: non-finite model parameter");
  }
  return out;
}

Eigen::Matrix2Xd SdfModel::forward_batch(std::span<const Point3> points) const {
  if (points.empty()) return Eigen::Matrix2Xd(2, 0);
  ForwardCache cache = run_forward(*this, to_matrix(points));
  if (!cache.output.allFinite() && !parameters_finite()) throw Error("forward: non-finite model parameter");
  return cache.output;
}

// ---------------------------------------------------------------------------
// Loss and gradients

double huber(double residual, double delta) {
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * (a - 0.5 * delta);
}

double huber_derivative(double residual, double delta) {
  if (std::abs(residual) <= delta) return residual;
  return residual > 0.0 ? delta : -delta;
}

double batch_loss(const SdfModel& model, std::span<const LabeledSample> batch, const TrainConfig& tc) {
  require_nonempty(batch, "batch_loss");
  const ForwardCache cache = run_forward(model, positions_of(batch));
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    total += huber(cache.output(0, c) - batch[i].sdf, tc.huber_delta) +
             tc.confidence_loss_weight * huber(cache.output(1, c) - batch[i].confidence, tc.huber_delta);
  }
  return total / static_cast<double>(batch.size());
}

ParameterSet gradients(const SdfModel& model, std::span<const LabeledSample> batch, const TrainConfig& tc,
                       double* loss) {
  require_nonempty(batch, "gradients");
  const MlpConfig& cfg = model.config();
  const ParameterSet& layers = model.layers();
  const ForwardCache cache = run_forward(model, positions_of(batch));
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  Eigen::MatrixXd d_out(2, n);
  double total = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& s = batch[static_cast<std::size_t>(c)];
    const double r_sdf = cache.output(0, c) - s.sdf;
    const double r_conf = cache.output(1, c) - s.confidence;
    total += huber(r_sdf, tc.huber_delta) + tc.confidence_loss_weight * huber(r_conf, tc.huber_delta);
    d_out(0, c) = huber_derivative(r_sdf, tc.huber_delta) * inv_n;
    double g_conf = tc.confidence_loss_weight * huber_derivative(r_conf, tc.huber_delta) * inv_n;
    if (cfg.confidence_head == ConfidenceHead::kSigmoid) {
      const double y = cache.output(1, c);
      g_conf *= y * (1.0 - y);
    }
    d_out(1, c) = g_conf;
  }
  if (loss) *loss = total * inv_n;
  if (!d_out.allFinite()) throw TrainingDiverged("gradients: non-finite intermediate");

  ParameterSet grads = zeros_like(layers);
  const std::size_t hidden = layers.size() - 1;
  grads[hidden].weight.noalias() = d_out * cache.hidden[hidden - 1].transpose();
  grads[hidden].bias = d_out.rowwise().sum();
  Eigen::MatrixXd d_hidden = layers[hidden].weight.transpose() * d_out;

  for (std::size_t l = hidden; l-- > 0;) {
    const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.hidden[l - 1];
    const Eigen::MatrixXd d_pre = d_hidden.cwiseProduct(activation_slope(cache.activation[l], cfg.activation));
    grads[l].weight.noalias() = d_pre * below.transpose();
    grads[l].bias = d_pre.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd d_below = layers[l].weight.transpose() * d_pre;
    if (cfg.skip_connections) d_below += d_hidden;
    d_hidden = std::move(d_below);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamState AdamState::for_model(const SdfModel& model) {
  return {zeros_like(model.layers()), zeros_like(model.layers()), 0};
}

void adam_step(SdfModel& model, AdamState& state, const ParameterSet& grads, const TrainConfig& tc) {
  ParameterSet& params = model.mutable_layers();
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw ValidationError("adam_step: parameter shapes disagree");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(tc.adam_beta1, t);
  const double c2 = 1.0 - std::pow(tc.adam_beta2, t);
  const double b1 = tc.adam_beta1;
  const double b2 = tc.adam_beta2;
  const double lr = tc.learning_rate;
  const double eps = tc.adam_eps;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (param.size() != g.size() || m.size() != g.size() || v.size() != g.size())
      throw ValidationError("adam_step: parameter shapes disagree");
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, state.first_moment[l].weight, state.second_moment[l].weight, grads[l].weight);
    update(params[l].bias, state.first_moment[l].bias, state.second_moment[l].bias, grads[l].bias);
  }
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(std::span<const LabeledSample> samples, const MlpConfig& mc, const TrainConfig& tc) {
  mc.validate();
  tc.validate();
  TrainResult result{SdfModel(mc), {}};
  if (tc.epochs == 0) return result;
  if (samples.empty()) throw ValidationError("train: empty dataset");

  AdamState adam = AdamState::for_model(result.model);
  std::mt19937_64 rng(tc.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LabeledSample> batch;
  batch.reserve(tc.batch_size);

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t stop = std::min(order.size(), start + tc.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
      double loss = 0.0;
      const ParameterSet grads = gradients(result.model, batch, tc, &loss);
      if (!std::isfinite(loss))
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch starting " +
                               std::to_string(start) + " (learning rate " + std::to_string(tc.learning_rate) + ")");
      adam_step(result.model, adam, grads, tc);
      if (!result.model.parameters_finite())
        throw TrainingDiverged("train: non-finite parameter after epoch " + std::to_string(epoch + 1) +
                               " step (learning rate " + std::to_string(tc.learning_rate) + ")");
      epoch_total += loss * static_cast<double>(stop - start);
    }
    result.loss_history.push_back(epoch_total / static_cast<double>(order.size()));
  }
  return result;
}

void write_loss_csv(const std::vector<double>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write file");
  out << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, history[i]);
    out << buf;
  }
}

}  // namespace lidarsdf
