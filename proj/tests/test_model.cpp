// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "lidarsdf/model.hpp"
#include "lidarsdf/synthetic.hpp"
#include "test_util.hpp"

using namespace lidarsdf;

namespace {

std::vector<LabeledSample> random_batch(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<LabeledSample> out(n);
  for (auto& s : out) {
    s.position = {u(rng), u(rng), u(rng)};
    s.sdf = u(rng);
    s.confidence = 0.5 + 0.3 * u(rng);
  }
  return out;
}

// Central finite differences over every weight and bias.
double max_gradient_error(SdfModel model, const std::vector<LabeledSample>& batch, const TrainConfig& tc) {
  const ParameterSet analytic = gradients(model, batch, tc);
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + kStep;
    const double up = batch_loss(model, batch, tc);
    param = saved - kStep;
    const double down = batch_loss(model, batch, tc);
    param = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double scale = std::max({std::abs(grad), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(grad - numeric) / scale);
  };
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (Eigen::Index i = 0; i < layers[l].weight.size(); ++i) check(layers[l].weight.data()[i], analytic[l].weight.data()[i]);
    for (Eigen::Index i = 0; i < layers[l].bias.size(); ++i) check(layers[l].bias(i), analytic[l].bias(i));
  }
  return worst;
}

MlpConfig small_config(Activation act, bool skip, std::uint64_t seed) {
  MlpConfig mc;
  mc.hidden_layers = 3;
  mc.hidden_width = 8;
  mc.activation = act;
  mc.skip_connections = skip;
  mc.seed = seed;
  mc.freq_scale = 0.5;
  return mc;
}

}  // namespace

TEST_CASE("encoder output") {
  const auto enc = FourierEncoder::create(1.0, 3);
  const auto zero = encode(enc, {0, 0, 0});
  CHECK(zero.size() == 64);
  for (int i = 0; i < 32; ++i) {
    CHECK(zero(i) == 0.0);
    CHECK(zero(32 + i) == 1.0);
  }
  CHECK(encode(enc, {4.5, -1.0, 2.0}).size() == 64);

  const auto again = FourierEncoder::create(1.0, 3);
  CHECK(again.frequencies == enc.frequencies);
}

TEST_CASE("encoder scale covariance") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> cu(0.25, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double s = 0.7;
    const double c = cu(rng);
    const Point3 p{u(rng), u(rng), u(rng)};
    const auto a = encode(FourierEncoder::create(s, 21), p);
    const auto b = encode(FourierEncoder::create(s / c, 21), p * c);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("forward pass") {
  MlpConfig mc;
  mc.hidden_width = 16;
  SdfModel model(mc);
  const Point3 p{1.0, -2.0, 0.5};
  const auto a = model.forward(p);
  const auto b = model.forward(p);
  CHECK(a.sdf == b.sdf);
  CHECK(a.confidence == b.confidence);

  model.mutable_layers().back().weight.setZero();
  model.mutable_layers().back().bias.setZero();
  for (const Point3& q : {Point3{0, 0, 0}, Point3{5, 1, -2}, Point3{-3, 3, 3}}) {
    CHECK(model.forward(q).sdf == 0.0);
    CHECK(model.forward(q).confidence == 0.0);
  }
}

TEST_CASE("zeroed residual blocks reduce to the shallow network") {
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    MlpConfig deep;
    deep.hidden_layers = 4;
    deep.hidden_width = 12;
    deep.activation = act;
    deep.skip_connections = true;
    deep.seed = 5;
    SdfModel skip_model(deep);
    for (std::size_t l = 1; l < 4; ++l) {
      skip_model.mutable_layers()[l].weight.setZero();
      skip_model.mutable_layers()[l].bias.setZero();
    }
    MlpConfig shallow = deep;
    shallow.hidden_layers = 1;
    shallow.skip_connections = false;
    const ParameterSet shallow_layers = {skip_model.layers().front(), skip_model.layers().back()};
    const SdfModel plain(shallow, skip_model.encoder(), shallow_layers);
    std::mt19937_64 rng(2);
    for (const auto& p : lidarsdf::testing::random_points(25, rng, -2.0, 2.0)) {
      CHECK(skip_model.forward(p).sdf == plain.forward(p).sdf);
      CHECK(skip_model.forward(p).confidence == plain.forward(p).confidence);
    }
  }
}

TEST_CASE("huber loss") {
  CHECK(huber(0.0, 1.0) == 0.0);
  CHECK(huber(0.5, 1.0) == 0.125);
  CHECK(huber(2.0, 1.0) == 1.5);
  CHECK(huber(-2.0, 1.0) == 1.5);
  // Continuous with a continuous slope at |r| = delta.
  const double d = 0.7;
  CHECK(huber(d - 1e-12, d) == doctest::Approx(huber(d + 1e-12, d)));
  CHECK(huber_derivative(d - 1e-12, d) == doctest::Approx(huber_derivative(d + 1e-12, d)));
}

TEST_CASE("batch loss") {
  MlpConfig mc = small_config(Activation::kTanh, false, 1);
  SdfModel model(mc);
  TrainConfig tc;
  auto batch = random_batch(6, 4);

  std::vector<Point3> pts;
  for (const auto& s : batch) pts.push_back(s.position);
  const auto pred = model.forward_batch(pts);
  auto exact = batch;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    exact[i].sdf = pred(0, static_cast<Eigen::Index>(i));
    exact[i].confidence = pred(1, static_cast<Eigen::Index>(i));
  }
  CHECK(batch_loss(model, exact, tc) == 0.0);

  // Hand evaluation of a two-sample batch.
  const std::vector<LabeledSample> two(batch.begin(), batch.begin() + 2);
  tc.huber_delta = 0.3;
  tc.confidence_loss_weight = 0.6;
  double expected = 0.0;
  for (const auto& s : two) {
    const auto out = model.forward(s.position);
    expected += huber(out.sdf - s.sdf, 0.3) + 0.6 * huber(out.confidence - s.confidence, 0.3);
  }
  expected /= 2.0;
  CHECK(std::abs(batch_loss(model, two, tc) - expected) < 1e-12);

  tc.confidence_loss_weight = 0.0;
  double sdf_only = 0.0;
  for (const auto& s : two) sdf_only += huber(model.forward(s.position).sdf - s.sdf, 0.3);
  CHECK(std::abs(batch_loss(model, two, tc) - sdf_only / 2.0) < 1e-12);

  CHECK_THROWS_AS(batch_loss(model, std::vector<LabeledSample>{}, tc), ValidationError);
}

TEST_CASE("gradients match central finite differences") {
  TrainConfig tc;
  tc.huber_delta = 0.8;
  tc.confidence_loss_weight = 0.7;
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    for (bool skip : {false, true}) {
      for (std::uint64_t seed : {11u, 12u, 13u}) {
        SdfModel model(small_config(act, skip, seed));
        const auto batch = random_batch(4, seed + 100);
        const double err = max_gradient_error(model, batch, tc);
        CAPTURE(to_string(act));
        CAPTURE(skip);
        CHECK(err < 1e-4);
      }
    }
  }
  MlpConfig sig = small_config(Activation::kTanh, true, 3);
  sig.confidence_head = ConfidenceHead::kSigmoid;
  CHECK(max_gradient_error(SdfModel(sig), random_batch(4, 9), tc) < 1e-4);
  MlpConfig raw = small_config(Activation::kTanh, false, 3);
  raw.use_encoder = false;
  CHECK(max_gradient_error(SdfModel(raw), random_batch(4, 9), tc) < 1e-4);
}

TEST_CASE("zero residual gives zero gradient") {
  SdfModel model(small_config(Activation::kTanh, true, 4));
  auto batch = random_batch(5, 6);
  for (auto& s : batch) {
    const auto out = model.forward_batch(std::vector<Point3>{s.position});
    s.sdf = out(0, 0);
    s.confidence = out(1, 0);
  }
  const auto g = gradients(model, batch, TrainConfig{});
  for (const auto& l : g) {
    CHECK(l.weight.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(l.bias.cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("confidence weight scales the confidence contribution linearly") {
  SdfModel model(small_config(Activation::kRelu, false, 8));
  const auto batch = random_batch(6, 3);
  TrainConfig tc;
  tc.confidence_loss_weight = 0.0;
  const auto g0 = gradients(model, batch, tc);
  tc.confidence_loss_weight = 1.0;
  const auto g1 = gradients(model, batch, tc);
  tc.confidence_loss_weight = 2.0;
  const auto g2 = gradients(model, batch, tc);
  for (std::size_t l = 0; l < g0.size(); ++l) {
    const Eigen::MatrixXd c1 = g1[l].weight - g0[l].weight;
    const Eigen::MatrixXd c2 = g2[l].weight - g0[l].weight;
    CHECK((c2 - 2.0 * c1).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adam update") {
  MlpConfig mc = small_config(Activation::kTanh, false, 2);
  SdfModel model(mc);
  const ParameterSet before = model.layers();
  TrainConfig tc;
  tc.learning_rate = 0.1;
  AdamState state = AdamState::for_model(model);

  adam_step(model, state, zeros_like(model.layers()), tc);
  CHECK(state.step == 1);
  for (std::size_t l = 0; l < before.size(); ++l) CHECK(model.layers()[l].weight == before[l].weight);

  // One scalar with g = 1 on a fresh state moves by ~ -lr.
  state = AdamState::for_model(model);
  ParameterSet g = zeros_like(model.layers());
  g[0].weight(0, 0) = 1.0;
  const double w0 = model.layers()[0].weight(0, 0);
  adam_step(model, state, g, tc);
  CHECK(model.layers()[0].weight(0, 0) - w0 == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(model.layers()[0].weight(0, 1) == before[0].weight(0, 1));

  // Descent on f(w) = (w - 3)^2.
  state = AdamState::for_model(model);
  auto f = [](double w) { return (w - 3.0) * (w - 3.0); };
  double prev = f(model.layers()[1].bias(0));
  for (int step = 0; step < 2; ++step) {
    ParameterSet grad = zeros_like(model.layers());
    grad[1].bias(0) = 2.0 * (model.layers()[1].bias(0) - 3.0);
    adam_step(model, state, grad, tc);
    const double now = f(model.layers()[1].bias(0));
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("parameter count formula") {
  for (std::size_t layers : {1u, 3u, 20u}) {
    for (std::size_t width : {8u, 64u}) {
      MlpConfig mc;
      mc.hidden_layers = layers;
      mc.hidden_width = width;
      const std::size_t expected = 64 * width + width + (layers - 1) * (width * width + width) + 2 * width + 2;
      CHECK(expected_parameter_count(mc) == expected);
      CHECK(SdfModel(mc).parameter_count() == expected);
    }
  }
}

TEST_CASE("initialization is seeded and bounded by fan-in") {
  MlpConfig mc;
  mc.hidden_width = 32;
  mc.seed = 17;
  const SdfModel a(mc);
  const SdfModel b(mc);
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    CHECK(a.layers()[l].weight == b.layers()[l].weight);
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.layers()[l].weight.cols()));
    CHECK(a.layers()[l].weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(a.layers()[l].bias.cwiseAbs().maxCoeff() <= bound);
  }
  mc.seed = 18;
  CHECK_FALSE(SdfModel(mc).layers()[0].weight == a.layers()[0].weight);
}

TEST_CASE("tanh network is smooth in the input") {
  SdfModel model(MlpConfig{});
  std::mt19937_64 rng(1);
  for (const auto& p : lidarsdf::testing::random_points(20, rng, -8.0, 8.0)) {
    const Point3 dir{0.6, 0.0, 0.8};
    const double h = 1e-6;
    const double deriv = (model.forward(p + dir * h).sdf - model.forward(p - dir * h).sdf) / (2 * h);
    CHECK(std::isfinite(deriv));
  }
}

TEST_CASE("training") {
  const Scene scene{{Sphere{{3.0, 0.0, 0.0}, 1.0}}};
  ScanConfig scan;
  scan.azimuth_steps = 96;
  scan.elevations = elevation_fan(-20.0, 20.0, 8);
  SampleSpec spec;
  spec.seed = 3;
  const auto ds = oracle_dataset(scene, scan, spec, AugmentMethod::kGaussian, ConfidenceParams{10.0, 3.0}).dataset;

  MlpConfig mc;
  mc.hidden_width = 32;
  mc.freq_scale = 0.3;
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 64;

  tc.epochs = 0;
  const auto none = train(ds, mc, tc);
  CHECK(none.loss_history.empty());
  CHECK(none.model.layers()[0].weight == SdfModel(mc).layers()[0].weight);

  tc.epochs = 40;
  const auto a = train(ds, mc, tc);
  const auto b = train(ds, mc, tc);
  REQUIRE(a.loss_history.size() == 40);
  for (std::size_t l = 0; l < a.model.layers().size(); ++l) CHECK(a.model.layers()[l].weight == b.model.layers()[l].weight);
  CHECK(a.loss_history == b.loss_history);

  for (std::size_t e = 5; e < a.loss_history.size(); ++e) CHECK(a.loss_history[e] <= 1.10 * a.loss_history[e - 1]);
  CHECK(a.loss_history.back() < 0.5 * a.loss_history.front());

  tc.learning_rate = 1e308;
  tc.epochs = 3;
  CHECK_THROWS_AS(train(ds, mc, tc), TrainingDiverged);
}
