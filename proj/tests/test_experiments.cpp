// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <set>

#include "lidarsdf/experiments.hpp"
#include "lidarsdf/plot.hpp"
#include "test_util.hpp"

using namespace lidarsdf;
using lidarsdf::testing::TempDir;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.scan.azimuth_steps = 64;
  c.scan.elevation_count = 8;
  c.model.hidden_width = 8;
  c.training.epochs = 3;
  c.training.batch_size = 64;
  c.sweep.min_layers = 1;
  c.sweep.max_layers = 3;
  c.sweep.hidden_width = 8;
  c.set_seed(4);
  return c;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const ExperimentConfig d = parse_config_text("{}");
  CHECK(d.model.hidden_layers == 3);
  CHECK(d.model.hidden_width == 64);
  CHECK(d.model.activation == Activation::kTanh);
  CHECK(d.training.learning_rate == 4e-3);
  CHECK(d.training.epochs == 200);
  CHECK(d.filter.ground_z_threshold == -1.563);
  CHECK(d.sweep.activation == Activation::kRelu);
  CHECK(d.confidence.d_max == d.sample.truncation_dmax);

  const auto c = parse_config_text(R"({"seed": 9, "sampling": {"truncation_dmax": 5.5, "method": "uniform"},
                                       "model": {"confidence_head": "sigmoid"}})");
  CHECK(c.seed == 9);
  CHECK(c.sample.seed == 9);
  CHECK(c.model.seed == 9);
  CHECK(c.training.seed == 9);
  CHECK(c.method == AugmentMethod::kUniform);
  CHECK(c.confidence.d_max == 5.5);
  CHECK(c.model.confidence_head == ConfidenceHead::kSigmoid);
}

TEST_CASE("config errors name the field") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"modle": {}})"), doctest::Contains("modle"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"train": {"epochz": 3}})"), doctest::Contains("train.epochz"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"train": {"epochs": "many"}})"), doctest::Contains("train.epochs"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"activation": "gelu"}})"),
                       doctest::Contains("model.activation"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"confidence": {"b": 1.0}})"), doctest::Contains("confidence.b"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"scan": {"origin": [1, 2]}})"), doctest::Contains("scan.origin"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"evaluation": {"holdout_fraction": 1.5}})"),
                       doctest::Contains("evaluation.holdout_fraction"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[1, 2"), ValidationError);
}

TEST_CASE("config and manifest round trip") {
  ExperimentConfig c = tiny_config();
  c.model.freq_scale = 0.123456789012345;
  c.filter.drop_class_ids = {3, 17};
  c.scan.elevation_min_deg = -7.3;
  const auto back = parse_config(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.scan.resolve().elevations == c.scan.resolve().elevations);

  Manifest m;
  m.stage = "train";
  m.config = c;
  m.inputs["dataset"] = "/data/d.txt";
  m.artifacts["checkpoint"] = "model.ckpt";
  const auto j = manifest_to_json(m);
  CHECK(j["stage"] == "train");
  CHECK(j["seeds"]["model_init"] == 4);
  CHECK(j["code_version"] == kVersion);
  CHECK(config_to_json(parse_config(j)) == config_to_json(c));

  TempDir dir;
  write_manifest(m, dir.path());
  CHECK(config_to_json(load_config(dir.path() / "manifest.json")) == config_to_json(c));
}

TEST_CASE("held-out split") {
  const auto c = tiny_config();
  const Dataset ds = augment(scene_obstacles(street_scene(), c), c);
  const auto a = split_dataset(ds, 0.2, 11);
  const auto b = split_dataset(ds, 0.2, 11);
  CHECK(a.train.size() + a.test.size() == ds.size());
  CHECK(a.test.size() == static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(ds.size()))));
  CHECK(samples_hash(a.test) == samples_hash(b.test));
  CHECK(samples_hash(a.train) == samples_hash(b.train));
  CHECK(samples_hash(a.test) != samples_hash(split_dataset(ds, 0.2, 12).test));

  std::multiset<std::tuple<double, double, double, double>> all, parts;
  for (const auto& s : ds.samples) all.insert({s.position.x, s.position.y, s.position.z, s.sdf});
  for (const auto* part : {&a.train, &a.test})
    for (const auto& s : *part) parts.insert({s.position.x, s.position.y, s.position.z, s.sdf});
  CHECK(all == parts);

  Dataset two;
  two.samples.resize(2);
  CHECK_THROWS_AS(split_dataset(two, 0.2, 1), ValidationError);
}

TEST_CASE("dataset hash") {
  const auto c = tiny_config();
  const auto obstacles = scene_obstacles(street_scene(), c);
  const Dataset a = augment(obstacles, c);
  const Dataset b = augment(obstacles, c);
  CHECK(dataset_hash(a) == dataset_hash(b));
  Dataset changed = a;
  changed.samples[5].sdf += 1e-6;
  CHECK(dataset_hash(changed) != dataset_hash(a));
  CHECK(hex_hash(0xabcULL) == "0000000000000abc");
}

TEST_CASE("ingest gate and ground split") {
  PointCloud cloud;
  cloud.points = {{{1, 0, 0}, 1, {}, {}}, {{2, 0, -2.0}, 2, {}, {}}, {{3, 0, 0}, 7, {}, {}}};
  FilterConfig f;
  f.drop_class_ids = {7};
  const auto r = ingest(cloud, f, cloud);
  CHECK(r.dropped_by_class == 1);
  CHECK(r.obstacles.points.size() == 1);
  CHECK(r.floor.points.size() == 1);
  CHECK(*r.hausdorff_to_previous == 0.0);
  CHECK_FALSE(*r.scene_changed);

  PointCloud moved = cloud;
  for (auto& p : moved.points) p.position.y += 2.0;
  CHECK(*ingest(moved, FilterConfig{}, cloud).scene_changed);
  CHECK_FALSE(ingest(cloud, FilterConfig{}).hausdorff_to_previous.has_value());
}

TEST_CASE("parallel runner keeps results by index") {
  for (unsigned threads : {1u, 3u}) {
    std::vector<std::size_t> out(50, 0);
    run_parallel(out.size(), threads, [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    CHECK_THROWS_AS(run_parallel(10, threads,
                                 [](std::size_t i) {
                                   if (i == 7) throw Error("boom");
                                 }),
                    Error);
  }
}

TEST_CASE("depth sweep rows") {
  const auto c = tiny_config();
  const auto obstacles = scene_obstacles(street_scene(), c);
  const auto rows = sweep_depth(obstacles, c, 1);
  REQUIRE(rows.size() == 6);
  std::set<std::string> hashes;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].layers == 1 + i / 2);
    CHECK(rows[i].skip == (i % 2 == 1));
    MlpConfig mc = c.model;
    mc.hidden_layers = rows[i].layers;
    mc.hidden_width = 8;
    CHECK(rows[i].params == 64 * 8 + 8 + (rows[i].layers - 1) * (64 + 8) + 2 * 8 + 2);
    CHECK(rows[i].params == expected_parameter_count(mc));
    CHECK(std::isfinite(rows[i].final_test_loss));
    hashes.insert(rows[i].dataset_hash);
  }
  CHECK(hashes.size() == 1);
  // A single layer has no residual block to skip.
  CHECK(rows[0].final_test_loss == rows[1].final_test_loss);
  const auto threaded = sweep_depth(obstacles, c, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(threaded[i].final_test_loss == rows[i].final_test_loss);

  TempDir dir;
  write_sweep_csv(rows, dir.path() / "s.csv");
  const auto t = read_csv(dir.path() / "s.csv");
  CHECK(t.header == std::vector<std::string>{"layers", "skip", "params", "final_test_loss"});
  CHECK(t.rows.size() == 6);
  plot_sweep(dir.path() / "s.csv", dir.path() / "s.svg");
  const auto svg = lidarsdf::testing::read_text(dir.path() / "s.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("layers,skip,params,final_test_loss") != std::string::npos);
}

TEST_CASE("encoder comparison rows") {
  const auto c = tiny_config();
  const auto rows = compare_encoder(scene_obstacles(street_scene(), c), c, 1);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].model == "ANN");
  CHECK(rows[0].augmentation == AugmentMethod::kUniform);
  CHECK(rows[1].model == "ANN");
  CHECK(rows[1].augmentation == AugmentMethod::kGaussian);
  CHECK(rows[2].model == "ANN+FF");
  CHECK(rows[2].augmentation == AugmentMethod::kGaussian);
  CHECK(rows[1].dataset_hash == rows[2].dataset_hash);
  CHECK(rows[0].dataset_hash != rows[1].dataset_hash);

  TempDir dir;
  write_encoder_csv(rows, dir.path() / "e.csv");
  const auto t = read_csv(dir.path() / "e.csv");
  CHECK(t.header == std::vector<std::string>{"model", "augmentation", "final_huber_loss"});
  CHECK(t.rows[0][1] == "UNIFORM");
  CHECK(t.rows[2][0] == "ANN+FF");
  CHECK(t.number(2, "final_huber_loss") == rows[2].final_huber_loss);
  plot_bars(dir.path() / "e.csv", "augmentation", "final_huber_loss", dir.path() / "e.svg", "losses");
  CHECK(lidarsdf::testing::read_text(dir.path() / "e.svg").find("ANN+FF / GAUSSIAN") != std::string::npos);
}

TEST_CASE("augmentation comparison") {
  auto c = tiny_config();
  const auto cmp = compare_augmentation(scene_obstacles(street_scene(), c), c);
  REQUIRE(cmp.arms.size() == 2);
  CHECK(cmp.arms[0].method == AugmentMethod::kUniform);
  CHECK(cmp.arms[1].method == AugmentMethod::kGaussian);
  CHECK(cmp.arms[0].evaluation_hash == cmp.arms[1].evaluation_hash);
  CHECK(cmp.arms[0].dataset_hash != cmp.arms[1].dataset_hash);
  for (const auto& arm : cmp.arms) {
    REQUIRE(arm.scatter.size() == cmp.evaluation.size());
    for (std::size_t i = 0; i < arm.scatter.size(); ++i) {
      CHECK(arm.scatter[i].sdf_label == cmp.evaluation[i].sdf);
      CHECK(arm.scatter[i].valid == confidence_valid(arm.scatter[i].conf_pred));
    }
    CHECK(arm.loss_history.size() == c.training.epochs);
  }

  c.model.confidence_head = ConfidenceHead::kSigmoid;
  const auto sig = compare_augmentation(scene_obstacles(street_scene(), c), c);
  CHECK(sig.negative_confidence_count(0) == 0);
  CHECK(sig.negative_confidence_count(1) == 0);

  TempDir dir;
  write_scatter_csv(cmp.arms[0].scatter, dir.path() / "sc.csv");
  const auto t = read_csv(dir.path() / "sc.csv");
  CHECK(t.header == std::vector<std::string>{"sdf_label", "sdf_pred", "conf_pred", "valid_flag"});
  CHECK(t.rows.size() == cmp.evaluation.size());
  plot_scatter(dir.path() / "sc.csv", dir.path() / "sc.svg", "scatter");
  write_augmentation_csv(cmp, dir.path() / "a.csv");
  CHECK(read_csv(dir.path() / "a.csv").rows.size() == 2);
}

TEST_CASE("confidence validity flag") {
  CHECK(confidence_valid(0.0));
  CHECK(confidence_valid(1.0 + 1e-7));
  CHECK_FALSE(confidence_valid(-1e-9));
  CHECK_FALSE(confidence_valid(1.0 + 2e-6));
}

TEST_CASE("shell evaluation against the oracle") {
  const Scene scene{{Sphere{{5, 0, 0}, 1.0}}};
  ScanConfig scan;
  scan.azimuth_steps = 128;
  scan.elevations = elevation_fan(-10, 10, 8);
  const auto hits = simulate_scan(scene, scan);
  EvaluationSettings s;
  s.shell_samples = 500;
  MlpConfig mc;
  mc.hidden_width = 4;
  SdfModel model(mc);
  // A model that is zero everywhere agrees in sign only on the outer half.
  for (auto& l : model.mutable_layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const auto e = evaluate_shell(model, scene, hits, s, 3);
  CHECK(e.samples == 500);
  CHECK(e.sign_agreement > 0.35);
  CHECK(e.sign_agreement < 0.65);
  CHECK(e.mean_abs_error == doctest::Approx(0.25).epsilon(0.1));
  CHECK(e.mean_abs_error <= 0.5);
}

TEST_CASE("csv reader") {
  TempDir dir;
  lidarsdf::testing::write_text(dir.path() / "t.csv", "a,b\n1,2\n3,x\n");
  const auto t = read_csv(dir.path() / "t.csv");
  CHECK(t.number(0, "b") == 2.0);
  CHECK_THROWS_AS(t.number(1, "b"), ValidationError);
  CHECK_THROWS_AS(t.column("c"), ValidationError);
  lidarsdf::testing::write_text(dir.path() / "r.csv", "a,b\n1\n");
  CHECK_THROWS_AS(read_csv(dir.path() / "r.csv"), ValidationError);
}
