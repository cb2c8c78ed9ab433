// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace lidarsdf {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write file");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct ArmRun {
  SdfModel model;
  std::vector<double> history;
  double test_loss;
};

ArmRun train_and_test(const HoldoutSplit& split, const MlpConfig& mc, const TrainConfig& tc) {
  auto result = train(split.train, mc, tc);
  const double loss = batch_loss(result.model, split.test, tc);
  return {std::move(result.model), std::move(result.loss_history), loss};
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_to_json(const Manifest& m) {
  json j;
  j["manifest_version"] = 1;
  j["code_version"] = kVersion;
  j["experiment_id"] = m.config.experiment_id;
  j["stage"] = m.stage;
  j["config"] = config_to_json(m.config);
  j["seeds"] = {{"sampling", m.config.sample.seed},
                {"model_init", m.config.model.seed},
                {"shuffle", m.config.training.seed},
                {"holdout_split", m.config.seed}};
  j["inputs"] = m.inputs;
  j["artifacts"] = m.artifacts;
  j["results"] = m.results;
  j["started"] = m.started;
  j["finished"] = m.finished;
  return j;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& dir) {
  auto out = open_out(dir / "manifest.json");
  out << manifest_to_json(manifest).dump(2) << '\n';
}

std::uint64_t dataset_hash(const Dataset& dataset) { return fnv1a(serialize_dataset(dataset)); }

std::uint64_t samples_hash(const std::vector<LabeledSample>& samples) {
  std::string bytes;
  bytes.reserve(samples.size() * 40);
  for (const auto& s : samples) {
    const double v[5] = {s.position.x, s.position.y, s.position.z, s.sdf, s.confidence};
    bytes.append(reinterpret_cast<const char*>(v), sizeof(v));
  }
  return fnv1a(bytes);
}

std::string hex_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

IngestResult ingest(const PointCloud& cloud, const FilterConfig& filter, const std::optional<PointCloud>& previous) {
  filter.validate();
  IngestResult r;
  const PointCloud kept = filter.drop_class_ids.empty() ? cloud : filter_classes(cloud, filter);
  r.dropped_by_class = cloud.points.size() - kept.points.size();
  if (previous) {
    r.hausdorff_to_previous = directed_hausdorff(kept, *previous);
    r.scene_changed = scene_change_gate(*previous, kept, filter);
  }
  auto split = ground_filter(kept, filter);
  r.obstacles = std::move(split.obstacles);
  r.floor = std::move(split.floor);
  return r;
}

PointCloud scene_obstacles(const Scene& scene, const ExperimentConfig& config) {
  return ingest(simulate_scan(scene, config.scan.resolve()), config.filter).obstacles;
}

Dataset augment(const PointCloud& obstacles, const ExperimentConfig& config, AugmentMethod method) {
  return build_dataset(obstacles, config.sample, method, config.confidence);
}

Dataset augment(const PointCloud& obstacles, const ExperimentConfig& config) {
  return augment(obstacles, config, config.method);
}

HoldoutSplit split_dataset(const Dataset& dataset, double holdout_fraction, std::uint64_t seed) {
  const std::size_t n = dataset.samples.size();
  const auto n_test = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) throw ValidationError("split_dataset: too few samples for a held-out split");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  HoldoutSplit split;
  split.train.reserve(n - n_test);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) (i < n - n_test ? split.train : split.test).push_back(dataset.samples[order[i]]);
  return split;
}

ShellEvaluation evaluate_shell(const SdfModel& model, const Scene& scene, const PointCloud& scan_hits,
                               const EvaluationSettings& settings, std::uint64_t seed) {
  if (scan_hits.points.empty()) throw ValidationError("evaluate_shell: no scan hits");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, scan_hits.points.size() - 1);
  std::uniform_real_distribution<double> offset(-settings.shell_halfwidth, settings.shell_halfwidth);
  ShellEvaluation e;
  std::size_t agree = 0, close = 0, attempts = 0;
  double abs_error = 0.0;
  while (e.samples < settings.shell_samples) {
    if (++attempts > 1000 * settings.shell_samples) throw Error("evaluate_shell: could not place shell samples");
    const Point3 hit = scan_hits.points[pick(rng)].position;
    const Point3 q = hit + analytic_normal(scene, hit) * offset(rng);
    const double truth = analytic_sdf(scene, q);
    if (std::abs(truth) > settings.shell_halfwidth) continue;
    const double pred = model.forward(q).sdf;
    ++e.samples;
    agree += (pred < 0.0) == (truth < 0.0);
    const double err = std::abs(pred - truth);
    abs_error += err;
    close += err < 0.15;
  }
  const auto n = static_cast<double>(e.samples);
  e.sign_agreement = static_cast<double>(agree) / n;
  e.mean_abs_error = abs_error / n;
  e.within_tolerance = static_cast<double>(close) / n;
  return e;
}

bool confidence_valid(double confidence) { return confidence >= 0.0 && confidence <= 1.0 + 1e-6; }

std::size_t AugmentationComparison::negative_confidence_count(std::size_t arm) const {
  std::size_t n = 0;
  for (const auto& row : arms.at(arm).scatter) n += row.sdf_label < 0.0 && row.conf_pred < 0.0;
  return n;
}

void run_parallel(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, count); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

AugmentationComparison compare_augmentation(const PointCloud& obstacles, const ExperimentConfig& config) {
  const AugmentMethod methods[2] = {AugmentMethod::kUniform, AugmentMethod::kGaussian};
  std::vector<Dataset> datasets;
  std::vector<HoldoutSplit> splits;
  AugmentationComparison cmp;
  for (AugmentMethod m : methods) {
    datasets.push_back(augment(obstacles, config, m));
    splits.push_back(split_dataset(datasets.back(), config.evaluation.holdout_fraction, config.seed));
    cmp.evaluation.insert(cmp.evaluation.end(), splits.back().test.begin(), splits.back().test.end());
  }
  const std::string eval_hash = hex_hash(samples_hash(cmp.evaluation));
  cmp.arms.resize(2);
  run_parallel(2, config.threads, [&](std::size_t i) {
    auto run = train_and_test(splits[i], config.model, config.training);
    auto& arm = cmp.arms[i];
    arm.method = methods[i];
    arm.dataset_hash = hex_hash(dataset_hash(datasets[i]));
    arm.evaluation_hash = eval_hash;
    arm.final_huber_loss = run.test_loss;
    arm.loss_history = std::move(run.history);
    arm.scatter.reserve(cmp.evaluation.size());
    for (const auto& s : cmp.evaluation) {
      const auto out = run.model.forward(s.position);
      arm.scatter.push_back({s.sdf, out.sdf, out.confidence, confidence_valid(out.confidence)});
    }
  });
  return cmp;
}

std::vector<SweepRow> sweep_depth(const PointCloud& obstacles, const ExperimentConfig& config, unsigned threads) {
  const Dataset dataset = augment(obstacles, config);
  const std::string hash = hex_hash(dataset_hash(dataset));
  const HoldoutSplit split = split_dataset(dataset, config.evaluation.holdout_fraction, config.seed);
  std::vector<SweepRow> rows;
  for (std::size_t layers = config.sweep.min_layers; layers <= config.sweep.max_layers; ++layers) {
    for (bool skip : {false, true}) rows.push_back({layers, skip, 0, 0.0, hash});
  }
  // Deepest models first so the slowest jobs do not trail at the end.
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) order[i] = rows.size() - 1 - i;
  run_parallel(rows.size(), threads, [&](std::size_t job) {
    SweepRow& row = rows[order[job]];
    MlpConfig mc = config.model;
    mc.hidden_layers = row.layers;
    mc.hidden_width = config.sweep.hidden_width;
    mc.activation = config.sweep.activation;
    mc.skip_connections = row.skip;
    row.params = expected_parameter_count(mc);
    row.final_test_loss = train_and_test(split, mc, config.training).test_loss;
  });
  return rows;
}

std::vector<EncoderRow> compare_encoder(const PointCloud& obstacles, const ExperimentConfig& config,
                                        unsigned threads) {
  const Dataset uniform = augment(obstacles, config, AugmentMethod::kUniform);
  const Dataset gaussian = augment(obstacles, config, AugmentMethod::kGaussian);
  const HoldoutSplit splits[2] = {split_dataset(uniform, config.evaluation.holdout_fraction, config.seed),
                                  split_dataset(gaussian, config.evaluation.holdout_fraction, config.seed)};
  const std::string hashes[2] = {hex_hash(dataset_hash(uniform)), hex_hash(dataset_hash(gaussian))};
  struct Arm {
    bool encoder;
    int data;
  };
  const Arm arms[3] = {{false, 0}, {false, 1}, {true, 1}};
  std::vector<EncoderRow> rows(3);
  run_parallel(3, threads, [&](std::size_t i) {
    MlpConfig mc = config.model;
    mc.use_encoder = arms[i].encoder;
    rows[i].model = arms[i].encoder ? "ANN+FF" : "ANN";
    rows[i].augmentation = arms[i].data == 0 ? AugmentMethod::kUniform : AugmentMethod::kGaussian;
    rows[i].dataset_hash = hashes[arms[i].data];
    rows[i].final_huber_loss = train_and_test(splits[arms[i].data], mc, config.training).test_loss;
  });
  return rows;
}

void write_scatter_csv(const std::vector<ScatterRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "sdf_label,sdf_pred,conf_pred,valid_flag\n";
  for (const auto& r : rows) {
    out << fmt(r.sdf_label) << ',' << fmt(r.sdf_pred) << ',' << fmt(r.conf_pred) << ',' << (r.valid ? 1 : 0) << '\n';
  }
}

void write_augmentation_csv(const AugmentationComparison& cmp, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,final_huber_loss,invalid_confidence,negative_confidence_inside\n";
  for (std::size_t i = 0; i < cmp.arms.size(); ++i) {
    const auto& arm = cmp.arms[i];
    const auto invalid = std::count_if(arm.scatter.begin(), arm.scatter.end(), [](const ScatterRow& r) { return !r.valid; });
    out << to_string(arm.method) << ',' << fmt(arm.final_huber_loss) << ',' << invalid << ','
        << cmp.negative_confidence_count(i) << '\n';
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "layers,skip,params,final_test_loss\n";
  for (const auto& r : rows) out << r.layers << ',' << (r.skip ? 1 : 0) << ',' << r.params << ',' << fmt(r.final_test_loss) << '\n';
}

void write_encoder_csv(const std::vector<EncoderRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "model,augmentation,final_huber_loss\n";
  for (const auto& r : rows) out << r.model << ',' << upper(to_string(r.augmentation)) << ',' << fmt(r.final_huber_loss) << '\n';
}

}  // namespace lidarsdf
