// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "lidarsdf/experiments.hpp"
#include "lidarsdf/plot.hpp"

namespace fs = std::filesystem;
using namespace lidarsdf;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string scene;
  std::string cloud;
  std::string dataset;
  std::string checkpoint;
  std::string labels;
  std::string prev;
};

// Inputs recorded in a manifest are used when the flag is not given, so a
// stage can be rerun from its manifest alone.
std::string input_or_manifest(const std::string& flag, const nlohmann::json& manifest, const char* role) {
  if (!flag.empty()) return flag;
  if (manifest.contains("inputs") && manifest["inputs"].contains(role)) return manifest["inputs"][role].get<std::string>();
  return {};
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required input --") + flag);
  return value;
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

PointCloud load_cloud(const std::string& path) {
  return fs::path(path).extension() == ".bin" ? load_bin_records(path) : load_ascii_xyz(path);
}

class Stage {
 public:
  Stage(std::string name, const Options& opt) : opt_(opt) {
    manifest_.stage = std::move(name);
    manifest_.started = utc_timestamp();
    if (!opt.config.empty()) {
      std::ifstream in(opt.config);
      if (!in) throw ValidationError(opt.config + ": cannot open config file");
      try {
        source_ = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(opt.config + ": invalid JSON (" + e.what() + ")");
      }
      try {
        manifest_.config = parse_config(source_);
      } catch (const ValidationError& e) {
        throw ValidationError(opt.config + ": " + e.what());
      }
    }
    if (opt.seed) manifest_.config.set_seed(*opt.seed);
    if (opt.threads) manifest_.config.threads = *opt.threads;
    manifest_.config.validate();
    out_ = require(opt.out, "out");
    fs::create_directories(out_);
  }

  ExperimentConfig& config() { return manifest_.config; }
  const fs::path& out() const { return out_; }
  nlohmann::json& results() { return manifest_.results; }

  std::string input(const std::string& flag, const char* role, bool required) {
    std::string value = input_or_manifest(flag, source_, role);
    if (value.empty()) {
      if (required) require(value, role);
      return value;
    }
    manifest_.inputs[role] = absolute(value);
    return value;
  }

  fs::path artifact(const char* role, const std::string& file) {
    manifest_.artifacts[role] = file;
    return out_ / file;
  }

  void finish() {
    manifest_.finished = utc_timestamp();
    write_manifest(manifest_, out_);
    std::cout << manifest_.stage << ": wrote " << (out_ / "manifest.json").string() << '\n';
  }

  /// Obstacle cloud from either a synthetic scene or a recorded cloud.
  PointCloud obstacles() {
    const std::string scene = input(opt_.scene, "scene", false);
    if (!scene.empty()) return scene_obstacles(load_scene(scene), config());
    return ingest(load_cloud(input(opt_.cloud, "cloud", true)), config().filter).obstacles;
  }

 private:
  const Options& opt_;
  Manifest manifest_;
  nlohmann::json source_ = nlohmann::json::object();
  fs::path out_;
};

void run_simulate(const Options& o) {
  Stage st("simulate", o);
  const Scene scene = load_scene(st.input(o.scene, "scene", true));
  const PointCloud cloud = simulate_scan(scene, st.config().scan.resolve());
  write_ascii_xyz(cloud, st.artifact("cloud", "cloud.xyz"));
  st.results()["points"] = cloud.points.size();
  st.finish();
}

void run_ingest(const Options& o) {
  Stage st("ingest", o);
  PointCloud cloud = load_cloud(st.input(o.cloud, "cloud", true));
  const std::string labels = st.input(o.labels, "labels", false);
  if (!labels.empty()) attach_class_labels(cloud, load_class_sidecar(labels));
  const std::string prev = st.input(o.prev, "prev", false);
  std::optional<PointCloud> previous;
  if (!prev.empty()) previous = load_cloud(prev);
  const auto r = ingest(cloud, st.config().filter, previous);
  write_ascii_xyz(r.obstacles, st.artifact("obstacles", "obstacles.xyz"));
  write_ascii_xyz(r.floor, st.artifact("floor", "floor.xyz"));
  st.results()["input_points"] = cloud.points.size();
  st.results()["dropped_by_class"] = r.dropped_by_class;
  st.results()["obstacle_points"] = r.obstacles.points.size();
  st.results()["floor_points"] = r.floor.points.size();
  if (r.hausdorff_to_previous) {
    st.results()["hausdorff_to_previous"] = *r.hausdorff_to_previous;
    st.results()["scene_changed"] = *r.scene_changed;
  }
  st.finish();
}

void run_augment(const Options& o) {
  Stage st("augment", o);
  const PointCloud obstacles = load_ascii_xyz(st.input(o.cloud, "cloud", true));
  const Dataset ds = augment(obstacles, st.config());
  save_dataset(ds, st.artifact("dataset", "dataset.txt"));
  st.results()["samples"] = ds.size();
  st.results()["surface_samples"] = ds.surface_count;
  st.results()["dataset_hash"] = hex_hash(dataset_hash(ds));
  st.finish();
}

void run_train(const Options& o) {
  Stage st("train", o);
  const Dataset ds = load_dataset(st.input(o.dataset, "dataset", true));
  const auto result = train(ds, st.config().model, st.config().training);
  save_checkpoint(result.model, st.artifact("checkpoint", "model.ckpt"));
  const fs::path csv = st.artifact("loss_history", "loss.csv");
  write_loss_csv(result.loss_history, csv);
  if (!result.loss_history.empty()) plot_loss_history(csv, st.artifact("loss_plot", "loss.svg"));
  st.results()["dataset_hash"] = hex_hash(dataset_hash(ds));
  st.results()["parameters"] = result.model.parameter_count();
  if (!result.loss_history.empty()) st.results()["final_train_loss"] = result.loss_history.back();
  st.finish();
}

SdfModel checkpoint_input(Stage& st, const Options& o) {
  return load_checkpoint(st.input(o.checkpoint, "checkpoint", true), st.config().model);
}

void run_eval(const Options& o) {
  Stage st("eval", o);
  const SdfModel model = checkpoint_input(st, o);
  const Scene scene = load_scene(st.input(o.scene, "scene", true));
  const PointCloud hits = simulate_scan(scene, st.config().scan.resolve());
  const auto e = evaluate_shell(model, scene, hits, st.config().evaluation, st.config().seed);
  std::ofstream csv(st.artifact("metrics", "shell_metrics.csv"));
  csv << "metric,value\n";
  char buf[64];
  auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    csv << name << ',' << buf << '\n';
    st.results()[name] = v;
  };
  row("samples", static_cast<double>(e.samples));
  row("sign_agreement", e.sign_agreement);
  row("mean_abs_error", e.mean_abs_error);
  row("within_0.15m", e.within_tolerance);
  const std::string dataset = st.input(o.dataset, "dataset", false);
  if (!dataset.empty()) row("dataset_loss", batch_loss(model, load_dataset(dataset).samples, st.config().training));
  st.finish();
}

void run_extract(const Options& o) {
  Stage st("extract", o);
  const SdfModel model = checkpoint_input(st, o);
  const auto& ex = st.config().extract;
  const GridField grid = sample_grid(model, ex.bounds, ex.resolution, st.config().threads);
  const auto mc = marching_cubes(grid, ex.iso);
  write_obj(mc.mesh, st.artifact("mesh_obj", "mesh.obj"));
  write_ply(mc.mesh, st.artifact("mesh_ply", "mesh.ply"));
  write_grid_csv(grid, st.artifact("grid", "grid.csv"));
  st.results()["vertices"] = mc.mesh.vertices.size();
  st.results()["triangles"] = mc.mesh.triangles.size();
  st.results()["dropped_degenerate"] = mc.dropped_degenerate;
  st.finish();
}

void run_slice(const Options& o) {
  Stage st("slice", o);
  const SdfModel model = checkpoint_input(st, o);
  const auto& sc = st.config().slice;
  const SliceField slice = birds_eye_slice(model, sc.z, sc.bounds, sc.nx, sc.ny, st.config().threads);
  write_pgm(slice, st.artifact("image", "slice.pgm"), sc.shade_range);
  write_slice_csv(slice, st.artifact("values", "slice.csv"));
  st.results()["negative_components"] = count_negative_components(slice);
  st.finish();
}

void run_sweep(const Options& o) {
  Stage st("sweep-depth", o);
  const auto rows = sweep_depth(st.obstacles(), st.config(), st.config().threads);
  const fs::path csv = st.artifact("table", "sweep_depth.csv");
  write_sweep_csv(rows, csv);
  plot_sweep(csv, st.artifact("plot", "sweep_depth.svg"));
  const auto best = std::min_element(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.final_test_loss < b.final_test_loss;
  });
  st.results()["rows"] = rows.size();
  st.results()["dataset_hash"] = rows.front().dataset_hash;
  st.results()["best_layers"] = best->layers;
  st.results()["best_skip"] = best->skip;
  st.finish();
}

void run_compare_augment(const Options& o) {
  Stage st("compare-augment", o);
  const auto cmp = compare_augmentation(st.obstacles(), st.config());
  const fs::path losses = st.artifact("losses", "augmentation_losses.csv");
  write_augmentation_csv(cmp, losses);
  plot_bars(losses, "method", "final_huber_loss", st.artifact("loss_plot", "augmentation_losses.svg"),
            "Held-out Huber loss by augmentation");
  for (std::size_t i = 0; i < cmp.arms.size(); ++i) {
    const std::string name = to_string(cmp.arms[i].method);
    const fs::path csv = st.artifact(("scatter_" + name).c_str(), "scatter_" + name + ".csv");
    write_scatter_csv(cmp.arms[i].scatter, csv);
    plot_scatter(csv, st.artifact(("scatter_plot_" + name).c_str(), "scatter_" + name + ".svg"),
                 "Predicted confidence vs SDF label (" + name + ")");
    st.results()[name] = {{"final_huber_loss", cmp.arms[i].final_huber_loss},
                          {"dataset_hash", cmp.arms[i].dataset_hash},
                          {"negative_confidence_inside", cmp.negative_confidence_count(i)}};
  }
  st.results()["evaluation_samples"] = cmp.evaluation.size();
  st.results()["evaluation_hash"] = cmp.arms.front().evaluation_hash;
  st.finish();
}

void run_compare_encoder(const Options& o) {
  Stage st("compare-encoder", o);
  const auto rows = compare_encoder(st.obstacles(), st.config(), st.config().threads);
  const fs::path csv = st.artifact("table", "encoder_comparison.csv");
  write_encoder_csv(rows, csv);
  plot_bars(csv, "augmentation", "final_huber_loss", st.artifact("plot", "encoder_comparison.svg"),
            "Held-out Huber loss by model and augmentation");
  for (const auto& r : rows) st.results()["dataset_hash_" + r.model + "_" + to_string(r.augmentation)] = r.dataset_hash;
  st.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lidarsdf: neural signed distance fields from LiDAR scans"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config or a manifest to rerun");
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--seed", opt.seed, "Override the master seed");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&);
    std::vector<const char*> inputs;
  };
  const std::vector<Command> commands = {
      {"simulate", "Scan a synthetic scene", run_simulate, {"scene"}},
      {"ingest", "Filter classes, gate scene changes and split off the ground", run_ingest,
       {"cloud", "labels", "prev"}},
      {"augment", "Sample labeled points along the scan rays", run_augment, {"cloud"}},
      {"train", "Train a model on a dataset", run_train, {"dataset"}},
      {"eval", "Compare a model with the analytic scene near its surfaces", run_eval,
       {"checkpoint", "scene", "dataset"}},
      {"extract", "Sample a grid and extract the zero level set", run_extract, {"checkpoint"}},
      {"slice", "Bird's-eye slice image and values", run_slice, {"checkpoint"}},
      {"sweep-depth", "Test loss across network depths with and without skips", run_sweep, {"scene", "cloud"}},
      {"compare-augment", "Uniform vs Gaussian augmentation", run_compare_augment, {"scene", "cloud"}},
      {"compare-encoder", "Effect of the Fourier feature encoder", run_compare_encoder, {"scene", "cloud"}},
  };
  std::map<std::string, std::string*> input_flags = {{"scene", &opt.scene},   {"cloud", &opt.cloud},
                                                     {"dataset", &opt.dataset}, {"checkpoint", &opt.checkpoint},
                                                     {"labels", &opt.labels}, {"prev", &opt.prev}};
  std::vector<std::pair<CLI::App*, void (*)(const Options&)>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    common(sub);
    for (const char* in : c.inputs) sub->add_option(std::string("--") + in, *input_flags.at(in));
    subs.emplace_back(sub, c.run);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (const auto& [sub, run] : subs) {
      if (sub->parsed()) run(opt);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
