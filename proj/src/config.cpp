// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lidarsdf {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ValidationError(label() + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      convert(*it, out);
    } catch (const ValidationError& e) {
      throw ValidationError(field(key) + ": " + e.what());
    } catch (const json::exception&) {
      throw ValidationError(field(key) + ": wrong type");
    }
  }

  bool has(const char* key) const { return doc_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(doc_.at(key), field(key));
  }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.count(item.key())) throw ValidationError(field(item.key()) + ": unknown key");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static void convert(const json& j, double& out) {
    if (!j.is_number()) throw ValidationError("expected a number");
    out = j.get<double>();
    if (!std::isfinite(out)) throw ValidationError("must be finite");
  }
  static void convert(const json& j, std::size_t& out) {
    if (!j.is_number_unsigned()) throw ValidationError("expected a non-negative integer");
    out = j.get<std::size_t>();
  }
  static void convert(const json& j, unsigned& out) {
    if (!j.is_number_unsigned()) throw ValidationError("expected a non-negative integer");
    out = j.get<unsigned>();
  }
  static void convert(const json& j, bool& out) {
    if (!j.is_boolean()) throw ValidationError("expected true or false");
    out = j.get<bool>();
  }
  static void convert(const json& j, std::string& out) {
    if (!j.is_string()) throw ValidationError("expected a string");
    out = j.get<std::string>();
  }
  static void convert(const json& j, Point3& out) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("expected [x, y, z]");
    convert(j[0], out.x);
    convert(j[1], out.y);
    convert(j[2], out.z);
  }
  static void convert(const json& j, std::set<int>& out) {
    if (!j.is_array()) throw ValidationError("expected an array of integers");
    out.clear();
    for (const auto& v : j) {
      if (!v.is_number_integer()) throw ValidationError("expected an array of integers");
      out.insert(v.get<int>());
    }
  }
  static void convert(const json& j, AugmentMethod& out) {
    std::string s;
    convert(j, s);
    out = parse_augment_method(s);
  }
  static void convert(const json& j, Activation& out) {
    std::string s;
    convert(j, s);
    out = parse_activation(s);
  }
  static void convert(const json& j, ConfidenceHead& out) {
    std::string s;
    convert(j, s);
    out = parse_confidence_head(s);
  }
  static void convert(const json& j, ConfidenceFormula& out) {
    std::string s;
    convert(j, s);
    if (s == "normalized") {
      out = ConfidenceFormula::kNormalized;
    } else if (s == "literal") {
      out = ConfidenceFormula::kLiteral;
    } else {
      throw ValidationError("expected \"normalized\" or \"literal\"");
    }
  }
  static void convert(const json& j, GridResolution& out) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("expected [nx, ny, nz]");
    convert(j[0], out.nx);
    convert(j[1], out.ny);
    convert(j[2], out.nz);
  }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

void check(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

ScanConfig ScanSettings::resolve() const {
  ScanConfig c;
  c.azimuth_steps = azimuth_steps;
  c.elevations = elevation_fan(elevation_min_deg, elevation_max_deg, elevation_count);
  c.max_range = max_range;
  c.origin = origin;
  return c;
}

ExperimentConfig::ExperimentConfig() {
  model.freq_scale = 0.1;
  training.learning_rate = 4e-3;
  training.epochs = 200;
  resolve();
}

void ExperimentConfig::resolve() {
  sample.seed = seed;
  model.seed = seed;
  training.seed = seed;
  confidence.d_max = dmax_from_dataset(sample);
}

void ExperimentConfig::set_seed(std::uint64_t value) {
  seed = value;
  resolve();
}

void ExperimentConfig::validate() const {
  check(!experiment_id.empty(), "experiment_id must not be empty");
  check(threads >= 1, "threads must be >= 1");
  check(scan.elevation_min_deg <= scan.elevation_max_deg, "scan.elevation_min_deg must be <= scan.elevation_max_deg");
  check(scan.elevation_count >= 1, "scan.elevation_count must be >= 1");
  scan.resolve().validate();
  filter.validate();
  sample.validate();
  confidence.validate();
  model.validate();
  training.validate();
  check(evaluation.holdout_fraction > 0.0 && evaluation.holdout_fraction < 1.0,
        "evaluation.holdout_fraction must be in (0, 1)");
  check(evaluation.shell_samples >= 1, "evaluation.shell_samples must be >= 1");
  check(evaluation.shell_halfwidth > 0.0, "evaluation.shell_halfwidth must be > 0");
  try {
    extract.bounds.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("extract.") + e.what());
  }
  check(extract.resolution.nx >= 2 && extract.resolution.ny >= 2 && extract.resolution.nz >= 2,
        "extract.resolution must be >= 2 per axis");
  check(slice.bounds.x_min < slice.bounds.x_max && slice.bounds.y_min < slice.bounds.y_max,
        "slice bounds: min must be < max");
  check(slice.nx >= 2 && slice.ny >= 2, "slice.nx and slice.ny must be >= 2");
  check(slice.shade_range > 0.0, "slice.shade_range must be > 0");
  check(sweep.min_layers >= 1 && sweep.min_layers <= sweep.max_layers, "sweep.min_layers must be in [1, max_layers]");
  check(sweep.hidden_width >= 1, "sweep.hidden_width must be >= 1");
}

ExperimentConfig parse_config(const json& input) {
  const json& doc = input.contains("manifest_version") ? input.at("config") : input;
  ExperimentConfig c;
  Section root(doc, "");
  root.read("experiment_id", c.experiment_id);
  root.read("seed", c.seed);
  root.read("threads", c.threads);

  if (root.has("scan")) {
    auto s = root.child("scan");
    s.read("azimuth_steps", c.scan.azimuth_steps);
    s.read("elevation_min_deg", c.scan.elevation_min_deg);
    s.read("elevation_max_deg", c.scan.elevation_max_deg);
    s.read("elevation_count", c.scan.elevation_count);
    s.read("max_range", c.scan.max_range);
    s.read("origin", c.scan.origin);
    s.finish();
  }
  if (root.has("filter")) {
    auto s = root.child("filter");
    s.read("drop_class_ids", c.filter.drop_class_ids);
    s.read("ground_z_threshold", c.filter.ground_z_threshold);
    s.read("hausdorff_threshold", c.filter.hausdorff_threshold);
    s.finish();
  }
  if (root.has("sampling")) {
    auto s = root.child("sampling");
    s.read("method", c.method);
    s.read("n_positive", c.sample.n_positive);
    s.read("n_negative", c.sample.n_negative);
    s.read("truncation_dmax", c.sample.truncation_dmax);
    s.read("gaussian_sigma", c.sample.gaussian_sigma);
    s.finish();
  }
  if (root.has("confidence")) {
    auto s = root.child("confidence");
    s.read("b", c.confidence.b);
    s.read("formula", c.confidence.formula);
    s.finish();
  }
  if (root.has("model")) {
    auto s = root.child("model");
    s.read("hidden_layers", c.model.hidden_layers);
    s.read("hidden_width", c.model.hidden_width);
    s.read("activation", c.model.activation);
    s.read("skip_connections", c.model.skip_connections);
    s.read("use_encoder", c.model.use_encoder);
    s.read("freq_scale", c.model.freq_scale);
    s.read("confidence_head", c.model.confidence_head);
    s.finish();
  }
  if (root.has("train")) {
    auto s = root.child("train");
    s.read("learning_rate", c.training.learning_rate);
    s.read("huber_delta", c.training.huber_delta);
    s.read("confidence_loss_weight", c.training.confidence_loss_weight);
    s.read("batch_size", c.training.batch_size);
    s.read("epochs", c.training.epochs);
    s.read("adam_beta1", c.training.adam_beta1);
    s.read("adam_beta2", c.training.adam_beta2);
    s.read("adam_eps", c.training.adam_eps);
    s.finish();
  }
  if (root.has("evaluation")) {
    auto s = root.child("evaluation");
    s.read("holdout_fraction", c.evaluation.holdout_fraction);
    s.read("shell_samples", c.evaluation.shell_samples);
    s.read("shell_halfwidth", c.evaluation.shell_halfwidth);
    s.finish();
  }
  if (root.has("extract")) {
    auto s = root.child("extract");
    s.read("bounds_min", c.extract.bounds.min);
    s.read("bounds_max", c.extract.bounds.max);
    s.read("resolution", c.extract.resolution);
    s.read("iso", c.extract.iso);
    s.finish();
  }
  if (root.has("slice")) {
    auto s = root.child("slice");
    s.read("z", c.slice.z);
    s.read("x_min", c.slice.bounds.x_min);
    s.read("x_max", c.slice.bounds.x_max);
    s.read("y_min", c.slice.bounds.y_min);
    s.read("y_max", c.slice.bounds.y_max);
    s.read("nx", c.slice.nx);
    s.read("ny", c.slice.ny);
    s.read("shade_range", c.slice.shade_range);
    s.finish();
  }
  if (root.has("sweep")) {
    auto s = root.child("sweep");
    s.read("min_layers", c.sweep.min_layers);
    s.read("max_layers", c.sweep.max_layers);
    s.read("hidden_width", c.sweep.hidden_width);
    s.read("activation", c.sweep.activation);
    s.finish();
  }
  root.finish();
  c.resolve();
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON (") + e.what() + ")");
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment_id"] = c.experiment_id;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["scan"] = {{"azimuth_steps", c.scan.azimuth_steps},
               {"elevation_min_deg", c.scan.elevation_min_deg},
               {"elevation_max_deg", c.scan.elevation_max_deg},
               {"elevation_count", c.scan.elevation_count},
               {"max_range", c.scan.max_range},
               {"origin", point_json(c.scan.origin)}};
  j["filter"] = {{"drop_class_ids", c.filter.drop_class_ids},
                 {"ground_z_threshold", c.filter.ground_z_threshold},
                 {"hausdorff_threshold", c.filter.hausdorff_threshold}};
  j["sampling"] = {{"method", to_string(c.method)},
                   {"n_positive", c.sample.n_positive},
                   {"n_negative", c.sample.n_negative},
                   {"truncation_dmax", c.sample.truncation_dmax},
                   {"gaussian_sigma", c.sample.gaussian_sigma}};
  j["confidence"] = {{"b", c.confidence.b},
                     {"formula", c.confidence.formula == ConfidenceFormula::kNormalized ? "normalized" : "literal"}};
  j["model"] = {{"hidden_layers", c.model.hidden_layers},
                {"hidden_width", c.model.hidden_width},
                {"activation", to_string(c.model.activation)},
                {"skip_connections", c.model.skip_connections},
                {"use_encoder", c.model.use_encoder},
                {"freq_scale", c.model.freq_scale},
                {"confidence_head", to_string(c.model.confidence_head)}};
  j["train"] = {{"learning_rate", c.training.learning_rate},
                {"huber_delta", c.training.huber_delta},
                {"confidence_loss_weight", c.training.confidence_loss_weight},
                {"batch_size", c.training.batch_size},
                {"epochs", c.training.epochs},
                {"adam_beta1", c.training.adam_beta1},
                {"adam_beta2", c.training.adam_beta2},
                {"adam_eps", c.training.adam_eps}};
  j["evaluation"] = {{"holdout_fraction", c.evaluation.holdout_fraction},
                     {"shell_samples", c.evaluation.shell_samples},
                     {"shell_halfwidth", c.evaluation.shell_halfwidth}};
  j["extract"] = {{"bounds_min", point_json(c.extract.bounds.min)},
                  {"bounds_max", point_json(c.extract.bounds.max)},
                  {"resolution", {c.extract.resolution.nx, c.extract.resolution.ny, c.extract.resolution.nz}},
                  {"iso", c.extract.iso}};
  j["slice"] = {{"z", c.slice.z},
                {"x_min", c.slice.bounds.x_min},
                {"x_max", c.slice.bounds.x_max},
                {"y_min", c.slice.bounds.y_min},
                {"y_max", c.slice.bounds.y_max},
                {"nx", c.slice.nx},
                {"ny", c.slice.ny},
                {"shade_range", c.slice.shade_range}};
  j["sweep"] = {{"min_layers", c.sweep.min_layers},
                {"max_layers", c.sweep.max_layers},
                {"hidden_width", c.sweep.hidden_width},
                {"activation", to_string(c.sweep.activation)}};
  return j;
}

}  // namespace lidarsdf
