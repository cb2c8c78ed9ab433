// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace lidarsdf {
namespace {

constexpr std::size_t kMaxTraceSteps = 100000;

double sdf_of(const Sphere& s, const Point3& p) { return distance(p, s.center) - s.radius; }

double sdf_of(const Box& b, const Point3& p) {
  const Point3 d = p - b.center;
  const double qx = std::abs(d.x) - b.half_extents.x;
  const double qy = std::abs(d.y) - b.half_extents.y;
  const double qz = std::abs(d.z) - b.half_extents.z;
  const double outside = norm({std::max(qx, 0.0), std::max(qy, 0.0), std::max(qz, 0.0)});
  const double inside = std::min(std::max(qx, std::max(qy, qz)), 0.0);
  return outside + inside;
}

double sdf_of(const Cylinder& c, const Point3& p) {
  const Point3 d = p - c.center;
  const double radial = std::hypot(d.x, d.y) - c.radius;
  const double axial = std::abs(d.z) - c.half_height;
  const double outside = std::hypot(std::max(radial, 0.0), std::max(axial, 0.0));
  const double inside = std::min(std::max(radial, axial), 0.0);
  return outside + inside;
}

Point3 read_point(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("scene: '" + field + "' must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json write_point(const Point3& p) { return nlohmann::json::array({p.x, p.y, p.z}); }

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

void Scene::validate() const {
  if (primitives.empty()) throw ValidationError("scene: no primitives");
  for (const auto& prim : primitives) {
    std::visit(
        [](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          bool ok = is_finite(p.center);
          if constexpr (std::is_same_v<T, Sphere>) ok = ok && p.radius > 0.0;
          if constexpr (std::is_same_v<T, Box>)
            ok = ok && p.half_extents.x > 0.0 && p.half_extents.y > 0.0 && p.half_extents.z > 0.0;
          if constexpr (std::is_same_v<T, Cylinder>) ok = ok && p.radius > 0.0 && p.half_height > 0.0;
          if (!ok) throw ValidationError("scene: primitive sizes must be > 0 and centers finite");
        },
        prim);
  }
}

Scene Scene::translated(const Point3& offset) const {
  Scene out = *this;
  for (auto& prim : out.primitives) std::visit([&](auto& p) { p.center = p.center + offset; }, prim);
  return out;
}

double analytic_sdf(const Primitive& primitive, const Point3& p) {
  return std::visit([&](const auto& prim) { return sdf_of(prim, p); }, primitive);
}

double analytic_sdf(const Scene& scene, const Point3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& prim : scene.primitives) best = std::min(best, analytic_sdf(prim, p));
  return best;
}

Point3 analytic_normal(const Scene& scene, const Point3& p, double step) {
  const Point3 g{analytic_sdf(scene, p + Point3{step, 0, 0}) - analytic_sdf(scene, p - Point3{step, 0, 0}),
                 analytic_sdf(scene, p + Point3{0, step, 0}) - analytic_sdf(scene, p - Point3{0, step, 0}),
                 analytic_sdf(scene, p + Point3{0, 0, step}) - analytic_sdf(scene, p - Point3{0, 0, step})};
  const double n = norm(g);
  return n > 0.0 ? g / n : Point3{0, 0, 1};
}

void ScanConfig::validate() const {
  if (azimuth_steps < 1) throw ValidationError("scan.azimuth_steps must be >= 1");
  if (!(max_range > 0.0)) throw ValidationError("scan.max_range must be > 0");
  if (!is_finite(origin)) throw ValidationError("scan.origin must be finite");
}

Point3 ScanConfig::direction(std::size_t elevation_index, std::size_t azimuth_index) const {
  const double el = elevations.at(elevation_index);
  const double az = 2.0 * std::numbers::pi * static_cast<double>(azimuth_index) / static_cast<double>(azimuth_steps);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

std::vector<double> elevation_fan(double min_deg, double max_deg, std::size_t count) {
  std::vector<double> out;
  const double to_rad = std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back((min_deg + f * (max_deg - min_deg)) * to_rad);
  }
  return out;
}

Scene street_scene() {
  return Scene{{Sphere{{6.0, 2.0, 0.0}, 1.0}, Box{{8.0, -3.0, 0.0}, {2.0, 1.0, 1.0}}}};
}

ScanConfig street_scan() {
  ScanConfig cfg;
  cfg.azimuth_steps = 128;
  cfg.elevations = elevation_fan(-12.0, 12.0, 16);
  cfg.max_range = 50.0;
  cfg.origin = {0.0, 0.0, 0.0};
  return cfg;
}

TraceResult sphere_trace(const Scene& scene, const Point3& origin, const Point3& direction, double max_range) {
  TraceResult r;
  double t = 0.0;
  for (std::size_t step = 0; step < kMaxTraceSteps; ++step) {
    const Point3 p = origin + direction * t;
    const double d = analytic_sdf(scene, p);
    r.steps = step + 1;
    if (d < kSurfaceThreshold) {
      r.hit = true;
      r.t = t;
      r.point = p;
      return r;
    }
    t += d;
    if (t > max_range) break;
  }
  return r;
}

PointCloud simulate_scan(const Scene& scene, const ScanConfig& config) {
  scene.validate();
  config.validate();
  if (!(analytic_sdf(scene, config.origin) > 0.0))
    throw ValidationError("simulate_scan: sensor origin is inside an obstacle");
  PointCloud cloud;
  cloud.sensor_origin = config.origin;
  for (std::size_t e = 0; e < config.elevations.size(); ++e) {
    for (std::size_t a = 0; a < config.azimuth_steps; ++a) {
      const auto hit = sphere_trace(scene, config.origin, config.direction(e, a), config.max_range);
      if (!hit.hit) continue;
      CloudPoint cp;
      cp.position = hit.point;
      cp.ring = static_cast<int>(e);
      cloud.points.push_back(cp);
    }
  }
  return cloud;
}

OracleDataset oracle_dataset(const Scene& scene, const ScanConfig& config, const SampleSpec& spec,
                             AugmentMethod method, const ConfidenceParams& conf_params) {
  const PointCloud cloud = simulate_scan(scene, config);
  if (cloud.empty()) throw ValidationError("oracle_dataset: scan produced no points");
  OracleDataset out{build_dataset(cloud, spec, method, conf_params), {}};
  out.true_sdf.reserve(out.dataset.size());
  for (const auto& s : out.dataset.samples) out.true_sdf.push_back(analytic_sdf(scene, s.position));
  return out;
}

Scene parse_scene(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene: invalid JSON (") + e.what() + ")");
  }
  if (!doc.is_object() || !doc.contains("primitives") || !doc["primitives"].is_array())
    throw ValidationError("scene: expected an object with a 'primitives' array");
  reject_unknown(doc, {"primitives"}, "scene");
  Scene scene;
  try {
    for (std::size_t i = 0; i < doc["primitives"].size(); ++i) {
      const auto& j = doc["primitives"][i];
      const std::string where = "scene.primitives[" + std::to_string(i) + "]";
      const std::string type = j.at("type").get<std::string>();
      if (type == "sphere") {
        reject_unknown(j, {"type", "center", "radius"}, where);
        scene.primitives.push_back(Sphere{read_point(j.at("center"), "center"), j.at("radius").get<double>()});
      } else if (type == "box") {
        reject_unknown(j, {"type", "center", "half_extents"}, where);
        scene.primitives.push_back(
            Box{read_point(j.at("center"), "center"), read_point(j.at("half_extents"), "half_extents")});
      } else if (type == "cylinder") {
        reject_unknown(j, {"type", "center", "radius", "half_height"}, where);
        scene.primitives.push_back(Cylinder{read_point(j.at("center"), "center"), j.at("radius").get<double>(),
                                            j.at("half_height").get<double>()});
      } else {
        throw ValidationError(where + ".type: unknown primitive '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene: ") + e.what());
  }
  scene.validate();
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scene file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string scene_to_json(const Scene& scene) {
  nlohmann::json prims = nlohmann::json::array();
  for (const auto& prim : scene.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Sphere>)
            prims.push_back({{"type", "sphere"}, {"center", write_point(p.center)}, {"radius", p.radius}});
          if constexpr (std::is_same_v<T, Box>)
            prims.push_back(
                {{"type", "box"}, {"center", write_point(p.center)}, {"half_extents", write_point(p.half_extents)}});
          if constexpr (std::is_same_v<T, Cylinder>)
            prims.push_back({{"type", "cylinder"},
                             {"center", write_point(p.center)},
                             {"radius", p.radius},
                             {"half_height", p.half_height}});
        },
        prim);
  }
  return nlohmann::json{{"primitives", prims}}.dump(2);
}

}  // namespace lidarsdf
