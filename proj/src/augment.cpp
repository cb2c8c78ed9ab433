// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace lidarsdf {
namespace {

constexpr std::size_t kMaxRejections = 1'000'000;

// Uniform draw on the open interval (lo, hi).
double uniform_open(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (std::size_t i = 0; i < kMaxRejections; ++i) {
    const double t = dist(rng);
    if (t > lo && t < hi) return t;
  }
  throw Error("uniform sampling interval is degenerate");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void SampleSpec::validate() const {
  if (!(truncation_dmax > 0.0) || !std::isfinite(truncation_dmax))
    throw ValidationError("sampling.truncation_dmax must be > 0");
  if (!(gaussian_sigma > 0.0) || !std::isfinite(gaussian_sigma))
    throw ValidationError("sampling.gaussian_sigma must be > 0");
}

std::string to_string(AugmentMethod method) {
  return method == AugmentMethod::kUniform ? "uniform" : "gaussian";
}

AugmentMethod parse_augment_method(const std::string& name) {
  if (name == "uniform") return AugmentMethod::kUniform;
  if (name == "gaussian") return AugmentMethod::kGaussian;
  throw ValidationError("unknown augmentation method '" + name + "'");
}

std::vector<Ray> rays_from_cloud(const PointCloud& obstacles) {
  if (obstacles.empty()) throw ValidationError("rays_from_cloud: empty obstacle cloud");
  std::vector<Ray> rays;
  rays.reserve(obstacles.size());
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Point3 offset = obstacles.points[i].position - obstacles.sensor_origin;
    const double length = norm(offset);
    if (!(length > 0.0))
      throw ValidationError("rays_from_cloud: point " + std::to_string(i) + " coincides with the sensor origin");
    rays.push_back({obstacles.sensor_origin, offset / length, length});
  }
  return rays;
}

std::mt19937_64 ray_generator(std::uint64_t seed, std::size_t ray_index) {
  return std::mt19937_64(seed ^ static_cast<std::uint64_t>(ray_index));
}

std::vector<TaggedPoint> sample_uniform(const Ray& ray, const SampleSpec& spec, std::mt19937_64& rng,
                                        std::size_t ray_index) {
  std::vector<TaggedPoint> out;
  out.reserve(spec.n_positive + spec.n_negative);
  for (std::size_t i = 0; i < spec.n_positive; ++i) {
    const double t = uniform_open(rng, 0.0, ray.t_hit);
    out.push_back({ray.at(t), SampleSide::kPositive, t, ray_index});
  }
  for (std::size_t i = 0; i < spec.n_negative; ++i) {
    const double t = uniform_open(rng, ray.t_hit, ray.t_hit + spec.truncation_dmax);
    out.push_back({ray.at(t), SampleSide::kNegative, t, ray_index});
  }
  return out;
}

std::vector<TaggedPoint> sample_gaussian(const Ray& ray, const SampleSpec& spec, std::mt19937_64& rng,
                                         std::size_t ray_index) {
  std::normal_distribution<double> dist(ray.t_hit, spec.gaussian_sigma);
  const double t_max = ray.t_hit + spec.truncation_dmax;
  const std::size_t draws = spec.n_positive + spec.n_negative;
  std::vector<TaggedPoint> out;
  out.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    double t = 0.0;
    std::size_t attempts = 0;
    do {
      if (++attempts > kMaxRejections) throw Error("sample_gaussian: rejection sampling did not terminate");
      t = dist(rng);
    } while (!(t > 0.0 && t <= t_max));
    const SampleSide side = t < ray.t_hit ? SampleSide::kPositive : SampleSide::kNegative;
    out.push_back({ray.at(t), side, t, ray_index});
  }
  return out;
}

std::vector<LabeledSample> label_samples(std::span<const TaggedPoint> positions, const SurfaceIndex& index,
                                         std::span<const Ray> rays, const SampleSpec& spec,
                                         const ConfidenceParams& conf_params) {
  std::vector<LabeledSample> out;
  out.reserve(positions.size());
  for (const TaggedPoint& tp : positions) {
    if (tp.ray >= rays.size()) throw ValidationError("label_samples: sample refers to unknown ray");
    const double magnitude = index.nearest(tp.position).distance;
    LabeledSample s;
    s.position = tp.position;
    s.source_ray = tp.ray;
    if (tp.side == SampleSide::kPositive) {
      s.kind = SampleKind::kPositive;
      s.sdf = magnitude;
      s.confidence = 1.0;
    } else {
      // Negative labels never exceed the truncation depth.
      const double truncated = std::min(magnitude, spec.truncation_dmax);
      s.kind = SampleKind::kNegative;
      s.sdf = -truncated;
      s.confidence = confidence_value(s.sdf, std::min(truncated, conf_params.d_max), conf_params);
    }
    out.push_back(s);
  }
  return out;
}

Dataset build_dataset(const PointCloud& obstacles, const SampleSpec& spec, AugmentMethod method,
                      const ConfidenceParams& conf_params) {
  spec.validate();
  conf_params.validate();
  const auto rays = rays_from_cloud(obstacles);
  const auto surface = obstacles.positions();
  const SurfaceIndex index = build_index(surface, default_leaf_capacity(surface.size()));

  Dataset ds;
  ds.spec = spec;
  ds.method = method;
  ds.confidence = conf_params;
  ds.surface_count = surface.size();
  ds.samples.reserve(surface.size() * (1 + spec.n_positive + spec.n_negative));
  for (std::size_t i = 0; i < surface.size(); ++i) {
    LabeledSample s;
    s.position = surface[i];
    s.sdf = 0.0;
    s.confidence = 1.0;
    s.source_ray = i;
    s.kind = SampleKind::kSurface;
    ds.samples.push_back(s);
  }
  for (std::size_t r = 0; r < rays.size(); ++r) {
    auto rng = ray_generator(spec.seed, r);
    const auto tagged = method == AugmentMethod::kUniform ? sample_uniform(rays[r], spec, rng, r)
                                                          : sample_gaussian(rays[r], spec, rng, r);
    const auto labeled = label_samples(tagged, index, rays, spec, conf_params);
    ds.samples.insert(ds.samples.end(), labeled.begin(), labeled.end());
  }
  return ds;
}

std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  out << "# lidarsdf-dataset v1"
      << " method=" << to_string(ds.method) << " n_positive=" << ds.spec.n_positive
      << " n_negative=" << ds.spec.n_negative << " truncation_dmax=" << format_double(ds.spec.truncation_dmax)
      << " gaussian_sigma=" << format_double(ds.spec.gaussian_sigma) << " seed=" << ds.spec.seed
      << " surface_count=" << ds.surface_count << " b=" << format_double(ds.confidence.b)
      << " d_max=" << format_double(ds.confidence.d_max)
      << " formula=" << (ds.confidence.formula == ConfidenceFormula::kLiteral ? "literal" : "normalized") << '\n';
  out << "# x y z sdf confidence\n";
  char buf[160];
  for (const auto& s : ds.samples) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g\n", s.position.x, s.position.y, s.position.z, s.sdf,
                  s.confidence);
    out << buf;
  }
  return out.str();
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write file");
  out << serialize_dataset(dataset);
  if (!out) throw Error(path.string() + ": write failed");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# lidarsdf-dataset v1", 0) != 0)
    throw ValidationError(path.string() + ": missing dataset header");

  std::map<std::string, std::string> header;
  {
    std::istringstream hs(line.substr(std::string("# lidarsdf-dataset v1").size()));
    std::string kv;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError(path.string() + ": malformed header entry '" + kv + "'");
      header[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw ValidationError(path.string() + ": header lacks '" + key + "'");
    return it->second;
  };

  Dataset ds;
  try {
    ds.method = parse_augment_method(field("method"));
    ds.spec.n_positive = std::stoull(field("n_positive"));
    ds.spec.n_negative = std::stoull(field("n_negative"));
    ds.spec.truncation_dmax = std::stod(field("truncation_dmax"));
    ds.spec.gaussian_sigma = std::stod(field("gaussian_sigma"));
    ds.spec.seed = std::stoull(field("seed"));
    ds.surface_count = std::stoull(field("surface_count"));
    ds.confidence.b = std::stod(field("b"));
    ds.confidence.d_max = std::stod(field("d_max"));
    ds.confidence.formula = field("formula") == "literal" ? ConfidenceFormula::kLiteral : ConfidenceFormula::kNormalized;
  } catch (const std::logic_error& e) {
    throw ValidationError(path.string() + ": malformed header value");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    LabeledSample s;
    if (!(ls >> s.position.x >> s.position.y >> s.position.z >> s.sdf >> s.confidence))
      throw ValidationError(path.string() + ": malformed record at line " + std::to_string(line_no));
    const std::size_t i = ds.samples.size();
    if (i < ds.surface_count) {
      s.kind = SampleKind::kSurface;
      s.source_ray = i;
    } else {
      s.kind = s.sdf > 0.0 || (s.sdf == 0.0 && !std::signbit(s.sdf)) ? SampleKind::kPositive : SampleKind::kNegative;
    }
    ds.samples.push_back(s);
  }
  if (ds.samples.size() < ds.surface_count)
    throw ValidationError(path.string() + ": fewer records than surface_count");
  if (ds.samples.empty()) throw ValidationError(path.string() + ": zero samples");
  return ds;
}

}  // namespace lidarsdf
