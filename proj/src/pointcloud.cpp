// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/pointcloud.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "lidarsdf/spatial.hpp"

namespace lidarsdf {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string file_error(const std::filesystem::path& path, const std::string& what) {
  return path.string() + ": " + what;
}

float load_le_float(const unsigned char* bytes) {
  std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                       (static_cast<std::uint32_t>(bytes[2]) << 16) |
                       (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::vector<Point3> PointCloud::positions() const {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position);
  return out;
}

void FilterConfig::validate() const {
  if (!(hausdorff_threshold >= 0.0)) throw ValidationError("filter.hausdorff_threshold must be >= 0");
  if (!std::isfinite(ground_z_threshold)) throw ValidationError("filter.ground_z_threshold must be finite");
}

PointCloud load_ascii_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(file_error(path, "cannot open file"));

  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0].front() == '#') {
      // "# origin x y z" or "#origin x y z"
      std::size_t k = tokens[0] == "#" ? 1 : 0;
      std::string_view key = tokens[0] == "#" ? (tokens.size() > 1 ? tokens[1] : "") : tokens[0].substr(1);
      if (key == "origin") {
        k += 1;
        double xyz[3];
        if (tokens.size() != k + 3 || !parse_number(tokens[k], xyz[0]) ||
            !parse_number(tokens[k + 1], xyz[1]) || !parse_number(tokens[k + 2], xyz[2]))
          throw ValidationError(file_error(path, "malformed origin header at line " + std::to_string(line_no)));
        cloud.sensor_origin = {xyz[0], xyz[1], xyz[2]};
        if (!is_finite(cloud.sensor_origin))
          throw ValidationError(file_error(path, "non-finite origin at line " + std::to_string(line_no)));
      }
      continue;
    }
    auto malformed = [&] {
      return ValidationError(file_error(path, "malformed line " + std::to_string(line_no)));
    };
    if (tokens.size() < 3 || tokens.size() > 5) throw malformed();
    CloudPoint p;
    double xyz[3];
    for (int a = 0; a < 3; ++a)
      if (!parse_number(tokens[a], xyz[a])) throw malformed();
    p.position = {xyz[0], xyz[1], xyz[2]};
    if (!is_finite(p.position)) throw malformed();
    if (tokens.size() >= 4) {
      double intensity;
      if (!parse_number(tokens[3], intensity)) throw malformed();
      p.intensity = intensity;
    }
    if (tokens.size() == 5) {
      int class_id;
      if (!parse_number(tokens[4], class_id) || class_id < 0) throw malformed();
      p.class_id = class_id;
    }
    cloud.points.push_back(p);
  }
  if (cloud.points.empty()) throw ValidationError(file_error(path, "zero points"));
  return cloud;
}

void write_ascii_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(file_error(path, "cannot write file"));
  const bool all_class = !cloud.empty() && std::all_of(cloud.points.begin(), cloud.points.end(),
                                                       [](const CloudPoint& p) { return p.class_id.has_value(); });
  const bool all_intensity =
      !cloud.empty() && std::all_of(cloud.points.begin(), cloud.points.end(),
                                    [](const CloudPoint& p) { return p.intensity.has_value(); });
  char buf[160];
  std::snprintf(buf, sizeof(buf), "# origin %.17g %.17g %.17g\n", cloud.sensor_origin.x, cloud.sensor_origin.y,
                cloud.sensor_origin.z);
  out << buf;
  for (const auto& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", p.position.x, p.position.y, p.position.z);
    out << buf;
    if (all_intensity || all_class) {
      std::snprintf(buf, sizeof(buf), " %.17g", p.intensity.value_or(0.0));
      out << buf;
    }
    if (all_class) out << ' ' << *p.class_id;
    out << '\n';
  }
  if (!out) throw Error(file_error(path, "write failed"));
}

PointCloud load_bin_records(const std::filesystem::path& path, const RecordLayout& layout) {
  const int fields[] = {layout.x, layout.y, layout.z};
  for (int f : fields)
    if (f < 0 || static_cast<std::size_t>(f) >= layout.floats_per_record)
      throw ValidationError("record layout: coordinate offset out of range");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(file_error(path, "cannot open file"));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t rec = layout.record_bytes();
  if (rec == 0 || bytes.size() % rec != 0) throw ValidationError(file_error(path, "truncated record"));
  const std::size_t n = bytes.size() / rec;

  auto field = [&](std::size_t record, int offset) {
    return static_cast<double>(load_le_float(bytes.data() + record * rec + static_cast<std::size_t>(offset) * 4));
  };
  auto present = [&](int offset) { return offset >= 0 && static_cast<std::size_t>(offset) < layout.floats_per_record; };

  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CloudPoint p;
    p.position = {field(i, layout.x), field(i, layout.y), field(i, layout.z)};
    if (!is_finite(p.position))
      throw ValidationError(file_error(path, "non-finite coordinate in record " + std::to_string(i)));
    if (present(layout.intensity)) p.intensity = field(i, layout.intensity);
    if (present(layout.ring)) p.ring = static_cast<int>(field(i, layout.ring));
    cloud.points.push_back(p);
  }
  if (cloud.points.empty()) throw ValidationError(file_error(path, "zero points"));
  return cloud;
}

std::vector<int> load_class_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(file_error(path, "cannot open file"));
  std::vector<int> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    int id;
    if (tokens.size() != 1 || !parse_number(tokens[0], id) || id < 0)
      throw ValidationError(file_error(path, "malformed class id at line " + std::to_string(line_no)));
    ids.push_back(id);
  }
  return ids;
}

void attach_class_labels(PointCloud& cloud, const std::vector<int>& class_ids) {
  if (class_ids.size() != cloud.size())
    throw ValidationError("label count mismatch: " + std::to_string(class_ids.size()) + " labels for " +
                          std::to_string(cloud.size()) + " points");
  for (std::size_t i = 0; i < class_ids.size(); ++i) cloud.points[i].class_id = class_ids[i];
}

PointCloud filter_classes(const PointCloud& cloud, const FilterConfig& config) {
  PointCloud out;
  out.sensor_origin = cloud.sensor_origin;
  out.timestamp = cloud.timestamp;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (!p.class_id) throw ValidationError("filter_classes: point " + std::to_string(i) + " has no class id");
    if (!config.drop_class_ids.contains(*p.class_id)) out.points.push_back(p);
  }
  return out;
}

GroundSplit ground_filter(const PointCloud& cloud, const FilterConfig& config) {
  GroundSplit split;
  split.obstacles.sensor_origin = split.floor.sensor_origin = cloud.sensor_origin;
  split.obstacles.timestamp = split.floor.timestamp = cloud.timestamp;
  for (const auto& p : cloud.points) {
    if (p.position.z < config.ground_z_threshold)
      split.floor.points.push_back(p);
    else
      split.obstacles.points.push_back(p);
  }
  return split;
}

double directed_hausdorff(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw ValidationError("directed_hausdorff: empty input cloud");
  const auto targets = b.positions();
  const SurfaceIndex index = build_index(targets, default_leaf_capacity(targets.size()));
  double worst = 0.0;
  for (const auto& p : a.points) worst = std::max(worst, index.nearest(p.position).distance);
  return worst;
}

bool scene_change_gate(const PointCloud& prev, const PointCloud& curr, const FilterConfig& config) {
  return directed_hausdorff(curr, prev) > config.hausdorff_threshold;
}

}  // namespace lidarsdf
