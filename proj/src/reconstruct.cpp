// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>
#include <unordered_map>

#include "marching_cubes_tables.hpp"

namespace lidarsdf {
namespace {

// 8M doubles = 64 MB per evaluation pass.
constexpr std::size_t kChunkValues = std::size_t{1} << 23;

void parallel_for(std::size_t begin, std::size_t end, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n = end - begin;
  if (threads <= 1 || n < 1024) {
    body(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = begin + t * per;
    const std::size_t hi = std::min(end, lo + per);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& th : pool) th.join();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write file");
  return out;
}

void validate_resolution(const GridResolution& r) {
  if (r.nx < 2 || r.ny < 2 || r.nz < 2) throw ValidationError("grid resolution must be >= 2 per axis");
}

void validate_slice(const SliceBounds& b, std::size_t nx, std::size_t ny) {
  if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) throw ValidationError("slice bounds: min must be < max");
  if (nx < 2 || ny < 2) throw ValidationError("slice resolution must be >= 2 per axis");
}

SliceField empty_slice(double z, const SliceBounds& b, std::size_t nx, std::size_t ny) {
  SliceField s;
  s.z = z;
  s.x_min = b.x_min;
  s.x_max = b.x_max;
  s.y_min = b.y_min;
  s.y_max = b.y_max;
  s.nx = nx;
  s.ny = ny;
  s.values.assign(nx * ny, 0.0);
  return s;
}

}  // namespace

void Bounds3::validate() const {
  if (!(min.x < max.x) || !(min.y < max.y) || !(min.z < max.z))
    throw ValidationError("bounds: min must be < max on every axis");
}

double lattice_coordinate(double lo, double hi, std::size_t i, std::size_t n) {
  const double t = static_cast<double>(i) / static_cast<double>(n - 1);
  return lo + t * (hi - lo);
}

Point3 GridField::lattice_point(std::size_t i, std::size_t j, std::size_t k) const {
  return {lattice_coordinate(bounds.min.x, bounds.max.x, i, resolution.nx),
          lattice_coordinate(bounds.min.y, bounds.max.y, j, resolution.ny),
          lattice_coordinate(bounds.min.z, bounds.max.z, k, resolution.nz)};
}

GridField sample_grid(const SdfFunction& sdf, const Bounds3& bounds, const GridResolution& resolution) {
  bounds.validate();
  validate_resolution(resolution);
  GridField g{bounds, resolution, {}};
  g.values.resize(resolution.nx * resolution.ny * resolution.nz);
  for (std::size_t i = 0; i < resolution.nx; ++i)
    for (std::size_t j = 0; j < resolution.ny; ++j)
      for (std::size_t k = 0; k < resolution.nz; ++k) g.values[g.index(i, j, k)] = sdf(g.lattice_point(i, j, k));
  return g;
}

GridField sample_grid(const SdfModel& model, const Bounds3& bounds, const GridResolution& resolution,
                      unsigned threads) {
  bounds.validate();
  validate_resolution(resolution);
  GridField g{bounds, resolution, {}};
  const std::size_t total = resolution.nx * resolution.ny * resolution.nz;
  g.values.resize(total);
  const std::size_t plane = resolution.ny * resolution.nz;
  for (std::size_t chunk = 0; chunk < total; chunk += kChunkValues) {
    parallel_for(chunk, std::min(total, chunk + kChunkValues), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t idx = lo; idx < hi; ++idx) {
        const std::size_t i = idx / plane;
        const std::size_t j = (idx % plane) / resolution.nz;
        const std::size_t k = idx % resolution.nz;
        g.values[idx] = model.forward(g.lattice_point(i, j, k)).sdf;
      }
    });
  }
  return g;
}

MarchingCubesResult marching_cubes(const GridField& field, double iso) {
  const auto& res = field.resolution;
  validate_resolution(res);
  if (field.values.size() != res.nx * res.ny * res.nz) throw ValidationError("marching_cubes: value count mismatch");
  for (double v : field.values)
    if (!std::isfinite(v)) throw ValidationError("marching_cubes: non-finite field value");

  MarchingCubesResult result;
  auto& mesh = result.mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

  auto vertex_on_edge = [&](std::size_t ci, std::size_t cj, std::size_t ck, int edge) {
    const auto& [a, b] = detail::kCubeEdges[static_cast<std::size_t>(edge)];
    const auto& ca = detail::kCubeCorners[static_cast<std::size_t>(a)];
    const auto& cb = detail::kCubeCorners[static_cast<std::size_t>(b)];
    const std::size_t ai = ci + ca[0], aj = cj + ca[1], ak = ck + ca[2];
    const std::size_t bi = ci + cb[0], bj = cj + cb[1], bk = ck + cb[2];
    const int axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
    const std::uint64_t key =
        static_cast<std::uint64_t>(field.index(std::min(ai, bi), std::min(aj, bj), std::min(ak, bk))) * 3 +
        static_cast<std::uint64_t>(axis);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    // Interpolate from the lower lattice end so both neighbors agree exactly.
    const bool a_low = ai + aj + ak < bi + bj + bk;
    const std::size_t li = a_low ? ai : bi, lj = a_low ? aj : bj, lk = a_low ? ak : bk;
    const std::size_t hi = a_low ? bi : ai, hj = a_low ? bj : aj, hk = a_low ? bk : ak;
    const double v0 = field.at(li, lj, lk);
    const double v1 = field.at(hi, hj, hk);
    const Point3 p0 = field.lattice_point(li, lj, lk);
    const Point3 p1 = field.lattice_point(hi, hj, hk);
    double t = (iso - v0) / (v1 - v0);
    t = std::clamp(t, 0.0, 1.0);
    const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(p0 + (p1 - p0) * t);
    edge_vertex.emplace(key, id);
    return id;
  };

  for (std::size_t i = 0; i + 1 < res.nx; ++i) {
    for (std::size_t j = 0; j + 1 < res.ny; ++j) {
      for (std::size_t k = 0; k + 1 < res.nz; ++k) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = detail::kCubeCorners[static_cast<std::size_t>(c)];
          if (field.at(i + o[0], j + o[1], k + o[2]) < iso) cube |= 1 << c;
        }
        if (cube == 0 || cube == 255) continue;
        const auto& row = detail::kTriangleTable[cube];
        for (int t = 0; row[t] != -1; t += 3) {
          const std::array<std::uint32_t, 3> tri = {vertex_on_edge(i, j, k, row[t]),
                                                    vertex_on_edge(i, j, k, row[t + 1]),
                                                    vertex_on_edge(i, j, k, row[t + 2])};
          const Point3& a = mesh.vertices[tri[0]];
          const Point3& b = mesh.vertices[tri[1]];
          const Point3& c = mesh.vertices[tri[2]];
          const Point3 u = b - a;
          const Point3 v = c - a;
          const Point3 cross{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
          if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || dot(cross, cross) == 0.0) {
            ++result.dropped_degenerate;
            continue;
          }
          mesh.triangles.push_back(tri);
        }
      }
    }
  }
  return result;
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  auto out = open_out(path);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\nproperty double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

SliceField birds_eye_slice(const SdfFunction& sdf, double z, const SliceBounds& bounds, std::size_t nx,
                           std::size_t ny) {
  validate_slice(bounds, nx, ny);
  SliceField s = empty_slice(z, bounds, nx, ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) s.values[j * nx + i] = sdf({s.x(i), s.y(j), z});
  return s;
}

SliceField birds_eye_slice(const SdfModel& model, double z, const SliceBounds& bounds, std::size_t nx,
                           std::size_t ny, unsigned threads) {
  validate_slice(bounds, nx, ny);
  SliceField s = empty_slice(z, bounds, nx, ny);
  parallel_for(0, nx * ny, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t idx = lo; idx < hi; ++idx)
      s.values[idx] = model.forward({s.x(idx % nx), s.y(idx / nx), z}).sdf;
  });
  return s;
}

int slice_gray(double value, double shade_range) {
  const double closeness = std::clamp(1.0 - std::abs(value) / shade_range, 0.0, 1.0);
  if (value < 0.0) return static_cast<int>(std::lround(96.0 * closeness));
  return 255 - static_cast<int>(std::lround(64.0 * closeness));
}

void write_pgm(const SliceField& slice, const std::filesystem::path& path, double shade_range) {
  auto out = open_out(path);
  out << "P2\n# bird's-eye slice z=" << slice.z << "\n" << slice.nx << ' ' << slice.ny << "\n255\n";
  for (std::size_t row = 0; row < slice.ny; ++row) {
    const std::size_t j = slice.ny - 1 - row;
    for (std::size_t i = 0; i < slice.nx; ++i) {
      if (i) out << ' ';
      out << slice_gray(slice.at(i, j), shade_range);
    }
    out << '\n';
  }
}

void write_slice_csv(const SliceField& slice, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,y,z,value\n";
  char buf[160];
  for (std::size_t j = 0; j < slice.ny; ++j) {
    for (std::size_t i = 0; i < slice.nx; ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.17g\n", slice.x(i), slice.y(j), slice.z, slice.at(i, j));
      out << buf;
    }
  }
}

void write_grid_csv(const GridField& grid, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,y,z,value\n";
  char buf[160];
  const auto& r = grid.resolution;
  for (std::size_t i = 0; i < r.nx; ++i)
    for (std::size_t j = 0; j < r.ny; ++j)
      for (std::size_t k = 0; k < r.nz; ++k) {
        const Point3 p = grid.lattice_point(i, j, k);
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.17g\n", p.x, p.y, p.z, grid.at(i, j, k));
        out << buf;
      }
}

std::size_t count_negative_components(const SliceField& slice) {
  std::vector<std::uint8_t> seen(slice.values.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  for (std::size_t start = 0; start < slice.values.size(); ++start) {
    if (seen[start] || !(slice.values[start] < 0.0)) continue;
    ++components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const std::size_t i = idx % slice.nx;
      const std::size_t j = idx / slice.nx;
      const std::size_t neighbors[4] = {i > 0 ? idx - 1 : idx, i + 1 < slice.nx ? idx + 1 : idx,
                                        j > 0 ? idx - slice.nx : idx, j + 1 < slice.ny ? idx + slice.nx : idx};
      for (std::size_t n : neighbors) {
        if (n == idx || seen[n] || !(slice.values[n] < 0.0)) continue;
        seen[n] = 1;
        stack.push_back(n);
      }
    }
  }
  return components;
}

double min_clearance(const SdfModel& model, std::span<const Point3> body_points) {
  if (body_points.empty()) throw ValidationError("min_clearance: empty body point set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : body_points) best = std::min(best, query_sdf(model, p).sdf);
  return best;
}

double min_clearance(const SdfFunction& sdf, std::span<const Point3> body_points) {
  if (body_points.empty()) throw ValidationError("min_clearance: empty body point set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : body_points) best = std::min(best, sdf(p));
  return best;
}

}  // namespace lidarsdf
