// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Geometry from a signed distance field: dense grids, zero level set meshes,
// bird's-eye slices and clearance queries.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "lidarsdf/geometry.hpp"
#include "lidarsdf/model.hpp"

namespace lidarsdf {

using SdfFunction = std::function<double(const Point3&)>;

struct Bounds3 {
  Point3 min;
  Point3 max;

  void validate() const;
};

struct GridResolution {
  std::size_t nx = 2;
  std::size_t ny = 2;
  std::size_t nz = 2;
};

/// Lattice coordinate i of n points spanning [lo, hi]. Refining n to 2n - 1
/// maps index i to 2i without moving the point.
double lattice_coordinate(double lo, double hi, std::size_t i, std::size_t n);

/// Values on an nx x ny x nz lattice, x-major: index = (i * ny + j) * nz + k.
struct GridField {
  Bounds3 bounds;
  GridResolution resolution;
  std::vector<double> values;

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * resolution.ny + j) * resolution.nz + k;
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
  Point3 lattice_point(std::size_t i, std::size_t j, std::size_t k) const;
};

GridField sample_grid(const SdfFunction& sdf, const Bounds3& bounds, const GridResolution& resolution);
/// Evaluates the signed distance head. Uses `threads` workers (0 = hardware).
GridField sample_grid(const SdfModel& model, const Bounds3& bounds, const GridResolution& resolution,
                      unsigned threads = 0);

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

struct MarchingCubesResult {
  TriangleMesh mesh;
  std::size_t dropped_degenerate = 0;
};

/// Classic 256-case marching cubes with linear edge interpolation. Vertices
/// are shared between neighboring cells; zero-area triangles are dropped and
/// counted.
MarchingCubesResult marching_cubes(const GridField& field, double iso = 0.0);

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
void write_ply(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Horizontal slice at height z. values[j * nx + i] holds lattice point
/// (x_i, y_j); row j = 0 is the lowest y.
struct SliceField {
  double z = 0.0;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  std::size_t nx = 2, ny = 2;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[j * nx + i]; }
  double x(std::size_t i) const { return lattice_coordinate(x_min, x_max, i, nx); }
  double y(std::size_t j) const { return lattice_coordinate(y_min, y_max, j, ny); }
};

struct SliceBounds {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

SliceField birds_eye_slice(const SdfFunction& sdf, double z, const SliceBounds& bounds, std::size_t nx,
                           std::size_t ny);
SliceField birds_eye_slice(const SdfModel& model, double z, const SliceBounds& bounds, std::size_t nx,
                           std::size_t ny, unsigned threads = 0);

/// Gray level of one slice value: negative is dark (black deep inside),
/// positive is light (white beyond `shade_range`).
int slice_gray(double value, double shade_range = 1.0);

/// Plain PGM (P2), top row = largest y.
void write_pgm(const SliceField& slice, const std::filesystem::path& path, double shade_range = 1.0);
/// CSV with header `x,y,z,value`, one row per lattice point.
void write_slice_csv(const SliceField& slice, const std::filesystem::path& path);
/// CSV with header `x,y,z,value`, x-major order.
void write_grid_csv(const GridField& grid, const std::filesystem::path& path);

/// 4-connected components of the strictly negative cells.
std::size_t count_negative_components(const SliceField& slice);

inline SdfPrediction query_sdf(const SdfModel& model, const Point3& p) { return model.forward(p); }

/// Smallest predicted distance over the body samples; negative means
/// predicted penetration.
double min_clearance(const SdfModel& model, std::span<const Point3> body_points);
double min_clearance(const SdfFunction& sdf, std::span<const Point3> body_points);

}  // namespace lidarsdf
