// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lidarsdf/synthetic.hpp"
#include "test_util.hpp"

using namespace lidarsdf;
using lidarsdf::testing::TempDir;

namespace {

// Closed-form first intersection of a ray with a sphere, or -1 when missed.
double ray_sphere(const Point3& o, const Point3& d, const Sphere& s) {
  const Point3 oc = o - s.center;
  const double b = dot(oc, d);
  const double c = dot(oc, oc) - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0) return -1.0;
  const double t = -b - std::sqrt(disc);
  return t >= 0 ? t : -1.0;
}

ScanConfig single_ray(const Point3& origin, double max_range = 50.0) {
  ScanConfig cfg;
  cfg.azimuth_steps = 1;
  cfg.elevations = {0.0};
  cfg.max_range = max_range;
  cfg.origin = origin;
  return cfg;
}

}  // namespace

TEST_CASE("analytic distances") {
  const Sphere unit{{0, 0, 0}, 1.0};
  CHECK(analytic_sdf(unit, {2, 0, 0}) == 1.0);
  CHECK(analytic_sdf(unit, {0, 0, 0}) == -1.0);
  const Box box{{0, 0, 0}, {1, 1, 1}};
  CHECK(analytic_sdf(box, {2, 2, 0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(analytic_sdf(box, {0, 0, 0}) == -1.0);
  CHECK(analytic_sdf(box, {0.5, 0, 0}) == -0.5);
  CHECK(analytic_sdf(box, {3, 0, 0}) == 2.0);
  const Cylinder cyl{{0, 0, 0}, 1.0, 2.0};
  CHECK(analytic_sdf(cyl, {3, 0, 0}) == 2.0);
  CHECK(analytic_sdf(cyl, {0, 0, 5}) == 3.0);
  CHECK(analytic_sdf(cyl, {0, 0, 0}) == -1.0);
  CHECK(analytic_sdf(cyl, {2, 0, 3}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("union is bounded by its members") {
  const Scene scene = street_scene();
  std::mt19937_64 rng(4);
  for (const auto& p : lidarsdf::testing::random_points(500, rng, -5.0, 12.0)) {
    const double u = analytic_sdf(scene, p);
    for (const auto& prim : scene.primitives) CHECK(u <= analytic_sdf(prim, p));
  }
}

TEST_CASE("scene validation") {
  CHECK_THROWS_AS(Scene{}.validate(), ValidationError);
  CHECK_THROWS_AS((Scene{{Sphere{{0, 0, 0}, 0.0}}}.validate()), ValidationError);
  CHECK_THROWS_AS((Scene{{Box{{0, 0, 0}, {1, -1, 1}}}}.validate()), ValidationError);
  CHECK_THROWS_AS((Scene{{Cylinder{{0, 0, 0}, 1.0, 0.0}}}.validate()), ValidationError);
  ScanConfig cfg = single_ray({0, 0, 0});
  cfg.max_range = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = single_ray({0, 0, 0});
  cfg.azimuth_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("single ray hits the sphere") {
  const Scene scene{{Sphere{{5, 0, 0}, 1.0}}};
  const auto cloud = simulate_scan(scene, single_ray({0, 0, 0}));
  REQUIRE(cloud.points.size() == 1);
  CHECK(std::abs(cloud.points[0].position.x - 4.0) < 1e-3);
  CHECK(std::abs(cloud.points[0].position.y) < 1e-12);
  CHECK(std::abs(cloud.points[0].position.z) < 1e-12);
  CHECK(cloud.sensor_origin == Point3{0, 0, 0});
}

TEST_CASE("empty direction set and misses") {
  const Scene scene{{Sphere{{5, 0, 0}, 1.0}}};
  ScanConfig cfg = single_ray({0, 0, 0});
  cfg.elevations.clear();
  CHECK(simulate_scan(scene, cfg).points.empty());
  CHECK(simulate_scan(scene, single_ray({0, 0, 0}, 3.0)).points.empty());
  CHECK(simulate_scan(Scene{{Sphere{{0, 9, 0}, 1.0}}}, single_ray({0, 0, 0})).points.empty());
}

TEST_CASE("origin inside an obstacle is rejected") {
  CHECK_THROWS_AS(simulate_scan(Scene{{Sphere{{0, 0, 0}, 1.0}}}, single_ray({0.2, 0, 0})), ValidationError);
}

TEST_CASE("scan residuals and no overshoot") {
  const Scene scene = street_scene();
  const ScanConfig cfg = street_scan();
  const auto cloud = simulate_scan(scene, cfg);
  CHECK(cloud.points.size() > 50);
  for (const auto& cp : cloud.points) {
    const double s = analytic_sdf(scene, cp.position);
    CHECK(std::abs(s) < 1e-3);
    CHECK(s >= 0.0);
  }
  // Rings and ordering follow (elevation, azimuth).
  for (std::size_t i = 1; i < cloud.points.size(); ++i) CHECK(*cloud.points[i - 1].ring <= *cloud.points[i].ring);

  const Sphere sphere{{6, 2, 0}, 1.0};
  const Scene only{{sphere}};
  std::size_t hits = 0;
  for (std::size_t e = 0; e < cfg.elevations.size(); ++e) {
    for (std::size_t a = 0; a < cfg.azimuth_steps; ++a) {
      const Point3 d = cfg.direction(e, a);
      const auto tr = sphere_trace(only, cfg.origin, d, cfg.max_range);
      const double exact = ray_sphere(cfg.origin, d, sphere);
      if (!tr.hit) continue;
      ++hits;
      REQUIRE(exact > 0);
      CHECK(tr.t <= exact);
      CHECK(exact - tr.t < 1e-3);
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("scan is translation equivariant") {
  const Scene scene = street_scene();
  ScanConfig cfg = street_scan();
  cfg.azimuth_steps = 64;
  const Point3 shift{1.5, -0.75, 0.25};
  const auto base = simulate_scan(scene, cfg);
  ScanConfig moved = cfg;
  moved.origin = cfg.origin + shift;
  const auto shifted = simulate_scan(scene.translated(shift), moved);
  REQUIRE(base.points.size() == shifted.points.size());
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    CHECK(distance(base.points[i].position + shift, shifted.points[i].position) < 2e-4);
  }
}

TEST_CASE("elevation fan") {
  const auto fan = elevation_fan(-12.0, 12.0, 16);
  REQUIRE(fan.size() == 16);
  CHECK(fan.front() == doctest::Approx(-12.0 * M_PI / 180.0));
  CHECK(fan.back() == doctest::Approx(12.0 * M_PI / 180.0));
  REQUIRE(elevation_fan(3.0, 3.0, 1).size() == 1);
  CHECK(elevation_fan(3.0, 3.0, 1)[0] == doctest::Approx(3.0 * M_PI / 180.0));
}

TEST_CASE("oracle dataset audits") {
  const Scene scene{{Sphere{{6, 0, 0}, 1.5}}};
  ScanConfig cfg;
  cfg.azimuth_steps = 64;
  cfg.elevations = elevation_fan(-15.0, 15.0, 16);
  SampleSpec spec;
  spec.seed = 12;
  for (AugmentMethod m : {AugmentMethod::kGaussian, AugmentMethod::kUniform}) {
    const auto od = oracle_dataset(scene, cfg, spec, m);
    REQUIRE(od.true_sdf.size() == od.dataset.samples.size());
    REQUIRE(od.dataset.surface_count > 0);
    std::vector<double> err;
    for (std::size_t i = 0; i < od.true_sdf.size(); ++i) {
      const auto& s = od.dataset.samples[i];
      CHECK(od.true_sdf[i] == analytic_sdf(scene, s.position));
      err.push_back(std::abs(s.sdf - od.true_sdf[i]));
      if (s.kind == SampleKind::kSurface) CHECK(std::abs(od.true_sdf[i]) < 1e-3);
      if (s.kind == SampleKind::kPositive) CHECK(od.true_sdf[i] > 0.0);
    }
    std::nth_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(err.size() / 2), err.end());
    CHECK(err[err.size() / 2] < 0.1);
  }
}

TEST_CASE("scene JSON") {
  const Scene scene{{Sphere{{1, 2, 3}, 0.5}, Box{{-1, 0, 2}, {1, 2, 3}}, Cylinder{{4, 4, 0}, 0.3, 1.2}}};
  const Scene back = parse_scene(scene_to_json(scene));
  REQUIRE(back.primitives.size() == 3);
  std::mt19937_64 rng(1);
  for (const auto& p : lidarsdf::testing::random_points(50, rng, -5.0, 5.0)) {
    CHECK(analytic_sdf(back, p) == analytic_sdf(scene, p));
  }
  CHECK_THROWS_AS(parse_scene(R"({"primitives":[{"type":"cone","center":[0,0,0]}]})"), ValidationError);
  CHECK_THROWS_AS(parse_scene(R"({"primitives":[{"type":"sphere","center":[0,0,0],"radius":1,"colour":2}]})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_scene(R"({"primitives":[]})"), ValidationError);
  CHECK_THROWS_AS(parse_scene("not json"), ValidationError);

  TempDir dir;
  lidarsdf::testing::write_text(dir.path() / "s.json", scene_to_json(street_scene()));
  CHECK(load_scene(dir.path() / "s.json").primitives.size() == 2);
}
