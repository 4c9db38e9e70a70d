#include <doctest.h>

#include <cmath>

#include "semsurf/geom.hpp"

using namespace semsurf;

namespace {

CameraIntrinsics simple_camera(double f = 100, int wh = 101) {
  CameraIntrinsics K;
  K.fx = K.fy = f;
  K.cx = K.cy = wh / 2;
  K.width = K.height = wh;
  return K;
}

}  // namespace

TEST_CASE("pixel_to_ray principal point gives +z") {
  const CameraIntrinsics K = simple_camera();
  const Ray r = pixel_to_ray(K, Pose{}, 50, 50);
  CHECK(r.origin.norm() == 0.0);
  CHECK((r.direction - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("pixel_to_ray hand pinhole computation") {
  CameraIntrinsics K;
  K.fx = K.fy = 100;
  K.cx = K.cy = 50;
  K.width = K.height = 200;
  const Ray r = pixel_to_ray(K, Pose{}, 50, 150);
  CHECK(r.direction.x() == doctest::Approx(0.7071).epsilon(1e-3));
  CHECK(r.direction.y() == doctest::Approx(0.0));
  CHECK(r.direction.z() == doctest::Approx(0.7071).epsilon(1e-3));
}

TEST_CASE("pixel_to_ray rejects out-of-bounds pixels") {
  const CameraIntrinsics K = simple_camera();
  CHECK_THROWS_AS(pixel_to_ray(K, Pose{}, -1, 0), input_error);
  CHECK_THROWS_AS(pixel_to_ray(K, Pose{}, 0, 101), input_error);
}

TEST_CASE("ray projects back to its pixel") {
  const CameraIntrinsics K = simple_camera();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Pose pose = Pose::look_at(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)),
                              Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 3.0),
                              Vec3::UnitY());
    pose.validate();
    const int row = int(rng.uniform_index(101)), col = int(rng.uniform_index(101));
    const Ray r = pixel_to_ray(K, pose, row, col);
    const Vec3 p = r.origin + rng.uniform(0.5, 3.0) * r.direction;
    const auto [prow, pcol] = project_point(K, pose, p);
    CHECK(std::abs(prow - row) < 1e-4);
    CHECK(std::abs(pcol - col) < 1e-4);
  }
}

TEST_CASE("sample_ray midpoint stratification") {
  Rng rng(0);
  const RaySamples s = sample_ray(0.0, 1.0, 2, false, rng);
  REQUIRE(s.depth.size() == 2);
  CHECK(s.depth[0] == doctest::Approx(0.25));
  CHECK(s.depth[1] == doctest::Approx(0.75));
  CHECK(s.spacing[0] == doctest::Approx(0.5));
  CHECK(s.spacing[1] == doctest::Approx(0.5));  // terminal spacing repeats
}

TEST_CASE("sample_ray uniform bins") {
  Rng rng(0);
  const RaySamples s = sample_ray(0.0, 2.0, 4, false, rng);
  const double expect[4] = {0.25, 0.75, 1.25, 1.75};
  for (int i = 0; i < 4; ++i) {
    CHECK(s.depth[std::size_t(i)] == doctest::Approx(expect[i]));
    CHECK(s.spacing[std::size_t(i)] == doctest::Approx(0.5));
  }
}

TEST_CASE("sample_ray rejects degenerate intervals") {
  Rng rng(0);
  CHECK_THROWS_AS(sample_ray(1.0, 1.0, 4, false, rng), input_error);
  CHECK_THROWS_AS(sample_ray(2.0, 1.0, 4, false, rng), input_error);
}

TEST_CASE("jittered samples are strictly increasing within bounds") {
  Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const double near = rng.uniform(0.0, 1.0);
    const double far = near + rng.uniform(0.1, 3.0);
    const int n = 2 + int(rng.uniform_index(62));
    const RaySamples s = sample_ray(near, far, n, true, rng);
    for (int i = 0; i < n; ++i) {
      CHECK(s.depth[std::size_t(i)] >= near);
      CHECK(s.depth[std::size_t(i)] <= far);
      if (i > 0) CHECK(s.depth[std::size_t(i)] > s.depth[std::size_t(i) - 1]);
    }
  }
}

TEST_CASE("pose text roundtrip") {
  std::vector<Pose> poses;
  Rng rng(9);
  for (int i = 0; i < 5; ++i)
    poses.push_back(Pose::look_at(Vec3(rng.normal(), rng.normal(), rng.normal()),
                                  Vec3(rng.normal(0, 0.1), 0, 0), Vec3::UnitY()));
  const std::string path = "/tmp/semsurf_test_poses.txt";
  write_poses(path, poses);
  const auto loaded = read_poses(path);
  REQUIRE(loaded.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK((loaded[i].rotation - poses[i].rotation).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded[i].translation - poses[i].translation).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ray_aabb from inside a box") {
  Ray r;
  r.origin = Vec3(0.2, 0, 0);
  r.direction = Vec3::UnitX();
  const Aabb box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  const auto span = ray_aabb(r, box, 0.0);
  REQUIRE(span.has_value());
  CHECK(span->second == doctest::Approx(0.8));
}
