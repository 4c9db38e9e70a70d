#pragma once

#include <optional>
#include <string>
#include <vector>

#include "semsurf/common.hpp"
#include "semsurf/rng.hpp"

namespace semsurf {

struct CameraIntrinsics {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;

  void validate() const;
};

/// Camera-to-world transform. +z is the viewing direction, pixel rows grow
/// along +y in camera space.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const;  // orthonormality within 1e-6, det = +1
  Mat4 matrix() const;
  static Pose from_matrix(const Mat4& m);
  /// Camera at `eye` looking at `target` with `up` fixing the roll.
  static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length
  int row = 0, col = 0;
  int frame_id = -1;
  int segment_id = kNoSegment;
};

/// Ray through the center of pixel (row, col). Throws input_error when the
/// pixel is outside the image.
Ray pixel_to_ray(const CameraIntrinsics& K, const Pose& pose, int row, int col);

/// Inverse of pixel_to_ray for points in front of the camera: (row, col) in
/// continuous pixel coordinates. Throws input_error for points at or behind
/// the camera plane.
std::pair<double, double> project_point(const CameraIntrinsics& K, const Pose& pose,
                                        const Vec3& point);

struct RaySamples {
  std::vector<double> depth;    // strictly increasing, within [near, far]
  std::vector<double> spacing;  // spacing[i] = depth[i+1]-depth[i]; last repeats
};

/// Stratified sampling of [near, far] into n bins; midpoints when jitter is
/// off, one uniform draw per bin otherwise. The terminal spacing repeats the
/// previous one so every sample has a spacing.
RaySamples sample_ray(double near, double far, int n, bool jitter, Rng& rng);

/// Intersection interval of a ray with an AABB, clipped to t >= t_min.
/// Empty when the ray misses the box.
std::optional<std::pair<double, double>> ray_aabb(const Ray& ray, const Aabb& box,
                                                  double t_min = 0.0);

// Plain-text pose storage: one 4x4 row-major matrix per line (16 numbers).
void write_poses(const std::string& path, const std::vector<Pose>& poses);
std::vector<Pose> read_poses(const std::string& path);
void write_intrinsics(const std::string& path, const CameraIntrinsics& K);
CameraIntrinsics read_intrinsics(const std::string& path);

}  // namespace semsurf
