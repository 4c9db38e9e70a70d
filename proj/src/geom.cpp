#include "semsurf/geom.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace semsurf {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw input_error("intrinsics: focal lengths must be positive");
  if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
    throw input_error("intrinsics: principal point outside image");
}

void Pose::validate() const {
  Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw input_error("pose: rotation is not orthonormal");
  if (rotation.determinant() < 0) throw input_error("pose: rotation is a reflection");
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = rotation;
  m.block<3, 1>(0, 3) = translation;
  return m;
}

Pose Pose::from_matrix(const Mat4& m) {
  Pose p;
  p.rotation = m.block<3, 3>(0, 0);
  p.translation = m.block<3, 1>(0, 3);
  p.validate();
  return p;
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up).normalized();
  Vec3 down = fwd.cross(right);  // +y in camera space points down the image
  Pose p;
  p.rotation.col(0) = right;
  p.rotation.col(1) = down;
  p.rotation.col(2) = fwd;
  p.translation = eye;
  return p;
}

Ray pixel_to_ray(const CameraIntrinsics& K, const Pose& pose, int row, int col) {
  if (row < 0 || row >= K.height || col < 0 || col >= K.width)
    throw input_error("pixel_to_ray: pixel (" + std::to_string(row) + "," + std::to_string(col) +
                      ") outside " + std::to_string(K.width) + "x" + std::to_string(K.height));
  Vec3 cam((col - K.cx) / K.fx, (row - K.cy) / K.fy, 1.0);
  Ray r;
  r.origin = pose.translation;
  r.direction = (pose.rotation * cam).normalized();
  r.row = row;
  r.col = col;
  return r;
}

std::pair<double, double> project_point(const CameraIntrinsics& K, const Pose& pose,
                                        const Vec3& point) {
  Vec3 cam = pose.rotation.transpose() * (point - pose.translation);
  if (cam.z() <= 0) throw input_error("project_point: point not in front of camera");
  return {K.fy * cam.y() / cam.z() + K.cy, K.fx * cam.x() / cam.z() + K.cx};
}

RaySamples sample_ray(double near, double far, int n, bool jitter, Rng& rng) {
  if (!(near >= 0) || !(near < far)) throw input_error("sample_ray: need 0 <= near < far");
  if (n < 2) throw input_error("sample_ray: need n >= 2");
  RaySamples s;
  s.depth.resize(std::size_t(n));
  s.spacing.resize(std::size_t(n));
  const double bin = (far - near) / n;
  for (int i = 0; i < n; ++i) {
    double u = jitter ? rng.uniform() : 0.5;
    s.depth[std::size_t(i)] = near + (i + u) * bin;
  }
  for (int i = 0; i + 1 < n; ++i)
    s.spacing[std::size_t(i)] = s.depth[std::size_t(i) + 1] - s.depth[std::size_t(i)];
  s.spacing[std::size_t(n) - 1] = s.spacing[std::size_t(n) - 2];
  return s;
}

std::optional<std::pair<double, double>> ray_aabb(const Ray& ray, const Aabb& box, double t_min) {
  double t0 = t_min, t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    double o = ray.origin[k], d = ray.direction[k];
    if (std::abs(d) < 1e-12) {
      if (o < box.lo[k] || o > box.hi[k]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[k] - o) / d;
    double tb = (box.hi[k] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

void write_poses(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);
  char buf[32];
  for (const auto& p : poses) {
    Mat4 m = p.matrix();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
        out << buf << (r == 3 && c == 3 ? '\n' : ' ');
      }
  }
  if (!out) throw io_error("write failed: " + path);
}

std::vector<Pose> read_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<Pose> poses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        if (!(ss >> m(r, c))) throw io_error("malformed pose line in " + path);
    poses.push_back(Pose::from_matrix(m));
  }
  return poses;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& K) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %d %d\n", K.fx, K.fy, K.cx, K.cy,
                K.width, K.height);
  out << buf;
  if (!out) throw io_error("write failed: " + path);
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  CameraIntrinsics K;
  if (!(in >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height))
    throw io_error("malformed intrinsics in " + path);
  K.validate();
  return K;
}

}  // namespace semsurf
