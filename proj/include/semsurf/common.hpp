#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace semsurf {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Bad caller-supplied values (out-of-range pixel, near >= far, label >= L, ...).
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Filesystem / format problems (missing files, corrupt headers, ...).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values where the pipeline requires finite ones.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// API misuse (backward before forward, evaluating an unbuilt graph, ...).
struct usage_error : std::logic_error {
  using std::logic_error::logic_error;
};

/// Axis-aligned scene bounds, meters.
struct Aabb {
  Vec3 lo{-1.0, -1.0, -1.0};
  Vec3 hi{1.0, 1.0, 1.0};

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double half_extent() const { return 0.5 * extent().maxCoeff(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

constexpr std::uint8_t kUnlabeled = 255;  // sentinel in label images
constexpr int kNoSegment = 0;             // sentinel in segment images

}  // namespace semsurf
