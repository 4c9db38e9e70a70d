#pragma once

#include <string>
#include <vector>

#include "semsurf/common.hpp"
#include "semsurf/losses.hpp"

namespace semsurf {

enum class PrimitiveKind { RoomShell, Sphere, Box, RoundedBox };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Ones();  // half extents; x holds the radius for spheres
  double rounding = 0.0;
  int cls = 0;  // RoomShell resolves floor/ceiling/wall per face instead
};

struct SceneSample {
  double d = 0.0;
  int cls = 0;
  Vec3 albedo = Vec3::Zero();
};

/// Analytic ground truth: composite SDF over primitives with per-surface
/// semantic classes and albedos. Free space is positive, solid negative.
struct AnalyticScene {
  std::string name;
  std::vector<Primitive> primitives;  // room shell first by convention
  int num_classes = 6;
  PlanarClassSet planar;
  std::vector<int> confusable;     // per-class flip target for label noise
  std::vector<Vec3> class_albedo;  // palette, also used to colorize meshes
  Aabb bounds;                     // field/meshing bounds, slightly past the walls

  /// Distance, class and albedo of the nearest primitive (list order breaks
  /// ties).
  SceneSample sample(const Vec3& x) const;
  double sdf(const Vec3& x) const { return sample(x).d; }
  /// Central differences on the analytic SDF, h = 1e-5.
  Vec3 sdf_gradient(const Vec3& x) const;
};

/// 2x2x2 m room with a ball and a table. Classes:
/// 0 floor, 1 ceiling, 2 wall, 3 ball, 4 table, 5 unused.
AnalyticScene make_room1();

AnalyticScene make_scene(const std::string& name);

}  // namespace semsurf
