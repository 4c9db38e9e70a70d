#include "semsurf/scene.hpp"

#include <cmath>

namespace semsurf {

namespace {

double sdf_sphere(const Vec3& p, double radius) { return p.norm() - radius; }

double sdf_box(const Vec3& p, const Vec3& half) {
  Vec3 q = p.cwiseAbs() - half;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

// Solid is everything outside the air box, so the shell SDF is the negated
// box SDF of the air volume.
double sdf_room_shell(const Vec3& p, const Vec3& half) { return -sdf_box(p, half); }

// floor = -y face, ceiling = +y face, walls = the rest
int shell_face_class(const Vec3& p, const Vec3& half) {
  double best = std::abs(p.y() + half.y());
  int cls = 0;  // floor
  double d_ceil = std::abs(half.y() - p.y());
  if (d_ceil < best) {
    best = d_ceil;
    cls = 1;
  }
  const double wall_faces[4] = {std::abs(p.x() + half.x()), std::abs(half.x() - p.x()),
                                std::abs(p.z() + half.z()), std::abs(half.z() - p.z())};
  for (double d : wall_faces)
    if (d < best) {
      best = d;
      cls = 2;
    }
  return cls;
}

}  // namespace

SceneSample AnalyticScene::sample(const Vec3& x) const {
  SceneSample out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& prim : primitives) {
    Vec3 p = x - prim.center;
    double d;
    int cls = prim.cls;
    switch (prim.kind) {
      case PrimitiveKind::RoomShell:
        d = sdf_room_shell(p, prim.half);
        cls = shell_face_class(p, prim.half);
        break;
      case PrimitiveKind::Sphere:
        d = sdf_sphere(p, prim.half.x());
        break;
      case PrimitiveKind::Box:
        d = sdf_box(p, prim.half);
        break;
      case PrimitiveKind::RoundedBox:
        d = sdf_box(p, prim.half - Vec3::Constant(prim.rounding)) - prim.rounding;
        break;
    }
    if (d < best) {
      best = d;
      out.cls = cls;
    }
  }
  out.d = best;
  out.albedo = class_albedo[std::size_t(out.cls)];
  return out;
}

Vec3 AnalyticScene::sdf_gradient(const Vec3& x) const {
  const double h = 1e-5;
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 hi = x, lo = x;
    hi[k] += h;
    lo[k] -= h;
    g[k] = (sdf(hi) - sdf(lo)) / (2.0 * h);
  }
  return g;
}

AnalyticScene make_room1() {
  AnalyticScene s;
  s.name = "room-1";
  s.num_classes = 6;
  s.planar.classes = {0, 1, 2};
  s.confusable = {2, 2, 1, 4, 3, 5};  // floor->wall, ceiling->wall, wall->ceiling, ball<->table
  s.class_albedo = {
      Vec3(0.55, 0.40, 0.25),  // floor
      Vec3(0.90, 0.90, 0.85),  // ceiling
      Vec3(0.70, 0.75, 0.80),  // wall
      Vec3(0.85, 0.15, 0.10),  // ball
      Vec3(0.10, 0.35, 0.70),  // table
      Vec3(0.50, 0.50, 0.50),  // unused
  };
  s.bounds = {Vec3(-1.1, -1.1, -1.1), Vec3(1.1, 1.1, 1.1)};

  Primitive shell;
  shell.kind = PrimitiveKind::RoomShell;
  shell.half = Vec3(1.0, 1.0, 1.0);
  s.primitives.push_back(shell);

  Primitive ball;
  ball.kind = PrimitiveKind::Sphere;
  ball.center = Vec3(0.45, -0.70, 0.30);
  ball.half = Vec3(0.30, 0.30, 0.30);
  ball.cls = 3;
  s.primitives.push_back(ball);

  Primitive table;
  table.kind = PrimitiveKind::Box;
  table.center = Vec3(-0.45, -0.65, -0.35);
  table.half = Vec3(0.35, 0.35, 0.30);
  table.cls = 4;
  s.primitives.push_back(table);

  return s;
}

AnalyticScene make_scene(const std::string& name) {
  if (name == "room-1") return make_room1();
  throw input_error("unknown scene: " + name);
}

}  // namespace semsurf
