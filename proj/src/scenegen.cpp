#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semsurf/dataset.hpp"
#include "semsurf/mesher.hpp"
#include "semsurf/parallel.hpp"

namespace semsurf {

namespace fs = std::filesystem;

void NoiseSpec::validate() const {
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw input_error(std::string(name) + " must be in [0,1]");
  };
  rate(label_region_flip_rate, "label_region_flip_rate");
  rate(normal_invalid_rate, "normal_invalid_rate");
  if (normal_angle_sigma < 0) throw input_error("normal_angle_sigma must be >= 0");
  if (label_boundary_jitter < 0 || segment_boundary_jitter < 0)
    throw input_error("boundary jitter must be >= 0");
}

int NoiseSpec::resolved_min_segment_pixels(int width, int height) const {
  if (min_segment_pixels >= 0) return min_segment_pixels;
  return int(std::lround(4000.0 * double(width) * double(height) / (640.0 * 480.0)));
}

Image<std::uint16_t> connected_components(const Image<std::uint8_t>& labels, std::uint8_t skip) {
  Image<std::uint16_t> comp(labels.width, labels.height, 0);
  std::vector<std::pair<int, int>> stack;
  std::uint16_t next_id = 1;
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      if (labels.at(r, c) == skip || comp.at(r, c) != 0) continue;
      const std::uint8_t cls = labels.at(r, c);
      stack.push_back({r, c});
      comp.at(r, c) = next_id;
      while (!stack.empty()) {
        auto [pr, pc] = stack.back();
        stack.pop_back();
        const int nr[4] = {pr - 1, pr + 1, pr, pr};
        const int nc[4] = {pc, pc, pc - 1, pc + 1};
        for (int k = 0; k < 4; ++k) {
          if (!labels.in_bounds(nr[k], nc[k])) continue;
          if (comp.at(nr[k], nc[k]) != 0 || labels.at(nr[k], nc[k]) != cls) continue;
          comp.at(nr[k], nc[k]) = next_id;
          stack.push_back({nr[k], nc[k]});
        }
      }
      ++next_id;
    }
  }
  return comp;
}

namespace {

struct TraceHit {
  bool hit = false;
  double depth = 0.0;
  Vec3 point = Vec3::Zero();
};

TraceHit sphere_trace(const AnalyticScene& scene, const Ray& ray) {
  TraceHit out;
  double t = 1e-3;
  const double t_max = 3.0 * scene.bounds.extent().norm();
  for (int step = 0; step < 256; ++step) {
    const Vec3 x = ray.origin + t * ray.direction;
    const double d = scene.sdf(x);
    if (std::abs(d) < 1e-4) {
      out.hit = true;
      out.depth = t;
      out.point = x;
      return out;
    }
    t += d;
    if (t > t_max || t < 0.0) return out;
  }
  return out;
}

Vec3 shade(const Vec3& albedo, const Vec3& normal) {
  // Two fixed directional lights plus an ambient floor.
  static const Vec3 l1 = Vec3(0.4, 0.7, 0.2).normalized();
  static const Vec3 l2 = Vec3(-0.5, 0.6, -0.4).normalized();
  const double diffuse =
      0.35 + 0.5 * std::max(0.0, normal.dot(l1)) + 0.3 * std::max(0.0, normal.dot(l2));
  return (albedo * std::min(1.0, diffuse)).cwiseMin(1.0).cwiseMax(0.0);
}

Rgb8 to_rgb8(const Vec3& c) {
  Rgb8 out;
  for (int k = 0; k < 3; ++k)
    out[std::size_t(k)] = std::uint8_t(std::clamp(c[k], 0.0, 1.0) * 255.0 + 0.5);
  return out;
}

/// Rotates n by angle_rad around a random axis orthogonal to it.
Vec3 perturb_normal(const Vec3& n, double angle_rad, Rng& rng) {
  Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = n.cross(helper).normalized();
  const Vec3 v = n.cross(u);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const Vec3 axis = std::cos(phi) * u + std::sin(phi) * v;
  return (std::cos(angle_rad) * n + std::sin(angle_rad) * axis.cross(n)).normalized();
}

template <typename T>
Image<T> jitter_boundaries(const Image<T>& img, int jitter, Rng& rng) {
  if (jitter <= 0) return img;
  Image<T> out(img.width, img.height);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const int dr = int(rng.uniform_index(std::uint64_t(2 * jitter + 1))) - jitter;
      const int dc = int(rng.uniform_index(std::uint64_t(2 * jitter + 1))) - jitter;
      const int sr = std::clamp(r + dr, 0, img.height - 1);
      const int sc = std::clamp(c + dc, 0, img.width - 1);
      out.at(r, c) = img.at(sr, sc);
    }
  return out;
}

}  // namespace

Frame render_gt_frame(const AnalyticScene& scene, const CameraIntrinsics& K, const Pose& pose) {
  if (scene.sdf(pose.translation) <= 0.0)
    throw input_error("render_gt_frame: camera not in free space");
  Frame f;
  f.pose = pose;
  f.rgb = Image<Rgb8>(K.width, K.height, {0, 0, 0});
  f.normal = Image<Normal3f>(K.width, K.height, {0.f, 0.f, 0.f});
  f.normal_valid = Image<std::uint8_t>(K.width, K.height, 0);
  f.label = Image<std::uint8_t>(K.width, K.height, kUnlabeled);
  f.segment = Image<std::uint8_t>(K.width, K.height, 0);
  f.depth = Image<float>(K.width, K.height, 0.f);

  parallel_chunks(std::size_t(K.height), 8, [&](std::size_t rb, std::size_t re) {
    for (std::size_t r = rb; r < re; ++r) {
      for (int c = 0; c < K.width; ++c) {
        const Ray ray = pixel_to_ray(K, pose, int(r), c);
        const TraceHit hit = sphere_trace(scene, ray);
        if (!hit.hit) continue;  // background: stays unlabeled/invalid
        const SceneSample s = scene.sample(hit.point);
        const Vec3 n = scene.sdf_gradient(hit.point).normalized();
        f.rgb.at(int(r), c) = to_rgb8(shade(s.albedo, n));
        f.normal.at(int(r), c) = {float(n.x()), float(n.y()), float(n.z())};
        f.normal_valid.at(int(r), c) = 1;
        f.label.at(int(r), c) = std::uint8_t(s.cls);
        f.depth.at(int(r), c) = float(hit.depth);
      }
    }
  });
  return f;
}

Frame corrupt_frame(const Frame& gt, const NoiseSpec& spec, const std::vector<int>& confusable,
                    Rng& rng) {
  spec.validate();
  Frame out = gt;
  const int W = gt.label.width, H = gt.label.height;

  // Region-correlated label flips: whole GT regions swap to a confusable
  // class, independently per view.
  const Image<std::uint16_t> regions = connected_components(gt.label);
  std::uint16_t n_regions = 0;
  for (auto v : regions.data) n_regions = std::max(n_regions, v);
  std::vector<bool> flip(std::size_t(n_regions) + 1, false);
  for (std::uint16_t id = 1; id <= n_regions; ++id)
    flip[id] = rng.uniform() < spec.label_region_flip_rate;
  for (std::size_t i = 0; i < gt.label.pixels(); ++i) {
    const std::uint8_t cls = gt.label.data[i];
    if (cls == kUnlabeled || !flip[regions.data[i]]) continue;
    out.label.data[i] = std::uint8_t(confusable[cls]);
  }
  out.label = jitter_boundaries(out.label, spec.label_boundary_jitter, rng);

  // Normal perturbation with a validity mask: invalid where the injected
  // angle exceeds 30 degrees or by random dropout.
  const double sigma_rad = spec.normal_angle_sigma * M_PI / 180.0;
  for (std::size_t i = 0; i < gt.normal.pixels(); ++i) {
    if (!gt.normal_valid.data[i]) continue;
    const auto& nv = gt.normal.data[i];
    const Vec3 n(nv[0], nv[1], nv[2]);
    const double angle = std::abs(rng.normal(0.0, sigma_rad));
    const Vec3 noisy = angle > 0.0 ? perturb_normal(n, angle, rng) : n;
    out.normal.data[i] = {float(noisy.x()), float(noisy.y()), float(noisy.z())};
    bool valid = angle <= 30.0 * M_PI / 180.0;
    if (rng.uniform() < spec.normal_invalid_rate) valid = false;
    out.normal_valid.data[i] = valid ? 1 : 0;
  }

  // Segment masks from clean GT regions (class-agnostic) or a jittered grid.
  Image<std::uint8_t> seg(W, H, 0);
  if (spec.segment_source == SegmentSource::GtRegions) {
    for (std::size_t i = 0; i < seg.pixels(); ++i)
      seg.data[i] = std::uint8_t(std::min<int>(regions.data[i], 254));
  } else {
    const int cell = std::max(4, W / 8);
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c)
        seg.at(r, c) = std::uint8_t(1 + (r / cell) * ((W + cell - 1) / cell) + c / cell);
  }
  seg = jitter_boundaries(seg, spec.segment_boundary_jitter, rng);

  // Size filter, then compact ids.
  std::vector<int> count(256, 0);
  for (auto v : seg.data) ++count[v];
  const int min_px = spec.resolved_min_segment_pixels(W, H);
  std::vector<std::uint8_t> remap(256, 0);
  std::uint8_t next = 1;
  for (int id = 1; id < 256; ++id)
    if (count[id] >= min_px && count[id] > 0) remap[std::size_t(id)] = next++;
  for (auto& v : seg.data) v = remap[v];
  out.segment = std::move(seg);
  return out;
}

namespace {

std::string frame_suffix(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", id);
  return buf;
}

void write_frame_channels(const std::string& dir, const Frame& f, bool with_depth) {
  const std::string sfx = frame_suffix(f.id);
  write_ppm(dir + "/rgb_" + sfx + ".ppm", f.rgb);
  write_normal_map(dir + "/normal_" + sfx + ".bin", f.normal, f.normal_valid);
  write_pgm(dir + "/label_" + sfx + ".pgm", f.label);
  write_pgm(dir + "/segment_" + sfx + ".pgm", f.segment);
  if (with_depth) write_float_map(dir + "/depth_" + sfx + ".bin", f.depth);
}

void read_frame_channels(const std::string& dir, Frame& f, int w, int h, bool with_depth) {
  const std::string sfx = frame_suffix(f.id);
  f.rgb = read_ppm(dir + "/rgb_" + sfx + ".ppm");
  read_normal_map(dir + "/normal_" + sfx + ".bin", w, h, f.normal, f.normal_valid);
  f.label = read_pgm(dir + "/label_" + sfx + ".pgm");
  f.segment = read_pgm(dir + "/segment_" + sfx + ".pgm");
  if (with_depth) f.depth = read_float_map(dir + "/depth_" + sfx + ".bin", w, h);
}

}  // namespace

void make_dataset(const AnalyticScene& scene, int n_views, int image_size, const NoiseSpec& spec,
                  std::uint64_t seed, const std::string& out_dir) {
  if (n_views < 2) throw input_error("make_dataset: need n_views >= 2");
  spec.validate();
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/gt");

  CameraIntrinsics K;
  K.width = K.height = image_size;
  K.fx = K.fy = 0.65 * image_size;
  K.cx = image_size / 2.0;
  K.cy = image_size / 2.0;
  K.validate();

  // Cameras on a ring, aimed through the room center with alternating pitch
  // so floors and ceilings get covered too.
  const Vec3 center = scene.bounds.center();
  const double ring_radius = 0.62;
  std::vector<Pose> poses;
  for (int i = 0; i < n_views; ++i) {
    const double phi = 2.0 * M_PI * i / n_views;
    const double eye_h[3] = {-0.15, 0.10, -0.35};
    const double target_h[3] = {-0.55, 0.05, 0.60};
    const Vec3 eye = center + Vec3(ring_radius * std::cos(phi), eye_h[i % 3],
                                   ring_radius * std::sin(phi));
    const Vec3 target = center + Vec3(-0.3 * std::cos(phi), target_h[i % 3],
                                      -0.3 * std::sin(phi));
    poses.push_back(Pose::look_at(eye, target, Vec3::UnitY()));
  }

  Rng root(seed);
  std::vector<Frame> gt_frames(static_cast<std::size_t>(n_views));
  std::vector<Frame> noisy_frames(static_cast<std::size_t>(n_views));
  for (int i = 0; i < n_views; ++i) {
    Frame gt = render_gt_frame(scene, K, poses[std::size_t(i)]);
    gt.id = i;
    Rng frame_rng = root.fork(std::uint64_t(i));  // view-independent noise
    noisy_frames[std::size_t(i)] = corrupt_frame(gt, spec, scene.confusable, frame_rng);
    gt_frames[std::size_t(i)] = std::move(gt);
  }

  write_poses(out_dir + "/poses.txt", poses);
  write_intrinsics(out_dir + "/intrinsics.txt", K);
  for (int i = 0; i < n_views; ++i) {
    write_frame_channels(out_dir, noisy_frames[std::size_t(i)], false);
    write_frame_channels(out_dir + "/gt", gt_frames[std::size_t(i)], true);
  }

  {
    std::ofstream meta(out_dir + "/meta.txt");
    meta << "scene = " << scene.name << "\n";
    meta << "classes = " << scene.num_classes << "\n";
    meta << "planar =";
    for (int c : scene.planar.classes) meta << " " << c;
    meta << "\n";
    meta << "bounds = " << scene.bounds.lo.x() << " " << scene.bounds.lo.y() << " "
         << scene.bounds.lo.z() << " " << scene.bounds.hi.x() << " " << scene.bounds.hi.y() << " "
         << scene.bounds.hi.z() << "\n";
    meta << "views = " << n_views << "\n";
    meta << "seed = " << seed << "\n";
    if (!meta) throw io_error("write failed: " + out_dir + "/meta.txt");
  }

  // Reference surface from the analytic SDF, labeled by surface class.
  SdfSampler sampler = [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = scene.sdf(pts[i]);
  };
  LabelSampler labeler = [&](const std::vector<Vec3>& pts, std::vector<std::uint8_t>& cls,
                             std::vector<float>& prob) {
    cls.resize(pts.size());
    prob.assign(pts.size(), 1.f);
    for (std::size_t i = 0; i < pts.size(); ++i) cls[i] = std::uint8_t(scene.sample(pts[i]).cls);
  };
  LabeledMesh gt_mesh = extract_mesh(sampler, scene.bounds, 256, &labeler);
  write_ply(out_dir + "/gt/gt_mesh.ply", gt_mesh, true, &scene.class_albedo);
}

Dataset Dataset::load(const std::string& dir) {
  if (!fs::is_directory(dir)) throw io_error("dataset directory not found: " + dir);
  Dataset ds;
  ds.dir = dir;
  {
    std::ifstream meta(dir + "/meta.txt");
    if (!meta) throw io_error("missing meta.txt in " + dir);
    std::string line;
    while (std::getline(meta, line)) {
      std::istringstream ss(line);
      std::string key, eq;
      ss >> key >> eq;
      if (key == "scene")
        ss >> ds.scene_name;
      else if (key == "classes")
        ss >> ds.classes;
      else if (key == "planar") {
        int c;
        while (ss >> c) ds.planar.classes.push_back(c);
      } else if (key == "bounds") {
        ss >> ds.bounds.lo.x() >> ds.bounds.lo.y() >> ds.bounds.lo.z() >> ds.bounds.hi.x() >>
            ds.bounds.hi.y() >> ds.bounds.hi.z();
      }
    }
    if (ds.classes <= 0) throw io_error("meta.txt: missing class count");
    ds.planar.validate(ds.classes);
  }
  ds.intrinsics = read_intrinsics(dir + "/intrinsics.txt");
  std::vector<Pose> poses = read_poses(dir + "/poses.txt");
  const int W = ds.intrinsics.width, H = ds.intrinsics.height;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Frame f;
    f.id = int(i);
    f.pose = poses[i];
    read_frame_channels(dir, f, W, H, false);
    ds.frames.push_back(std::move(f));

    Frame g;
    g.id = int(i);
    g.pose = poses[i];
    read_frame_channels(dir + "/gt", g, W, H, true);
    ds.gt_frames.push_back(std::move(g));
  }
  ds.gt_mesh_path = dir + "/gt/gt_mesh.ply";
  if (!fs::exists(ds.gt_mesh_path)) throw io_error("missing gt mesh: " + ds.gt_mesh_path);
  return ds;
}

}  // namespace semsurf
