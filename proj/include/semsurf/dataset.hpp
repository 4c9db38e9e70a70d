#pragma once

#include <string>
#include <vector>

#include "semsurf/geom.hpp"
#include "semsurf/image.hpp"
#include "semsurf/rng.hpp"
#include "semsurf/scene.hpp"

namespace semsurf {

/// One posed view with its priors. Training consumes the noisy channels; the
/// clean ones are kept under gt/ for evaluation.
struct Frame {
  int id = 0;
  Pose pose;
  Image<Rgb8> rgb;
  Image<Normal3f> normal;           // unit where valid
  Image<std::uint8_t> normal_valid; // the Omega_n mask
  Image<std::uint8_t> label;        // 255 = unlabeled
  Image<std::uint8_t> segment;      // 0 = no segment
  Image<float> depth;               // ground-truth frames only
};

enum class SegmentSource { GtRegions, Grid };

struct NoiseSpec {
  double label_region_flip_rate = 0.2;   // fraction of segments flipped per view
  int label_boundary_jitter = 1;         // pixels
  double normal_angle_sigma = 10.0;      // degrees
  double normal_invalid_rate = 0.05;
  SegmentSource segment_source = SegmentSource::GtRegions;
  int segment_boundary_jitter = 1;       // pixels
  int min_segment_pixels = -1;           // <0: 4000 scaled by image area / 640x480

  void validate() const;
  int resolved_min_segment_pixels(int width, int height) const;
};

/// Connected components (4-neighborhood) of equal label values, skipping the
/// unlabeled sentinel. Component ids start at 1; 0 marks skipped pixels.
Image<std::uint16_t> connected_components(const Image<std::uint8_t>& labels,
                                          std::uint8_t skip = kUnlabeled);

/// Sphere-traced ground truth: Lambertian RGB under two fixed directional
/// lights, analytic normals, surface class labels, depth. Rays that fail to
/// converge inside 256 steps are background (unlabeled, invalid normal).
Frame render_gt_frame(const AnalyticScene& scene, const CameraIntrinsics& K, const Pose& pose);

/// Applies the prior noise model: per-region label flips (view-independent),
/// boundary jitter, normal perturbations with a validity mask, and segment
/// masks filtered by minimum pixel count.
Frame corrupt_frame(const Frame& gt, const NoiseSpec& spec, const std::vector<int>& confusable,
                    Rng& rng);

struct Dataset {
  std::string dir;
  std::string scene_name;
  int classes = 0;
  PlanarClassSet planar;
  Aabb bounds;
  CameraIntrinsics intrinsics;
  std::vector<Frame> frames;     // noisy priors (training inputs)
  std::vector<Frame> gt_frames;  // clean channels (evaluation targets)
  std::string gt_mesh_path;

  static Dataset load(const std::string& dir);
};

/// Renders n_views on a ring of cameras, corrupts priors per NoiseSpec, and
/// writes the dataset directory (poses.txt, intrinsics.txt, per-frame
/// channels, gt/ with clean channels and gt_mesh.ply).
void make_dataset(const AnalyticScene& scene, int n_views, int image_size, const NoiseSpec& spec,
                  std::uint64_t seed, const std::string& out_dir);

}  // namespace semsurf
