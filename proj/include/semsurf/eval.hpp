#pragma once

#include <string>
#include <vector>

#include "semsurf/dataset.hpp"
#include "semsurf/fields.hpp"
#include "semsurf/mesher.hpp"

namespace semsurf {

struct SemanticMetrics {
  double acc = 0.0;
  double macc = 0.0;
  double miou = 0.0;
  std::vector<double> per_class_iou;  // NaN for classes without GT support
};

/// Confusion-matrix metrics. Pixels whose GT equals the sentinel are
/// excluded; mAcc and mIoU average over classes with GT support only.
SemanticMetrics semantic_metrics(const std::vector<std::uint8_t>& pred,
                                 const std::vector<std::uint8_t>& gt, int num_classes,
                                 std::uint8_t sentinel = kUnlabeled);

struct GeometryMetrics {
  double accuracy = 0.0;      // mean pred->gt distance (m)
  double completeness = 0.0;  // mean gt->pred distance (m)
  double precision = 0.0;     // fraction of pred samples within threshold
  double recall = 0.0;
  double fscore = 0.0;
  double chamfer = 0.0;       // mean of squared distances, averaged over both directions
};

struct MeshSamples {
  std::vector<Vec3> points;
  std::vector<std::uint8_t> labels;
};

/// Area-weighted surface sampling; deterministic for a given rng state.
MeshSamples sample_mesh_points(const LabeledMesh& mesh, int n, Rng& rng);

GeometryMetrics geometry_metrics(const LabeledMesh& pred, const LabeledMesh& gt, int n_samples,
                                 double threshold, std::uint64_t seed);

/// Chamfer distance restricted to the GT region of one class: gt samples of
/// that class vs pred samples nearest to that region.
double region_chamfer(const LabeledMesh& pred, const LabeledMesh& gt, std::uint8_t cls,
                      int n_samples, std::uint64_t seed);

struct RenderOptions {
  int samples_per_ray = 32;
  double near = 0.02;
  bool want_rgb = false;
  bool want_normal = false;
  double background_opacity = 0.1;  // below this the pixel stays unlabeled
};

struct RenderedView {
  Image<std::uint8_t> label;
  Image<Rgb8> rgb;
  Image<Normal3f> normal;
};

/// Volume-renders a full view from the trained fields (no gradients).
RenderedView render_view(const FieldBundle<float>& bundle, const CameraIntrinsics& K,
                         const Pose& pose, const RenderOptions& opts);

struct EvalConfig {
  int mesh_resolution = 128;
  int n_samples = 10000;
  double threshold = 0.05;
  int samples_per_ray = 32;
  double near = 0.02;
  std::uint64_t seed = 7;
};

struct MetricsReport {
  SemanticMetrics semantic2d;
  SemanticMetrics semantic3d;
  GeometryMetrics geometry;
};

/// Full protocol: 2D metrics from rendered labels at training views, 3D
/// metrics via label transfer onto the GT mesh, geometry metrics between the
/// extracted and GT meshes.
MetricsReport evaluate_run(const FieldBundle<float>& bundle, const Dataset& dataset,
                           const EvalConfig& cfg, LabeledMesh* out_mesh = nullptr);

/// Batched field adapters for extract_mesh.
SdfSampler make_sdf_sampler(const FieldBundle<float>& bundle);
LabelSampler make_label_sampler(const FieldBundle<float>& bundle);

void write_report(const std::string& txt_path, const std::string& csv_path,
                  const MetricsReport& report);
MetricsReport read_report(const std::string& txt_path);

}  // namespace semsurf
