#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semsurf/batchgraph.hpp"
#include "semsurf/dataset.hpp"
#include "semsurf/fields.hpp"

namespace semsurf {

enum class VoteSource { Rendered, InputLabels };

struct TrainConfig {
  int rays_per_batch = 512;
  int samples_per_ray = 32;
  int iterations = 5000;
  double learning_rate = 2e-4;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t seed = 1;
  bool jitter = true;

  // ablation flags (Stop / LCF / SGR)
  bool stop_gradient = true;
  bool lcf = true;
  bool sgr = true;

  LossWeights weights;
  int min_group_size = 8;
  int eikonal_points = 1024;  // uniform free-space points per iteration
  double sgr_warmup = 0.1;    // fraction of iterations before SGR activates
  bool sgr_per_point = true;
  VoteSource vote_source = VoteSource::Rendered;

  int checkpoint_every = 0;  // 0: only the final checkpoint
  std::string out_dir;       // empty: no checkpoints / logs
  int block_rays = 128;      // fixed partition; reductions merge in block order
  double near = 0.02;

  FieldConfig field;  // classes/bbox are filled in from the dataset

  void validate() const;
};

/// Sets the Stop/LCF/SGR flags for presets model-a..model-d and ours.
void apply_preset(TrainConfig& cfg, const std::string& preset);

struct RayBatch {
  int frame_id = -1;
  std::vector<Ray> rays;
  std::vector<Vec3> colors;
  std::vector<Vec3> normal_prior;
  std::vector<std::uint8_t> omega;
  std::vector<int> labels;       // -1 = unlabeled
  std::vector<int> segment_ids;  // 0 = none
  std::map<int, std::vector<int>> groups;  // segment id -> ray indices
};

/// All rays of a batch come from one frame so the segment grouping is
/// well-defined; pixels are drawn uniformly.
RayBatch build_batch(const Dataset& dataset, int rays_per_batch, Rng& rng);

struct LossRecord {
  int iteration = 0;
  LossTerms terms;
  double total = 0.0;
};

class Trainer {
 public:
  Trainer(const Dataset& dataset, const TrainConfig& cfg);

  LossRecord train_step();
  /// Runs the remaining iterations, logging losses.csv and checkpoints
  /// according to the config.
  std::vector<LossRecord> fit();

  const FieldBundle<float>& bundle() const { return bundle_; }
  FieldBundle<float>& bundle() { return bundle_; }
  int iteration() const { return iteration_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  static constexpr char kMagic[8] = {'S', 'S', 'C', 'K', 'P', 'T', '0', '1'};

 private:
  BlockData<float> assemble_block(const RayBatch& batch, int r0, int r1,
                                  const std::vector<Vec3>& uniform_pts);
  void adam_update();

  const Dataset* dataset_;
  TrainConfig cfg_;
  FieldBundle<float> bundle_;
  std::vector<MatX<float>> adam_m_, adam_v_;
  int iteration_ = 0;
  Rng rng_;
};

}  // namespace semsurf
