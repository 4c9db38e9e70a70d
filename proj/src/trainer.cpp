#include "semsurf/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "semsurf/parallel.hpp"

namespace semsurf {

void TrainConfig::validate() const {
  if (rays_per_batch <= 0) throw input_error("rays_per_batch must be > 0");
  if (!(learning_rate > 0)) throw input_error("learning_rate must be > 0");
  if (samples_per_ray < 2) throw input_error("samples_per_ray must be >= 2");
  if (iterations < 0) throw input_error("iterations must be >= 0");
  if (block_rays <= 0) throw input_error("block_rays must be > 0");
  if (!(sgr_warmup >= 0.0 && sgr_warmup <= 1.0)) throw input_error("sgr_warmup must be in [0,1]");
}

void apply_preset(TrainConfig& cfg, const std::string& preset) {
  if (preset == "model-a") {
    cfg.stop_gradient = false;
    cfg.lcf = false;
    cfg.sgr = false;
  } else if (preset == "model-b") {
    cfg.stop_gradient = true;
    cfg.lcf = false;
    cfg.sgr = false;
  } else if (preset == "model-c") {
    cfg.stop_gradient = true;
    cfg.lcf = true;
    cfg.sgr = false;
  } else if (preset == "model-d") {
    cfg.stop_gradient = true;
    cfg.lcf = false;
    cfg.sgr = true;
  } else if (preset == "ours") {
    cfg.stop_gradient = true;
    cfg.lcf = true;
    cfg.sgr = true;
  } else {
    throw input_error("unknown preset: " + preset);
  }
}

RayBatch build_batch(const Dataset& dataset, int rays_per_batch, Rng& rng) {
  if (dataset.frames.empty()) throw input_error("build_batch: empty dataset");
  RayBatch batch;
  batch.frame_id = int(rng.uniform_index(dataset.frames.size()));
  const Frame& frame = dataset.frames[std::size_t(batch.frame_id)];
  const CameraIntrinsics& K = dataset.intrinsics;

  batch.rays.reserve(std::size_t(rays_per_batch));
  for (int i = 0; i < rays_per_batch; ++i) {
    const int row = int(rng.uniform_index(std::uint64_t(K.height)));
    const int col = int(rng.uniform_index(std::uint64_t(K.width)));
    Ray ray = pixel_to_ray(K, frame.pose, row, col);
    ray.frame_id = frame.id;
    ray.segment_id = frame.segment.at(row, col);

    const Rgb8& rgb = frame.rgb.at(row, col);
    batch.colors.push_back(Vec3(rgb[0], rgb[1], rgb[2]) / 255.0);
    const Normal3f& n = frame.normal.at(row, col);
    batch.normal_prior.push_back(Vec3(n[0], n[1], n[2]));
    batch.omega.push_back(frame.normal_valid.at(row, col));
    const std::uint8_t lbl = frame.label.at(row, col);
    batch.labels.push_back(lbl == kUnlabeled ? -1 : int(lbl));
    batch.segment_ids.push_back(ray.segment_id);
    if (ray.segment_id != kNoSegment) batch.groups[ray.segment_id].push_back(i);
    batch.rays.push_back(ray);
  }
  return batch;
}

Trainer::Trainer(const Dataset& dataset, const TrainConfig& cfg)
    : dataset_(&dataset), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  cfg_.field.classes = dataset.classes;
  cfg_.field.bbox = dataset.bounds;
  cfg_.field.seed = cfg_.seed;
  bundle_ = FieldBundle<float>(cfg_.field);
  adam_m_ = bundle_.store.make_sink();
  adam_v_ = bundle_.store.make_sink();
}

BlockData<float> Trainer::assemble_block(const RayBatch& batch, int r0, int r1,
                                         const std::vector<Vec3>& uniform_pts) {
  const int R = r1 - r0;
  const int Sn = cfg_.samples_per_ray;
  const int U = int(uniform_pts.size());
  const Eigen::Index RS = Eigen::Index(R) * Sn;
  const double h = bundle_.cfg.fd_step;

  BlockData<float> d;
  d.rays = R;
  d.samples = Sn;
  d.uniform = U;
  d.sdf_positions.resize(d.rows_needed(), 3);
  d.sample_positions.resize(RS, 3);
  d.sample_dirs.resize(RS, 3);
  d.ray_colors.resize(R, 3);
  d.ray_normals.resize(R, 3);
  d.normal_mask.resize(R, 1);
  d.labels.resize(static_cast<std::size_t>(R));

  auto put = [&](Eigen::Index row, const Vec3& p) {
    d.sdf_positions(row, 0) = float(p.x());
    d.sdf_positions(row, 1) = float(p.y());
    d.sdf_positions(row, 2) = float(p.z());
  };

  const Eigen::Index shift_base = RS + R;
  const Eigen::Index uni_base = 7 * RS + R;
  for (int r = 0; r < R; ++r) {
    const int bi = r0 + r;
    const Ray& ray = batch.rays[std::size_t(bi)];
    auto span = ray_aabb(ray, cfg_.field.bbox, cfg_.near);
    const double far = span ? span->second : cfg_.near + 1.0;
    RaySamples samples = sample_ray(cfg_.near, far, Sn, cfg_.jitter, rng_);

    for (int i = 0; i < Sn; ++i) {
      const Eigen::Index row = Eigen::Index(r) * Sn + i;
      const Vec3 x = ray.origin + samples.depth[std::size_t(i)] * ray.direction;
      put(row, x);
      for (int c = 0; c < 3; ++c) {
        d.sample_positions(row, c) = float(x[c]);
        d.sample_dirs(row, c) = float(ray.direction[c]);
      }
      for (int k = 0; k < 3; ++k) {
        Vec3 hi = x, lo = x;
        hi[k] += h;
        lo[k] -= h;
        put(shift_base + (2 * k) * RS + row, hi);
        put(shift_base + (2 * k + 1) * RS + row, lo);
      }
    }
    const double t_virt = samples.depth.back() + samples.spacing.back();
    put(RS + r, ray.origin + t_virt * ray.direction);

    for (int c = 0; c < 3; ++c) {
      d.ray_colors(r, c) = float(batch.colors[std::size_t(bi)][c]);
      d.ray_normals(r, c) = float(batch.normal_prior[std::size_t(bi)][c]);
    }
    d.normal_mask(r, 0) = batch.omega[std::size_t(bi)] ? 1.f : 0.f;
    d.labels[std::size_t(r)] = batch.labels[std::size_t(bi)];
  }

  for (int u = 0; u < U; ++u) {
    const Vec3& x = uniform_pts[std::size_t(u)];
    put(uni_base + u, x);
    for (int k = 0; k < 3; ++k) {
      Vec3 hi = x, lo = x;
      hi[k] += h;
      lo[k] -= h;
      put(uni_base + U + (2 * k) * U + u, hi);
      put(uni_base + U + (2 * k + 1) * U + u, lo);
    }
  }
  return d;
}

LossRecord Trainer::train_step() {
  RayBatch batch = build_batch(*dataset_, cfg_.rays_per_batch, rng_);

  // Fixed partition into blocks; all randomness is drawn on this thread in a
  // fixed order so worker count never changes the trajectory.
  std::vector<std::pair<int, int>> spans;
  for (int r0 = 0; r0 < cfg_.rays_per_batch; r0 += cfg_.block_rays)
    spans.push_back({r0, std::min(cfg_.rays_per_batch, r0 + cfg_.block_rays)});
  const int n_blocks = int(spans.size());

  std::vector<std::vector<Vec3>> uniform_pts(static_cast<std::size_t>(n_blocks));
  for (int b = 0; b < n_blocks; ++b) {
    const int share = cfg_.eikonal_points / n_blocks +
                      (b < cfg_.eikonal_points % n_blocks ? 1 : 0);
    for (int u = 0; u < share; ++u) {
      Vec3 x;
      for (int k = 0; k < 3; ++k)
        x[k] = rng_.uniform(cfg_.field.bbox.lo[k], cfg_.field.bbox.hi[k]);
      uniform_pts[std::size_t(b)].push_back(x);
    }
  }

  std::vector<BlockData<float>> data(static_cast<std::size_t>(n_blocks));
  for (int b = 0; b < n_blocks; ++b)
    data[std::size_t(b)] =
        assemble_block(batch, spans[std::size_t(b)].first, spans[std::size_t(b)].second,
                       uniform_pts[std::size_t(b)]);

  BlockSettings settings;
  settings.stop_gradient = cfg_.stop_gradient;
  settings.sgr = cfg_.sgr;
  settings.sgr_active = iteration_ >= int(cfg_.sgr_warmup * cfg_.iterations);
  settings.sgr_per_point = cfg_.sgr_per_point;
  settings.weights = cfg_.weights;
  settings.planar = dataset_->planar;

  // Phase 1: forward every block (parallel), rendering class predictions.
  std::vector<std::unique_ptr<BlockGraph<float>>> blocks(static_cast<std::size_t>(n_blocks));
  parallel_for(std::size_t(n_blocks), [&](std::size_t b) {
    blocks[b] = std::make_unique<BlockGraph<float>>(bundle_, std::move(data[b]), settings);
  });

  // Vote one class per segment group over the whole batch.
  std::vector<int> voted(std::size_t(cfg_.rays_per_batch), -1);
  if (cfg_.lcf) {
    std::vector<int> predicted(std::size_t(cfg_.rays_per_batch), -1);
    if (cfg_.vote_source == VoteSource::Rendered) {
      for (int b = 0; b < n_blocks; ++b) {
        const auto cls = blocks[std::size_t(b)]->predicted_classes();
        for (std::size_t i = 0; i < cls.size(); ++i)
          predicted[std::size_t(spans[std::size_t(b)].first) + i] = cls[i];
      }
    } else {
      predicted = batch.labels;
    }
    for (const auto& [segment, rays] : batch.groups) {
      if (int(rays.size()) < cfg_.min_group_size) continue;
      std::vector<int> classes;
      for (int r : rays)
        if (predicted[std::size_t(r)] >= 0) classes.push_back(predicted[std::size_t(r)]);
      if (classes.empty()) continue;
      const int k = vote_group_class(classes);
      for (int r : rays) voted[std::size_t(r)] = k;
    }
  }

  // Phase 2: attach consistency + regularizer, backward into per-block sinks.
  std::vector<std::vector<MatX<float>>> sinks(static_cast<std::size_t>(n_blocks));
  parallel_for(std::size_t(n_blocks), [&](std::size_t b) {
    const auto span = spans[b];
    std::vector<int> block_voted(voted.begin() + span.first, voted.begin() + span.second);
    blocks[b]->finish(block_voted);
    sinks[b] = bundle_.store.make_sink();
    blocks[b]->backward(sinks[b]);
  });

  LossRecord record;
  record.iteration = iteration_;
  for (int b = 0; b < n_blocks; ++b) {
    const LossTerms t = blocks[std::size_t(b)]->terms();
    record.terms.photometric += t.photometric;
    record.terms.normal += t.normal;
    record.terms.semantic += t.semantic;
    record.terms.consistency += t.consistency;
    record.terms.regularizer += t.regularizer;
  }
  record.total = total_loss(record.terms, cfg_.weights);  // raises on non-finite

  bundle_.store.zero_grads();
  for (int b = 0; b < n_blocks; ++b) bundle_.store.add_sink(sinks[std::size_t(b)]);

  adam_update();
  ++iteration_;
  return record;
}

void Trainer::adam_update() {
  const float lr = float(cfg_.learning_rate);
  const float b1 = float(cfg_.beta1), b2 = float(cfg_.beta2), eps = float(cfg_.adam_eps);
  const float t = float(iteration_ + 1);
  const float c1 = 1.f - std::pow(b1, t), c2 = 1.f - std::pow(b2, t);
  for (std::size_t i = 0; i < bundle_.store.values.size(); ++i) {
    const auto g = bundle_.store.grads[i].array();
    auto m = adam_m_[i].array();
    auto v = adam_v_[i].array();
    m = b1 * m + (1.f - b1) * g;
    v = b2 * v + (1.f - b2) * g.square();
    bundle_.store.values[i].array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
  for (const auto& p : bundle_.store.values)
    if (!p.allFinite()) throw numeric_error("parameters became non-finite after update");
}

std::vector<LossRecord> Trainer::fit() {
  namespace fs = std::filesystem;
  std::ofstream log;
  if (!cfg_.out_dir.empty()) {
    fs::create_directories(cfg_.out_dir);
    log.open(cfg_.out_dir + "/losses.csv", iteration_ == 0 ? std::ios::out : std::ios::app);
    if (iteration_ == 0)
      log << "iteration,photometric,normal,semantic,consistency,regularizer,total\n";
  }
  std::vector<LossRecord> history;
  history.reserve(std::size_t(std::max(0, cfg_.iterations - iteration_)));
  try {
    while (iteration_ < cfg_.iterations) {
      LossRecord r = train_step();
      history.push_back(r);
      if (log.is_open()) {
        log << r.iteration << ',' << r.terms.photometric << ',' << r.terms.normal << ','
            << r.terms.semantic << ',' << r.terms.consistency << ',' << r.terms.regularizer << ','
            << r.total << '\n';
      }
      if (!cfg_.out_dir.empty() && cfg_.checkpoint_every > 0 &&
          iteration_ % cfg_.checkpoint_every == 0 && iteration_ < cfg_.iterations) {
        char name[64];
        std::snprintf(name, sizeof(name), "/ckpt_%06d.bin", iteration_);
        save_checkpoint(cfg_.out_dir + name);
      }
    }
  } catch (const numeric_error& e) {
    if (!cfg_.out_dir.empty()) {
      std::ofstream dump(cfg_.out_dir + "/fault_dump.txt");
      dump << "iteration " << iteration_ << "\n" << e.what() << "\n";
      if (!history.empty()) {
        const LossRecord& r = history.back();
        dump << "last terms: photometric=" << r.terms.photometric
             << " normal=" << r.terms.normal << " semantic=" << r.terms.semantic
             << " consistency=" << r.terms.consistency
             << " regularizer=" << r.terms.regularizer << "\n";
      }
    }
    throw;
  }
  if (!cfg_.out_dir.empty()) save_checkpoint(cfg_.out_dir + "/checkpoint.bin");
  return history;
}

void Trainer::save_checkpoint(const std::string& path) const {
  BlobWriter w(path, kMagic);
  bundle_.save_params(w);
  w.u64(std::uint64_t(iteration_));
  w.u64(rng_.state());
  w.u32(std::uint32_t(adam_m_.size()));
  for (const auto& t : adam_m_) w.tensor(t);
  for (const auto& t : adam_v_) w.tensor(t);
  w.close();
}

void Trainer::load_checkpoint(const std::string& path) {
  BlobReader r(path, kMagic);
  bundle_ = FieldBundle<float>::load_params(r);
  iteration_ = int(r.u64());
  rng_.set_state(r.u64());
  const std::uint32_t n = r.u32();
  if (n != bundle_.store.values.size()) throw io_error("checkpoint: optimizer state mismatch");
  adam_m_.clear();
  adam_v_.clear();
  for (std::uint32_t i = 0; i < n; ++i) adam_m_.push_back(r.tensor<float>());
  for (std::uint32_t i = 0; i < n; ++i) adam_v_.push_back(r.tensor<float>());
}

}  // namespace semsurf
