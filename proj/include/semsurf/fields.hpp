#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "semsurf/blob.hpp"
#include "semsurf/common.hpp"
#include "semsurf/mlp.hpp"

namespace semsurf {

/// Sin/cos frequency encoding of coordinates:
/// [x, sin(2^0 x), cos(2^0 x), ..., sin(2^{F-1} x), cos(2^{F-1} x)].
struct PositionalEncoding {
  int num_frequencies = 6;
  bool include_input = true;

  int out_dim(int in_dim) const {
    return include_input ? in_dim * (1 + 2 * num_frequencies) : in_dim * 2 * num_frequencies;
  }

  template <typename S>
  MatX<S> apply(const MatX<S>& x) const {
    MatX<S> out(x.rows(), out_dim(int(x.cols())));
    Eigen::Index c = 0;
    if (include_input) {
      out.middleCols(0, x.cols()) = x;
      c = x.cols();
    }
    S freq = S(1);
    for (int k = 0; k < num_frequencies; ++k) {
      out.middleCols(c, x.cols()) = (x.array() * freq).sin();
      c += x.cols();
      out.middleCols(c, x.cols()) = (x.array() * freq).cos();
      c += x.cols();
      freq *= S(2);
    }
    return out;
  }
};

struct FieldConfig {
  int classes = 6;  // L
  int sdf_width = 32, sdf_hidden = 4, feature_dim = 8;
  int color_width = 32, color_hidden = 2;
  int semantic_width = 32, semantic_hidden = 2;
  int x_frequencies = 6, v_frequencies = 4;
  double fd_step = 1e-3;         // central-difference step for spatial gradients
  double sdf_beta = 10.0;        // softplus sharpness in the SDF net
  double init_inv_std = 10.0;    // initial opacity sharpness s
  double init_radius_scale = 0.8;
  Aabb bbox;
  std::uint64_t seed = 1;
};

/// The three trainable fields plus the opacity sharpness, backed by one
/// ParamStore. Forward evaluation is read-only and safe to run concurrently;
/// gradient accumulation and updates need exclusive access.
template <typename S>
struct FieldBundle {
  FieldConfig cfg;
  ParamStore<S> store;
  Mlp<S> sdf_net, color_net, semantic_net;
  int log_inv_std = -1;  // reparameterized: inv_std = exp(param) > 0 always
  PositionalEncoding x_enc, v_enc;

  FieldBundle() = default;

  explicit FieldBundle(const FieldConfig& c) : cfg(c) {
    x_enc = {cfg.x_frequencies, true};
    v_enc = {cfg.v_frequencies, true};
    Rng rng(cfg.seed);
    const double radius = cfg.init_radius_scale * cfg.bbox.half_extent();
    sdf_net.init_geometric(store, x_enc.out_dim(3), 1 + cfg.feature_dim,
                           std::vector<int>(std::size_t(cfg.sdf_hidden), cfg.sdf_width), radius,
                           3, rng, S(cfg.sdf_beta));
    color_net.init_random(store, x_enc.out_dim(3) + v_enc.out_dim(3) + cfg.feature_dim + 3, 3,
                          std::vector<int>(std::size_t(cfg.color_hidden), cfg.color_width), rng);
    semantic_net.init_random(
        store, cfg.feature_dim, cfg.classes,
        std::vector<int>(std::size_t(cfg.semantic_hidden), cfg.semantic_width), rng);
    MatX<S> ls(1, 1);
    ls(0, 0) = S(std::log(cfg.init_inv_std));
    log_inv_std = store.add(std::move(ls));
  }

  double inv_std() const { return std::exp(double(store.values[std::size_t(log_inv_std)](0, 0))); }

  // ---- raw (tape-free) evaluation ----

  /// [N x 3] positions -> [N x (1+F)]: column 0 is d, the rest the feature.
  MatX<S> eval_sdf_batch(const MatX<S>& x) const {
    return sdf_net.forward(store, x_enc.apply(x));
  }

  std::pair<double, VecX<S>> eval_sdf(const Vec3& x) const {
    if (!x.allFinite()) throw input_error("eval_sdf: non-finite position");
    MatX<S> p(1, 3);
    p << S(x.x()), S(x.y()), S(x.z());
    MatX<S> out = eval_sdf_batch(p);
    if (!out.allFinite()) throw numeric_error("eval_sdf: non-finite field output");
    return {double(out(0, 0)), out.row(0).tail(cfg.feature_dim).transpose()};
  }

  /// Central finite differences, step cfg.fd_step per axis.
  Vec3 sdf_spatial_gradient(const Vec3& x) const {
    MatX<S> p(6, 3);
    for (int k = 0; k < 3; ++k) {
      Vec3 hi = x, lo = x;
      hi[k] += cfg.fd_step;
      lo[k] -= cfg.fd_step;
      for (int c = 0; c < 3; ++c) {
        p(2 * k, c) = S(hi[c]);
        p(2 * k + 1, c) = S(lo[c]);
      }
    }
    MatX<S> d = eval_sdf_batch(p).col(0);
    Vec3 grad;
    for (int k = 0; k < 3; ++k)
      grad[k] = (double(d(2 * k, 0)) - double(d(2 * k + 1, 0))) / (2.0 * cfg.fd_step);
    return grad;
  }

  Vec3 eval_color(const Vec3& x, const Vec3& v, const VecX<S>& feature, const Vec3& grad) const {
    MatX<S> px(1, 3), pv(1, 3), pg(1, 3);
    px << S(x.x()), S(x.y()), S(x.z());
    pv << S(v.x()), S(v.y()), S(v.z());
    pg << S(grad.x()), S(grad.y()), S(grad.z());
    MatX<S> in(1, color_net.in_dim);
    in << x_enc.apply(px), v_enc.apply(pv), feature.transpose(), pg;
    MatX<S> logits = color_net.forward(store, in);
    MatX<S> rgb = (S(1) / (S(1) + (-logits.array()).exp())).matrix();
    return Vec3(double(rgb(0, 0)), double(rgb(0, 1)), double(rgb(0, 2)));
  }

  VecX<S> eval_semantic_feature(const VecX<S>& feature) const {
    MatX<S> out = semantic_net.forward(store, feature.transpose());
    return out.row(0).transpose();
  }

  /// Raw logits s(x); the semantic head reads the SDF feature.
  VecX<S> eval_semantic(const Vec3& x) const {
    return eval_semantic_feature(eval_sdf(x).second);
  }

  // ---- taped evaluation (training path) ----

  /// x is raw [N x 3] data; returns node of [N x (1+F)].
  int build_sdf(Graph<S>& g, const MatX<S>& x) const {
    return sdf_net.build(g, g_const(g, x_enc.apply(x)));
  }
  int build_sdf_encoded(Graph<S>& g, int encoded) const { return sdf_net.build(g, encoded); }

  /// Inputs are nodes except the encodings which are data.
  int build_color(Graph<S>& g, const MatX<S>& x, const MatX<S>& v, int feature, int grad) const {
    int in = g_concat<S>(
        g, {g_const(g, x_enc.apply(x)), g_const(g, v_enc.apply(v)), feature, grad});
    return g_act(g, color_net.build(g, in), Act::Sigmoid);
  }

  int build_semantic(Graph<S>& g, int feature) const { return semantic_net.build(g, feature); }

  int build_inv_std(Graph<S>& g) const {
    return g_act(g, g_param(g, log_inv_std), Act::Exp);
  }

  // ---- checkpoint ----

  static constexpr char kMagic[8] = {'S', 'S', 'F', 'B', '0', '0', '0', '1'};

  void save_params(BlobWriter& w) const {
    w.u32(std::uint32_t(cfg.classes));
    w.u32(std::uint32_t(cfg.sdf_width));
    w.u32(std::uint32_t(cfg.sdf_hidden));
    w.u32(std::uint32_t(cfg.feature_dim));
    w.u32(std::uint32_t(cfg.color_width));
    w.u32(std::uint32_t(cfg.color_hidden));
    w.u32(std::uint32_t(cfg.semantic_width));
    w.u32(std::uint32_t(cfg.semantic_hidden));
    w.u32(std::uint32_t(cfg.x_frequencies));
    w.u32(std::uint32_t(cfg.v_frequencies));
    w.f64(cfg.fd_step);
    w.f64(cfg.sdf_beta);
    w.f64(cfg.init_inv_std);
    w.f64(cfg.init_radius_scale);
    for (int k = 0; k < 3; ++k) w.f64(cfg.bbox.lo[k]);
    for (int k = 0; k < 3; ++k) w.f64(cfg.bbox.hi[k]);
    w.u64(cfg.seed);
    w.u32(std::uint32_t(store.values.size()));
    for (const auto& t : store.values) w.tensor(t);
  }

  static FieldBundle load_params(BlobReader& r) {
    FieldConfig c;
    c.classes = int(r.u32());
    c.sdf_width = int(r.u32());
    c.sdf_hidden = int(r.u32());
    c.feature_dim = int(r.u32());
    c.color_width = int(r.u32());
    c.color_hidden = int(r.u32());
    c.semantic_width = int(r.u32());
    c.semantic_hidden = int(r.u32());
    c.x_frequencies = int(r.u32());
    c.v_frequencies = int(r.u32());
    c.fd_step = r.f64();
    c.sdf_beta = r.f64();
    c.init_inv_std = r.f64();
    c.init_radius_scale = r.f64();
    for (int k = 0; k < 3; ++k) c.bbox.lo[k] = r.f64();
    for (int k = 0; k < 3; ++k) c.bbox.hi[k] = r.f64();
    c.seed = r.u64();
    FieldBundle bundle(c);
    std::uint32_t n = r.u32();
    if (n != bundle.store.values.size()) throw io_error("checkpoint: tensor count mismatch");
    for (auto& t : bundle.store.values) {
      MatX<S> loaded = r.template tensor<S>();
      if (loaded.rows() != t.rows() || loaded.cols() != t.cols())
        throw io_error("checkpoint: tensor shape mismatch");
      t = std::move(loaded);
    }
    return bundle;
  }

  void save(const std::string& path) const {
    BlobWriter w(path, kMagic);
    save_params(w);
    w.close();
  }

  static FieldBundle load(const std::string& path) {
    BlobReader r(path, kMagic);
    return load_params(r);
  }
};

}  // namespace semsurf
