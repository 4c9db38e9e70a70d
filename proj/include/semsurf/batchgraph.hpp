#pragma once

#include <vector>

#include "semsurf/fields.hpp"
#include "semsurf/losses.hpp"
#include "semsurf/renderer.hpp"
#include "semsurf/tape.hpp"

namespace semsurf {

/// Per-block settings resolved by the trainer (ablation flags, schedules).
struct BlockSettings {
  bool stop_gradient = true;   // detach weights/features on the semantic path
  bool sgr = true;             // semantic weighting of the Eikonal term
  bool sgr_active = true;      // false during warm-up
  bool sgr_per_point = true;   // per-point probabilities vs ray broadcast
  LossWeights weights;
  PlanarClassSet planar;
};

/// Inputs for one block of rays: positions for every SDF evaluation the
/// block needs, plus per-ray supervision.
template <typename S>
struct BlockData {
  int rays = 0;     // R
  int samples = 0;  // samples per ray (S)
  int uniform = 0;  // extra Eikonal points (U)

  // SDF evaluation positions, stacked as:
  //   [0, RS)            real samples, ray-major
  //   [RS, RS+R)         terminal (virtual) samples
  //   [RS+R, RS+R+6RS)   central-difference shifts, blocks +x,-x,+y,-y,+z,-z
  //   [A, A+U)           uniform points            (A = 7RS+R)
  //   [A+U, A+7U)        their shifts, same order
  MatX<S> sdf_positions;

  MatX<S> sample_positions;   // [RS x 3] (for the color encoding)
  MatX<S> sample_dirs;        // [RS x 3]
  MatX<S> ray_colors;         // [R x 3]
  MatX<S> ray_normals;        // [R x 3]
  MatX<S> normal_mask;        // [R x 1] of {0,1}
  std::vector<int> labels;    // per ray, -1 = unlabeled

  Eigen::Index rows_needed() const {
    return Eigen::Index(7) * rays * samples + rays + Eigen::Index(7) * uniform;
  }
};

/// The forward graph for one block. Phase 1 (build) renders everything and
/// exposes per-ray class predictions; phase 2 (finish) receives the voted
/// class per ray, attaches the consistency and regularizer terms and the
/// weighted total.
template <typename S>
class BlockGraph {
 public:
  BlockGraph(const FieldBundle<S>& bundle, BlockData<S> data, const BlockSettings& settings)
      : bundle_(bundle),
        data_(std::move(data)),
        settings_(settings),
        graph_(const_cast<ParamStore<S>*>(&bundle.store)) {
    build();
  }

  Graph<S>& graph() { return graph_; }
  const BlockData<S>& data() const { return data_; }

  /// Argmax class of the rendered (accumulated) logits, per ray.
  std::vector<int> predicted_classes() const {
    const MatX<S>& logits = graph_.value(shat_);
    std::vector<int> out(static_cast<std::size_t>(data_.rays));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index arg;
      logits.row(r).maxCoeff(&arg);
      out[std::size_t(r)] = int(arg);
    }
    return out;
  }

  /// voted: class per ray, -1 where no eligible group covers the ray.
  void finish(const std::vector<int>& voted) {
    const int R = data_.rays, Sn = data_.samples, U = data_.uniform;
    term_consistency_ = g_sum_all(graph_, g_cross_entropy(graph_, shat_, voted));

    // (1 + Phi) factors are constants under differentiation.
    MatX<S> phi_ray = MatX<S>::Ones(Eigen::Index(R) * Sn, 1);
    MatX<S> phi_uni = MatX<S>::Ones(U, 1);
    if (settings_.sgr && settings_.sgr_active) {
      graph_.forward_new();
      if (settings_.sgr_per_point) {
        fill_phi(graph_.value(sem_ray_), phi_ray);
      } else {
        // ray-rendered probability broadcast to the ray's samples
        MatX<S> phi_per_ray = MatX<S>::Ones(R, 1);
        fill_phi(graph_.value(shat_), phi_per_ray);
        for (Eigen::Index r = 0; r < R; ++r)
          phi_ray.middleRows(r * Sn, Sn).setConstant(phi_per_ray(r, 0));
      }
      fill_phi(graph_.value(sem_uni_), phi_uni);
    }
    int reg_ray = g_sum_all(graph_, g_mul(graph_, residual_sq(grad_ray_),
                                          g_const(graph_, std::move(phi_ray))));
    int reg_uni = g_sum_all(graph_, g_mul(graph_, residual_sq(grad_uni_),
                                          g_const(graph_, std::move(phi_uni))));
    term_regularizer_ = g_add(graph_, reg_ray, reg_uni);

    const LossWeights& w = settings_.weights;
    int total = g_affine(graph_, term_photometric_, S(w.w_c), S(0));
    total = g_add(graph_, total, g_affine(graph_, term_normal_, S(w.w_n), S(0)));
    total = g_add(graph_, total, g_affine(graph_, term_semantic_, S(w.w_s), S(0)));
    total = g_add(graph_, total, g_affine(graph_, term_consistency_, S(w.w_con), S(0)));
    total = g_add(graph_, total, g_affine(graph_, term_regularizer_, S(w.w_sgr), S(0)));
    total_ = total;
    graph_.forward_new();
  }

  LossTerms terms() const {
    LossTerms t;
    t.photometric = double(graph_.value(term_photometric_)(0, 0));
    t.normal = double(graph_.value(term_normal_)(0, 0));
    t.semantic = double(graph_.value(term_semantic_)(0, 0));
    t.consistency = double(graph_.value(term_consistency_)(0, 0));
    t.regularizer = double(graph_.value(term_regularizer_)(0, 0));
    return t;
  }

  void backward(std::vector<MatX<S>>& sink) { graph_.backward(total_, sink); }

  // Node handles (exposed for tests).
  int term_photometric() const { return term_photometric_; }
  int term_normal() const { return term_normal_; }
  int term_semantic() const { return term_semantic_; }
  int term_consistency() const { return term_consistency_; }
  int term_regularizer() const { return term_regularizer_; }
  int total() const { return total_; }
  int weights_node() const { return weights_; }
  int alpha_node() const { return alpha_; }
  int chat_node() const { return chat_; }
  int nhat_node() const { return nhat_; }
  int shat_node() const { return shat_; }

 private:
  void build() {
    const int R = data_.rays, Sn = data_.samples, U = data_.uniform;
    const Eigen::Index RS = Eigen::Index(R) * Sn;
    const Eigen::Index shift_base = RS + R;
    const Eigen::Index uni_base = shift_base + 6 * RS;

    int sdf_out = bundle_.build_sdf(graph_, data_.sdf_positions);
    int d_all = g_cols(graph_, sdf_out, 0, 1);
    int feat_all = g_cols(graph_, sdf_out, 1, bundle_.cfg.feature_dim);

    // opacity from SDF interval crossings
    int d_mat = g_concat<S>(graph_, {g_reshape(graph_, g_rows(graph_, d_all, 0, RS), R, Sn),
                                     g_rows(graph_, d_all, RS, R)});
    int s_node = bundle_.build_inv_std(graph_);
    int phi_i = g_act(graph_, g_scalar_mul(graph_, g_cols(graph_, d_mat, 0, Sn), s_node),
                      Act::Sigmoid);
    int phi_n = g_act(graph_, g_scalar_mul(graph_, g_cols(graph_, d_mat, 1, Sn), s_node),
                      Act::Sigmoid);
    alpha_ = g_clamp(graph_, g_div(graph_, g_sub(graph_, phi_i, phi_n), phi_i), S(0),
                     S(1.0 - kOpacityEps));
    weights_ = g_transmittance(graph_, alpha_);
    int w_flat = g_reshape(graph_, weights_, RS, 1);

    grad_ray_ = fd_gradient(d_all, shift_base, RS);
    grad_uni_ = fd_gradient(d_all, uni_base + U, U);
    int normals = g_normalize_rows(graph_, grad_ray_);

    int feat_ray = g_rows(graph_, feat_all, 0, RS);
    int color = bundle_.build_color(graph_, data_.sample_positions, data_.sample_dirs, feat_ray,
                                    grad_ray_);

    chat_ = g_segsum(graph_, g_colscale(graph_, color, w_flat), Sn);
    nhat_ = g_segsum(graph_, g_colscale(graph_, normals, w_flat), Sn);

    // Semantic accumulation: the stop-gradient cuts both the weight path and
    // the feature path into the SDF net.
    int w_sem = settings_.stop_gradient ? g_detach(graph_, w_flat) : w_flat;
    int feat_sem = settings_.stop_gradient ? g_detach(graph_, feat_ray) : feat_ray;
    sem_ray_ = bundle_.build_semantic(graph_, feat_sem);
    shat_ = g_segsum(graph_, g_colscale(graph_, sem_ray_, w_sem), Sn);

    int feat_uni = g_rows(graph_, feat_all, uni_base, U);
    sem_uni_ = bundle_.build_semantic(graph_, g_detach(graph_, feat_uni));

    // losses available before voting
    term_photometric_ = g_sum_all(
        graph_, g_rowsum(graph_, g_act(graph_, g_sub(graph_, chat_, g_const(graph_, data_.ray_colors)),
                                       Act::Abs)));
    int n_l1 = g_rowsum(
        graph_, g_act(graph_, g_sub(graph_, nhat_, g_const(graph_, data_.ray_normals)), Act::Abs));
    term_normal_ =
        g_sum_all(graph_, g_mul(graph_, n_l1, g_const(graph_, data_.normal_mask)));
    term_semantic_ = g_sum_all(graph_, g_cross_entropy(graph_, shat_, data_.labels));

    graph_.forward_new();
  }

  /// (d(x+h e_k) - d(x-h e_k)) / 2h for the 6-block shift layout at `base`.
  int fd_gradient(int d_all, Eigen::Index base, Eigen::Index n) {
    const S inv2h = S(1.0 / (2.0 * bundle_.cfg.fd_step));
    std::vector<int> comps;
    for (int k = 0; k < 3; ++k) {
      int plus = g_rows(graph_, d_all, base + (2 * k) * n, n);
      int minus = g_rows(graph_, d_all, base + (2 * k + 1) * n, n);
      comps.push_back(g_affine(graph_, g_sub(graph_, plus, minus), inv2h, S(0)));
    }
    return g_concat<S>(graph_, comps);
  }

  /// (||g||_2 - 1)^2 per row.
  int residual_sq(int grad) {
    int norm = g_act(graph_, g_rowsum(graph_, g_act(graph_, grad, Act::Square)), Act::Sqrt);
    return g_act(graph_, g_affine(graph_, norm, S(1), S(-1)), Act::Square);
  }

  /// phi <- 1 + sgr_weight(softmax(logit row)) per row.
  void fill_phi(const MatX<S>& logits, MatX<S>& phi) const {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::VectorXd row = logits.row(r).template cast<double>();
      phi(r, 0) = S(1.0 + sgr_weight(render_semantic_probability(row), settings_.planar));
    }
  }

  const FieldBundle<S>& bundle_;
  BlockData<S> data_;
  BlockSettings settings_;
  Graph<S> graph_;

  int alpha_ = -1, weights_ = -1;
  int grad_ray_ = -1, grad_uni_ = -1;
  int sem_ray_ = -1, sem_uni_ = -1;
  int chat_ = -1, nhat_ = -1, shat_ = -1;
  int term_photometric_ = -1, term_normal_ = -1, term_semantic_ = -1;
  int term_consistency_ = -1, term_regularizer_ = -1;
  int total_ = -1;
};

}  // namespace semsurf
