#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "semsurf/common.hpp"

namespace semsurf {

// Reverse-mode autodiff over dense matrices. A Graph records the forward
// computation as a node list in topological (creation) order; forward() can
// be replayed after parameters change, which is what the finite-difference
// gradient harness relies on. Detach nodes pass values through but block
// gradients; with freeze_detach set, a replay reuses the cached values so the
// replayed function is exactly the one the gradients describe.

template <typename S>
struct ParamStore {
  std::vector<MatX<S>> values;
  std::vector<MatX<S>> grads;

  int add(MatX<S> v) {
    grads.emplace_back(MatX<S>::Zero(v.rows(), v.cols()));
    values.emplace_back(std::move(v));
    return int(values.size()) - 1;
  }
  void zero_grads() {
    for (auto& g : grads) g.setZero();
  }
  std::vector<MatX<S>> make_sink() const {
    std::vector<MatX<S>> sink;
    sink.reserve(values.size());
    for (const auto& v : values) sink.emplace_back(MatX<S>::Zero(v.rows(), v.cols()));
    return sink;
  }
  void add_sink(const std::vector<MatX<S>>& sink) {
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += sink[i];
  }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values) n += std::size_t(v.size());
    return n;
  }
};

template <typename S>
class Graph;

template <typename S>
struct Node {
  MatX<S> value;
  MatX<S> grad;  // empty until seeded during backward
  bool needs_grad = false;

  virtual void forward(Graph<S>& g) = 0;
  virtual void backward(Graph<S>& g) = 0;
  virtual ~Node() = default;
};

template <typename S>
class Graph {
 public:
  using Mat = MatX<S>;

  explicit Graph(ParamStore<S>* store) : store_(store) {}

  ParamStore<S>& store() { return *store_; }
  Node<S>& node(int id) { return *nodes_[std::size_t(id)]; }
  const Mat& value(int id) const { return nodes_[std::size_t(id)]->value; }
  int size() const { return int(nodes_.size()); }

  /// Replay the whole forward pass (after a parameter change).
  void forward() {
    computed_ = 0;
    forward_to(nodes_.size());
  }
  /// Compute any nodes added since the last forward call.
  void forward_new() { forward_to(nodes_.size()); }

  /// Accumulates d(loss)/d(param) into sink (same shapes as the store).
  /// loss must be a computed 1x1 node.
  void backward(int loss, std::vector<Mat>& sink) {
    if (std::size_t(loss) >= computed_) throw usage_error("backward before forward");
    if (nodes_[std::size_t(loss)]->value.size() != 1)
      throw usage_error("backward target must be scalar");
    sink_ = &sink;
    for (auto& n : nodes_) n->grad.resize(0, 0);
    nodes_[std::size_t(loss)]->grad = Mat::Ones(1, 1);
    for (int i = loss; i >= 0; --i) {
      Node<S>& n = *nodes_[std::size_t(i)];
      if (n.grad.size() != 0 && n.needs_grad) n.backward(*this);
    }
    sink_ = nullptr;
  }

  /// When set, Detach nodes replay their cached value instead of recomputing,
  /// so discrete/stopped quantities stay fixed under parameter perturbation.
  bool freeze_detach = false;

  // -- internals used by node implementations --
  std::vector<Mat>& sink() { return *sink_; }
  Mat& grad_of(int id) {
    Node<S>& n = *nodes_[std::size_t(id)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }
  bool wants_grad(int id) const { return nodes_[std::size_t(id)]->needs_grad; }

  int add(std::unique_ptr<Node<S>> n) {
    nodes_.emplace_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

 private:
  void forward_to(std::size_t end) {
    for (; computed_ < end; ++computed_) nodes_[computed_]->forward(*this);
  }

  ParamStore<S>* store_;
  std::vector<std::unique_ptr<Node<S>>> nodes_;
  std::vector<Mat>* sink_ = nullptr;
  std::size_t computed_ = 0;
};

// ---------------------------------------------------------------------------
// Node implementations
// ---------------------------------------------------------------------------

template <typename S>
struct ConstNode final : Node<S> {
  explicit ConstNode(MatX<S> v) { this->value = std::move(v); }
  void forward(Graph<S>&) override {}
  void backward(Graph<S>&) override {}
};

template <typename S>
struct ParamNode final : Node<S> {
  int param;
  explicit ParamNode(int param_idx) : param(param_idx) { this->needs_grad = true; }
  void forward(Graph<S>& g) override { this->value = g.store().values[std::size_t(param)]; }
  void backward(Graph<S>& g) override { g.sink()[std::size_t(param)] += this->grad; }
};

/// Y = X * W^T + broadcast(b); W is [out x in], b is [out x 1].
template <typename S>
struct LinearNode final : Node<S> {
  int x, w, b;
  LinearNode(Graph<S>& g, int x_, int w_, int b_) : x(x_), w(w_), b(b_) {
    this->needs_grad = g.wants_grad(x) || g.wants_grad(w) || g.wants_grad(b);
  }
  void forward(Graph<S>& g) override {
    this->value.noalias() = g.value(x) * g.value(w).transpose();
    this->value.rowwise() += g.value(b).transpose().row(0);
  }
  void backward(Graph<S>& g) override {
    const auto& dy = this->grad;
    if (g.wants_grad(w)) g.grad_of(w).noalias() += dy.transpose() * g.value(x);
    if (g.wants_grad(b)) g.grad_of(b).noalias() += dy.colwise().sum().transpose();
    if (g.wants_grad(x)) g.grad_of(x).noalias() += dy * g.value(w);
  }
};

enum class Act { Softplus, Sigmoid, Exp, Sqrt, Abs, Square };

template <typename S>
struct ActNode final : Node<S> {
  int x;
  Act kind;
  S beta;  // softplus sharpness
  MatX<S> aux;

  ActNode(Graph<S>& g, int x_, Act kind_, S beta_ = S(1)) : x(x_), kind(kind_), beta(beta_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override {
    const auto& X = g.value(x).array();
    switch (kind) {
      case Act::Softplus: {
        // stable: softplus(t)/beta with t = beta*x; derivative is sigmoid(t)
        auto t = (X * beta).eval();
        this->value = ((t.max(S(0))) + ((-t.abs()).exp() + S(1)).log()) / beta;
        aux = S(1) / (S(1) + (-t).exp());  // sigmoid(t)
        break;
      }
      case Act::Sigmoid:
        this->value = S(1) / (S(1) + (-X).exp());
        break;
      case Act::Exp:
        this->value = X.exp();
        break;
      case Act::Sqrt:
        this->value = X.sqrt();
        break;
      case Act::Abs:
        this->value = X.abs();
        break;
      case Act::Square:
        this->value = X.square();
        break;
    }
  }
  void backward(Graph<S>& g) override {
    if (!g.wants_grad(x)) return;
    const auto& dy = this->grad.array();
    auto dx = g.grad_of(x).array();
    switch (kind) {
      case Act::Softplus:
        dx += dy * aux.array();
        break;
      case Act::Sigmoid:
        dx += dy * this->value.array() * (S(1) - this->value.array());
        break;
      case Act::Exp:
        dx += dy * this->value.array();
        break;
      case Act::Sqrt:
        dx += dy * S(0.5) / this->value.array();
        break;
      case Act::Abs:
        dx += dy * g.value(x).array().sign();
        break;
      case Act::Square:
        dx += dy * S(2) * g.value(x).array();
        break;
    }
  }
};

enum class Bin { Add, Sub, Mul, Div };

template <typename S>
struct BinaryNode final : Node<S> {
  int a, b;
  Bin kind;
  BinaryNode(Graph<S>& g, int a_, int b_, Bin kind_) : a(a_), b(b_), kind(kind_) {
    this->needs_grad = g.wants_grad(a) || g.wants_grad(b);
  }
  void forward(Graph<S>& g) override {
    const auto& A = g.value(a).array();
    const auto& B = g.value(b).array();
    switch (kind) {
      case Bin::Add: this->value = A + B; break;
      case Bin::Sub: this->value = A - B; break;
      case Bin::Mul: this->value = A * B; break;
      case Bin::Div: this->value = A / B; break;
    }
  }
  void backward(Graph<S>& g) override {
    const auto& dy = this->grad.array();
    switch (kind) {
      case Bin::Add:
        if (g.wants_grad(a)) g.grad_of(a).array() += dy;
        if (g.wants_grad(b)) g.grad_of(b).array() += dy;
        break;
      case Bin::Sub:
        if (g.wants_grad(a)) g.grad_of(a).array() += dy;
        if (g.wants_grad(b)) g.grad_of(b).array() -= dy;
        break;
      case Bin::Mul:
        if (g.wants_grad(a)) g.grad_of(a).array() += dy * g.value(b).array();
        if (g.wants_grad(b)) g.grad_of(b).array() += dy * g.value(a).array();
        break;
      case Bin::Div:
        if (g.wants_grad(a)) g.grad_of(a).array() += dy / g.value(b).array();
        if (g.wants_grad(b))
          g.grad_of(b).array() -= dy * g.value(a).array() / g.value(b).array().square();
        break;
    }
  }
};

/// Y = scale * X + shift (compile-time constants).
template <typename S>
struct AffineNode final : Node<S> {
  int x;
  S scale, shift;
  AffineNode(Graph<S>& g, int x_, S scale_, S shift_) : x(x_), scale(scale_), shift(shift_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override { this->value = g.value(x).array() * scale + shift; }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x)) g.grad_of(x).array() += this->grad.array() * scale;
  }
};

/// Y = s * X where s is a 1x1 node (broadcast scalar).
template <typename S>
struct ScalarMulNode final : Node<S> {
  int x, s;
  ScalarMulNode(Graph<S>& g, int x_, int s_) : x(x_), s(s_) {
    this->needs_grad = g.wants_grad(x) || g.wants_grad(s);
  }
  void forward(Graph<S>& g) override { this->value = g.value(x) * g.value(s)(0, 0); }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x)) g.grad_of(x) += this->grad * g.value(s)(0, 0);
    if (g.wants_grad(s))
      g.grad_of(s)(0, 0) += (this->grad.array() * g.value(x).array()).sum();
  }
};

template <typename S>
struct ClampNode final : Node<S> {
  int x;
  S lo, hi;
  ClampNode(Graph<S>& g, int x_, S lo_, S hi_) : x(x_), lo(lo_), hi(hi_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override { this->value = g.value(x).array().max(lo).min(hi); }
  void backward(Graph<S>& g) override {
    if (!g.wants_grad(x)) return;
    const auto& X = g.value(x).array();
    g.grad_of(x).array() +=
        this->grad.array() * ((X > lo) && (X < hi)).template cast<S>();
  }
};

template <typename S>
struct ConcatColsNode final : Node<S> {
  std::vector<int> parts;
  ConcatColsNode(Graph<S>& g, std::vector<int> parts_) : parts(std::move(parts_)) {
    for (int p : parts) this->needs_grad = this->needs_grad || g.wants_grad(p);
  }
  void forward(Graph<S>& g) override {
    Eigen::Index rows = g.value(parts[0]).rows(), cols = 0;
    for (int p : parts) cols += g.value(p).cols();
    this->value.resize(rows, cols);
    Eigen::Index c = 0;
    for (int p : parts) {
      this->value.middleCols(c, g.value(p).cols()) = g.value(p);
      c += g.value(p).cols();
    }
  }
  void backward(Graph<S>& g) override {
    Eigen::Index c = 0;
    for (int p : parts) {
      Eigen::Index w = g.value(p).cols();
      if (g.wants_grad(p)) g.grad_of(p) += this->grad.middleCols(c, w);
      c += w;
    }
  }
};

template <typename S>
struct SliceColsNode final : Node<S> {
  int x;
  Eigen::Index c0, n;
  SliceColsNode(Graph<S>& g, int x_, Eigen::Index c0_, Eigen::Index n_) : x(x_), c0(c0_), n(n_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override { this->value = g.value(x).middleCols(c0, n); }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x)) g.grad_of(x).middleCols(c0, n) += this->grad;
  }
};

template <typename S>
struct RowRangeNode final : Node<S> {
  int x;
  Eigen::Index r0, n;
  RowRangeNode(Graph<S>& g, int x_, Eigen::Index r0_, Eigen::Index n_) : x(x_), r0(r0_), n(n_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override { this->value = g.value(x).middleRows(r0, n); }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x)) g.grad_of(x).middleRows(r0, n) += this->grad;
  }
};

/// Row-major reinterpretation to a new shape with the same element count.
template <typename S>
struct ReshapeNode final : Node<S> {
  int x;
  Eigen::Index rows, cols;
  ReshapeNode(Graph<S>& g, int x_, Eigen::Index r, Eigen::Index c) : x(x_), rows(r), cols(c) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override {
    this->value = MatX<S>::Map(g.value(x).data(), rows, cols);
  }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x)) {
      auto& gx = g.grad_of(x);
      gx += MatX<S>::Map(this->grad.data(), gx.rows(), gx.cols());
    }
  }
};

/// Y[n, c] = X[n, c] * v[n, 0] (per-row scaling by a column vector).
template <typename S>
struct ColScaleNode final : Node<S> {
  int x, v;
  ColScaleNode(Graph<S>& g, int x_, int v_) : x(x_), v(v_) {
    this->needs_grad = g.wants_grad(x) || g.wants_grad(v);
  }
  void forward(Graph<S>& g) override {
    this->value = g.value(x).array().colwise() * g.value(v).col(0).array();
  }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x))
      g.grad_of(x).array() += this->grad.array().colwise() * g.value(v).col(0).array();
    if (g.wants_grad(v))
      g.grad_of(v).col(0).array() +=
          (this->grad.array() * g.value(x).array()).rowwise().sum();
  }
};

template <typename S>
struct RowSumNode final : Node<S> {
  int x;
  explicit RowSumNode(Graph<S>& g, int x_) : x(x_) { this->needs_grad = g.wants_grad(x); }
  void forward(Graph<S>& g) override { this->value = g.value(x).rowwise().sum(); }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x))
      g.grad_of(x).array().colwise() += this->grad.col(0).array();
  }
};

/// Sums every `seg` consecutive rows: [R*seg x C] -> [R x C].
template <typename S>
struct SegmentSumNode final : Node<S> {
  int x;
  Eigen::Index seg;
  SegmentSumNode(Graph<S>& g, int x_, Eigen::Index seg_) : x(x_), seg(seg_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override {
    const auto& X = g.value(x);
    Eigen::Index out_rows = X.rows() / seg;
    this->value = MatX<S>::Zero(out_rows, X.cols());
    for (Eigen::Index r = 0; r < out_rows; ++r)
      for (Eigen::Index i = 0; i < seg; ++i) this->value.row(r) += X.row(r * seg + i);
  }
  void backward(Graph<S>& g) override {
    if (!g.wants_grad(x)) return;
    auto& gx = g.grad_of(x);
    for (Eigen::Index r = 0; r < this->grad.rows(); ++r)
      for (Eigen::Index i = 0; i < seg; ++i) gx.row(r * seg + i) += this->grad.row(r);
  }
};

/// w_i = alpha_i * prod_{j<i} (1 - alpha_j), per row.
template <typename S>
struct TransmittanceNode final : Node<S> {
  int alpha;
  MatX<S> trans;  // T_i = prod_{j<i}(1-alpha_j), cached for backward
  explicit TransmittanceNode(Graph<S>& g, int alpha_) : alpha(alpha_) {
    this->needs_grad = g.wants_grad(alpha);
  }
  void forward(Graph<S>& g) override {
    const auto& A = g.value(alpha);
    trans.resize(A.rows(), A.cols());
    this->value.resize(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      S t = S(1);
      for (Eigen::Index i = 0; i < A.cols(); ++i) {
        trans(r, i) = t;
        this->value(r, i) = A(r, i) * t;
        t *= S(1) - A(r, i);
      }
    }
  }
  void backward(Graph<S>& g) override {
    if (!g.wants_grad(alpha)) return;
    const auto& A = g.value(alpha);
    const auto& dw = this->grad;
    auto& da = g.grad_of(alpha);
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      S suffix = S(0);  // sum_{k>i} dw_k * w_k
      for (Eigen::Index i = A.cols() - 1; i >= 0; --i) {
        da(r, i) += dw(r, i) * trans(r, i) - suffix / (S(1) - A(r, i));
        suffix += dw(r, i) * this->value(r, i);
      }
    }
  }
};

/// Per-row unit normalization with a linear region below eps.
template <typename S>
struct NormalizeRowsNode final : Node<S> {
  int x;
  S eps;
  VecX<S> norms;
  NormalizeRowsNode(Graph<S>& g, int x_, S eps_ = S(1e-12)) : x(x_), eps(eps_) {
    this->needs_grad = g.wants_grad(x);
  }
  void forward(Graph<S>& g) override {
    const auto& X = g.value(x);
    norms = X.rowwise().norm().cwiseMax(eps);
    this->value = X.array().colwise() / norms.array();
  }
  void backward(Graph<S>& g) override {
    if (!g.wants_grad(x)) return;
    const auto& dy = this->grad;
    auto& gx = g.grad_of(x);
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      S dot = this->value.row(r).dot(dy.row(r));
      gx.row(r) += (dy.row(r) - this->value.row(r) * dot) / norms(r);
    }
  }
};

/// Pairwise-summed total of all entries -> 1x1.
template <typename S>
struct SumAllNode final : Node<S> {
  int x;
  explicit SumAllNode(Graph<S>& g, int x_) : x(x_) { this->needs_grad = g.wants_grad(x); }
  void forward(Graph<S>& g) override {
    const auto& X = g.value(x);
    this->value.resize(1, 1);
    this->value(0, 0) = pairwise_sum(X.data(), std::size_t(X.size()));
  }
  void backward(Graph<S>& g) override {
    if (g.wants_grad(x)) g.grad_of(x).array() += this->grad(0, 0);
  }
  static S pairwise_sum(const S* p, std::size_t n) {
    if (n <= 8) {
      S acc = S(0);
      for (std::size_t i = 0; i < n; ++i) acc += p[i];
      return acc;
    }
    std::size_t half = n / 2;
    return pairwise_sum(p, half) + pairwise_sum(p + half, n - half);
  }
};

/// Per-row -log softmax(logits)[label]; rows with label < 0 contribute 0.
/// Labels are fixed data, never differentiated through.
template <typename S>
struct CrossEntropyNode final : Node<S> {
  int logits;
  std::vector<int> labels;
  MatX<S> softmax;
  CrossEntropyNode(Graph<S>& g, int logits_, std::vector<int> labels_)
      : logits(logits_), labels(std::move(labels_)) {
    this->needs_grad = g.wants_grad(logits);
  }
  void forward(Graph<S>& g) override {
    const auto& X = g.value(logits);
    const Eigen::Index n = X.rows(), L = X.cols();
    this->value = MatX<S>::Zero(n, 1);
    softmax.resize(n, L);
    for (Eigen::Index r = 0; r < n; ++r) {
      S m = X.row(r).maxCoeff();
      VecX<S> e = (X.row(r).array() - m).exp();
      S z = e.sum();
      softmax.row(r) = (e / z).transpose();
      int lbl = labels[std::size_t(r)];
      if (lbl >= 0) {
        if (lbl >= L) throw input_error("cross entropy: label out of range");
        this->value(r, 0) = std::log(z) + m - X(r, lbl);
      }
    }
  }
  void backward(Graph<S>& g) override {
    if (!g.wants_grad(logits)) return;
    auto& gx = g.grad_of(logits);
    for (Eigen::Index r = 0; r < softmax.rows(); ++r) {
      int lbl = labels[std::size_t(r)];
      if (lbl < 0) continue;
      gx.row(r) += this->grad(r, 0) * softmax.row(r);
      gx(r, lbl) -= this->grad(r, 0);
    }
  }
};

/// Identity value, zero gradient. Caches its value so replays under
/// freeze_detach keep the stopped quantity constant.
template <typename S>
struct DetachNode final : Node<S> {
  int x;
  bool cached = false;
  MatX<S> cache;
  explicit DetachNode(Graph<S>&, int x_) : x(x_) { this->needs_grad = false; }
  void forward(Graph<S>& g) override {
    if (g.freeze_detach && cached) {
      this->value = cache;
      return;
    }
    this->value = g.value(x);
    cache = this->value;
    cached = true;
  }
  void backward(Graph<S>&) override {}
};

// ---------------------------------------------------------------------------
// Builder helpers
// ---------------------------------------------------------------------------

template <typename S>
int g_const(Graph<S>& g, MatX<S> v) {
  return g.add(std::make_unique<ConstNode<S>>(std::move(v)));
}
template <typename S>
int g_scalar_const(Graph<S>& g, S v) {
  MatX<S> m(1, 1);
  m(0, 0) = v;
  return g_const(g, std::move(m));
}
template <typename S>
int g_param(Graph<S>& g, int param_idx) {
  return g.add(std::make_unique<ParamNode<S>>(param_idx));
}
template <typename S>
int g_linear(Graph<S>& g, int x, int w, int b) {
  return g.add(std::make_unique<LinearNode<S>>(g, x, w, b));
}
template <typename S>
int g_act(Graph<S>& g, int x, Act kind, S beta = S(1)) {
  return g.add(std::make_unique<ActNode<S>>(g, x, kind, beta));
}
template <typename S>
int g_bin(Graph<S>& g, int a, int b, Bin kind) {
  return g.add(std::make_unique<BinaryNode<S>>(g, a, b, kind));
}
template <typename S>
int g_add(Graph<S>& g, int a, int b) {
  return g_bin(g, a, b, Bin::Add);
}
template <typename S>
int g_sub(Graph<S>& g, int a, int b) {
  return g_bin(g, a, b, Bin::Sub);
}
template <typename S>
int g_mul(Graph<S>& g, int a, int b) {
  return g_bin(g, a, b, Bin::Mul);
}
template <typename S>
int g_div(Graph<S>& g, int a, int b) {
  return g_bin(g, a, b, Bin::Div);
}
template <typename S>
int g_affine(Graph<S>& g, int x, S scale, S shift) {
  return g.add(std::make_unique<AffineNode<S>>(g, x, scale, shift));
}
template <typename S>
int g_scalar_mul(Graph<S>& g, int x, int s) {
  return g.add(std::make_unique<ScalarMulNode<S>>(g, x, s));
}
template <typename S>
int g_clamp(Graph<S>& g, int x, S lo, S hi) {
  return g.add(std::make_unique<ClampNode<S>>(g, x, lo, hi));
}
template <typename S>
int g_concat(Graph<S>& g, std::vector<int> parts) {
  return g.add(std::make_unique<ConcatColsNode<S>>(g, std::move(parts)));
}
template <typename S>
int g_cols(Graph<S>& g, int x, Eigen::Index c0, Eigen::Index n) {
  return g.add(std::make_unique<SliceColsNode<S>>(g, x, c0, n));
}
template <typename S>
int g_rows(Graph<S>& g, int x, Eigen::Index r0, Eigen::Index n) {
  return g.add(std::make_unique<RowRangeNode<S>>(g, x, r0, n));
}
template <typename S>
int g_reshape(Graph<S>& g, int x, Eigen::Index rows, Eigen::Index cols) {
  return g.add(std::make_unique<ReshapeNode<S>>(g, x, rows, cols));
}
template <typename S>
int g_colscale(Graph<S>& g, int x, int v) {
  return g.add(std::make_unique<ColScaleNode<S>>(g, x, v));
}
template <typename S>
int g_rowsum(Graph<S>& g, int x) {
  return g.add(std::make_unique<RowSumNode<S>>(g, x));
}
template <typename S>
int g_segsum(Graph<S>& g, int x, Eigen::Index seg) {
  return g.add(std::make_unique<SegmentSumNode<S>>(g, x, seg));
}
template <typename S>
int g_transmittance(Graph<S>& g, int alpha) {
  return g.add(std::make_unique<TransmittanceNode<S>>(g, alpha));
}
template <typename S>
int g_normalize_rows(Graph<S>& g, int x) {
  return g.add(std::make_unique<NormalizeRowsNode<S>>(g, x));
}
template <typename S>
int g_sum_all(Graph<S>& g, int x) {
  return g.add(std::make_unique<SumAllNode<S>>(g, x));
}
template <typename S>
int g_cross_entropy(Graph<S>& g, int logits, std::vector<int> labels) {
  return g.add(std::make_unique<CrossEntropyNode<S>>(g, logits, std::move(labels)));
}
template <typename S>
int g_detach(Graph<S>& g, int x) {
  return g.add(std::make_unique<DetachNode<S>>(g, x));
}

}  // namespace semsurf
