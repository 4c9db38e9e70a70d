#pragma once

#include <vector>

#include "semsurf/rng.hpp"
#include "semsurf/tape.hpp"

namespace semsurf {

/// Fully connected net over a ParamStore. The raw and taped forward paths
/// share the same Eigen expressions, so their outputs are bit-identical.
template <typename S>
struct Mlp {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<int> widths;  // hidden widths
  Act hidden_act = Act::Softplus;
  S beta = S(1);
  std::vector<int> w;  // ParamStore indices, one per layer
  std::vector<int> b;

  int layer_count() const { return int(widths.size()) + 1; }

  /// Hidden layers N(0, sqrt(2/fan_out)), zero bias; output layer
  /// N(0, sqrt(1/fan_in)).
  void init_random(ParamStore<S>& store, int in, int out, std::vector<int> hidden, Rng& rng,
                   Act act = Act::Softplus, S beta_ = S(1)) {
    in_dim = in;
    out_dim = out;
    widths = std::move(hidden);
    hidden_act = act;
    beta = beta_;
    w.clear();
    b.clear();
    int prev = in;
    for (std::size_t l = 0; l < widths.size(); ++l) {
      add_layer(store, prev, widths[l], std::sqrt(2.0 / widths[l]), rng);
      prev = widths[l];
    }
    add_layer(store, prev, out, std::sqrt(1.0 / prev), rng);
  }

  /// Sphere initialization: the net starts out approximating
  /// d(x) = ||x|| - radius. Assumes the input is a positional encoding whose
  /// first `raw_dims` columns are the raw coordinates; encoding columns of
  /// the first layer start at zero. Output row 0 is the distance value.
  void init_geometric(ParamStore<S>& store, int in, int out, std::vector<int> hidden,
                      double radius, int raw_dims, Rng& rng, S beta_ = S(1)) {
    init_random(store, in, out, std::move(hidden), rng, Act::Softplus, beta_);
    MatX<S>& w0 = store.values[std::size_t(w.front())];
    for (Eigen::Index c = raw_dims; c < w0.cols(); ++c) w0.col(c).setZero();

    MatX<S>& wl = store.values[std::size_t(w.back())];
    MatX<S>& bl = store.values[std::size_t(b.back())];
    const double mean = std::sqrt(3.14159265358979323846) / std::sqrt(double(wl.cols()));
    for (Eigen::Index c = 0; c < wl.cols(); ++c)
      wl(0, c) = S(rng.normal(mean, 1e-4 * mean));
    for (Eigen::Index r = 1; r < wl.rows(); ++r)
      for (Eigen::Index c = 0; c < wl.cols(); ++c) wl(r, c) = S(rng.normal(0.0, 1e-2));
    bl.setZero();
    bl(0, 0) = S(-radius);
  }

  MatX<S> forward(const ParamStore<S>& store, const MatX<S>& x) const {
    MatX<S> h = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
      MatX<S> y;
      y.noalias() = h * store.values[std::size_t(w[l])].transpose();
      y.rowwise() += store.values[std::size_t(b[l])].transpose().row(0);
      if (l + 1 < w.size()) {
        // keep in sync with ActNode<S>::forward
        if (hidden_act == Act::Softplus) {
          auto t = (y.array() * beta).eval();
          h = ((t.max(S(0))) + ((-t.abs()).exp() + S(1)).log()) / beta;
        } else {
          h = S(1) / (S(1) + (-y.array()).exp());
        }
      } else {
        h = std::move(y);
      }
    }
    return h;
  }

  int build(Graph<S>& g, int x) const {
    int h = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
      h = g_linear(g, h, g_param(g, w[l]), g_param(g, b[l]));
      if (l + 1 < w.size()) h = g_act(g, h, hidden_act, beta);
    }
    return h;
  }

 private:
  void add_layer(ParamStore<S>& store, int in, int out, double stddev, Rng& rng) {
    MatX<S> weight(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) weight(r, c) = S(rng.normal(0.0, stddev));
    w.push_back(store.add(std::move(weight)));
    b.push_back(store.add(MatX<S>::Zero(out, 1)));
  }
};

}  // namespace semsurf
