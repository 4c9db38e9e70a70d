#pragma once

#include <cmath>
#include <vector>

#include "semsurf/common.hpp"

namespace semsurf {

constexpr double kOpacityEps = 1e-5;  // alpha is clamped to [0, 1-eps]

/// Opacity of the interval [d_i, d_next] under sharpness s:
/// alpha = clamp((Phi(s d_i) - Phi(s d_next)) / Phi(s d_i), 0, 1-eps)
/// with Phi the logistic CDF. Positive only when the SDF decreases, i.e. the
/// ray moves into the surface.
inline double sdf_to_opacity(double d_i, double d_next, double inv_std) {
  const double phi_i = 1.0 / (1.0 + std::exp(-inv_std * d_i));
  const double phi_n = 1.0 / (1.0 + std::exp(-inv_std * d_next));
  double alpha = (phi_i - phi_n) / phi_i;
  if (alpha < 0.0) alpha = 0.0;
  if (alpha > 1.0 - kOpacityEps) alpha = 1.0 - kOpacityEps;
  return alpha;
}

/// w_i = alpha_i * prod_{j<i}(1 - alpha_j).
inline std::vector<double> transmittance_weights(const std::vector<double>& alpha) {
  std::vector<double> w(alpha.size());
  double t = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    w[i] = alpha[i] * t;
    t *= 1.0 - alpha[i];
  }
  return w;
}

/// Per-ray samples with everything volume rendering accumulates.
struct SampleSet {
  std::vector<Vec3> position;
  std::vector<double> spacing;
  std::vector<double> sdf;
  std::vector<double> alpha;
  std::vector<double> weight;
  std::vector<Vec3> color;
  std::vector<Vec3> normal;                  // unit spatial gradients
  std::vector<Eigen::VectorXd> logits;       // length L each

  std::size_t size() const { return alpha.size(); }
};

struct RenderedRay {
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::Zero();        // weighted sum, not re-normalized
  Eigen::VectorXd logits;            // weighted logits
  double opacity_sum = 0.0;
};

/// Eq-style accumulation of color / normal / semantic logits. The semantic
/// path treats the weights as constants when differentiated; this eager
/// version only computes values.
inline RenderedRay composite(const SampleSet& s) {
  if (s.size() == 0) throw input_error("composite: empty sample set");
  RenderedRay out;
  const auto L = s.logits.empty() ? 0 : s.logits[0].size();
  out.logits = Eigen::VectorXd::Zero(L);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double w = s.weight[i];
    out.opacity_sum += w;
    if (!s.color.empty()) out.color += w * s.color[i];
    if (!s.normal.empty()) out.normal += w * s.normal[i];
    if (!s.logits.empty()) out.logits += w * s.logits[i];
  }
  return out;
}

/// Softmax of accumulated logits.
inline Eigen::VectorXd render_semantic_probability(const Eigen::VectorXd& logits) {
  if (!logits.allFinite()) throw numeric_error("render_semantic_probability: non-finite logits");
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

}  // namespace semsurf
