#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "semsurf/common.hpp"
#include "semsurf/renderer.hpp"

namespace semsurf {

struct LossWeights {
  double w_c = 1.0;
  double w_n = 1.0;
  double w_s = 0.5;
  double w_con = 0.5;
  double w_sgr = 0.1;
};

/// Structural classes (walls, floors, ceilings) that get the boosted
/// regularization; every other class is an object class.
struct PlanarClassSet {
  std::vector<int> classes;

  void validate(int num_classes) const {
    if (classes.empty()) throw input_error("planar class set must be nonempty");
    for (int c : classes)
      if (c < 0 || c >= num_classes) throw input_error("planar class out of range");
  }
  bool contains(int c) const {
    return std::find(classes.begin(), classes.end(), c) != classes.end();
  }
};

// All eager losses sum over rays/points (not means), matching the training
// objective; callers divide for logging.

inline double photometric_loss(const std::vector<Vec3>& rendered,
                               const std::vector<Vec3>& reference) {
  double total = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i)
    total += (rendered[i] - reference[i]).cwiseAbs().sum();
  return total;
}

inline double normal_loss(const std::vector<Vec3>& rendered, const std::vector<Vec3>& prior,
                          const std::vector<std::uint8_t>& valid) {
  double total = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i)
    if (valid[i]) total += (rendered[i] - prior[i]).cwiseAbs().sum();
  return total;
}

/// labels: class id per ray, or a negative sentinel for unlabeled rays.
inline double semantic_loss(const std::vector<Eigen::VectorXd>& probs,
                            const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    int l = labels[i];
    if (l < 0) continue;
    if (l >= probs[i].size()) throw input_error("semantic_loss: label out of range");
    total += -std::log(std::max(probs[i][l], 1e-300));
  }
  return total;
}

/// Majority class; ties break toward the smaller class index.
inline int vote_group_class(const std::vector<int>& ray_classes) {
  if (ray_classes.empty()) throw input_error("vote_group_class: empty group");
  std::map<int, int> counts;
  for (int c : ray_classes) ++counts[c];
  int best = -1, best_count = -1;
  for (const auto& [cls, count] : counts)
    if (count > best_count) {  // map iterates in ascending class order
      best = cls;
      best_count = count;
    }
  return best;
}

/// groups: segment id -> indices into probs. Groups smaller than
/// min_group_size are skipped. Voting happens over argmax classes of probs.
inline double consistency_loss(const std::map<int, std::vector<int>>& groups,
                               const std::vector<Eigen::VectorXd>& probs,
                               std::size_t min_group_size) {
  double total = 0.0;
  for (const auto& [mask_id, rays] : groups) {
    if (rays.size() < min_group_size) continue;
    std::vector<int> classes;
    classes.reserve(rays.size());
    for (int r : rays) {
      Eigen::Index arg;
      probs[std::size_t(r)].maxCoeff(&arg);
      classes.push_back(int(arg));
    }
    const int voted = vote_group_class(classes);
    for (int r : rays) total += -std::log(std::max(probs[std::size_t(r)][voted], 1e-300));
  }
  return total;
}

inline double eikonal_loss(const std::vector<Vec3>& gradients) {
  if (gradients.empty()) throw input_error("eikonal_loss: empty point set");
  double total = 0.0;
  for (const auto& g : gradients) {
    const double r = g.norm() - 1.0;
    total += r * r;
  }
  return total;
}

/// Semantic up-weighting: sum of planar probabilities when the argmax class
/// is planar, else 0. Treated as a constant during differentiation.
inline double sgr_weight(const Eigen::VectorXd& prob, const PlanarClassSet& planar) {
  Eigen::Index arg;
  prob.maxCoeff(&arg);
  if (!planar.contains(int(arg))) return 0.0;
  double phi = 0.0;
  for (int c : planar.classes) phi += prob[c];
  return phi;
}

inline double sgr_loss(const std::vector<Vec3>& gradients,
                       const std::vector<Eigen::VectorXd>& probs,
                       const PlanarClassSet& planar) {
  if (gradients.empty()) throw input_error("sgr_loss: empty point set");
  double total = 0.0;
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    const double r = gradients[i].norm() - 1.0;
    total += (1.0 + sgr_weight(probs[i], planar)) * r * r;
  }
  return total;
}

struct LossTerms {
  double photometric = 0.0;
  double normal = 0.0;
  double semantic = 0.0;
  double consistency = 0.0;
  double regularizer = 0.0;  // Eikonal, or SGR when enabled
};

/// Weighted total. The regularizer slot carries w_sgr whether or not the
/// semantic weighting is active.
inline double total_loss(const LossTerms& t, const LossWeights& w) {
  const std::pair<const char*, double> named[] = {{"photometric", t.photometric},
                                                  {"normal", t.normal},
                                                  {"semantic", t.semantic},
                                                  {"consistency", t.consistency},
                                                  {"regularizer", t.regularizer}};
  for (const auto& [name, value] : named)
    if (!std::isfinite(value))
      throw numeric_error(std::string("total_loss: non-finite term: ") + name);
  return w.w_c * t.photometric + w.w_n * t.normal + w.w_s * t.semantic +
         w.w_con * t.consistency + w.w_sgr * t.regularizer;
}

}  // namespace semsurf
