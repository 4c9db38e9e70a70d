#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "semsurf/common.hpp"

namespace semsurf {

/// Static median-split KD-tree over 3D points for nearest-neighbor queries.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw input_error("KdTree: empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size());
    root_ = build(0, int(points_.size()));
  }

  /// Index of the nearest point and its squared distance.
  std::pair<int, double> nearest(const Vec3& q) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    search(root_, q, best, best_d2);
    return {best, best_d2};
  }

  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  static constexpr int kLeafSize = 16;

  int build(int begin, int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return int(nodes_.size()) - 1;
    }
    Vec3 lo = points_[std::size_t(order_[std::size_t(begin)])];
    Vec3 hi = lo;
    for (int i = begin; i < end; ++i) {
      const Vec3& p = points_[std::size_t(order_[std::size_t(i)])];
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                       return points_[std::size_t(a)][axis] < points_[std::size_t(b)][axis];
                     });
    node.axis = axis;
    node.split = points_[std::size_t(order_[std::size_t(mid)])][axis];
    const int self = int(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[std::size_t(self)].left = left;
    nodes_[std::size_t(self)].right = right;
    return self;
  }

  void search(int id, const Vec3& q, int& best, double& best_d2) const {
    const Node& node = nodes_[std::size_t(id)];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[std::size_t(i)];
        const double d2 = (points_[std::size_t(idx)] - q).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    search(near, q, best, best_d2);
    if (delta * delta <= best_d2) search(far, q, best, best_d2);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace semsurf
