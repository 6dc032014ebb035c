#pragma once

#include "primfit/errors.hpp"
#include "primfit/mathutil.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace primfit {

// Median-split k-d tree over 3D points. Exact nearest neighbor; ties broken
// toward the lower original index so results are deterministic.
class KdTree {
  public:
    KdTree() = default;

    explicit KdTree(const std::vector<Vector3d>& points) : points_(points) {
        if (points_.empty()) throw EmptySet("k-d tree over empty point set");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(points_.size());
        root_ = build(0, static_cast<int>(order_.size()), 0);
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Vector3d>& points() const { return points_; }

    struct Result {
        int index = -1;
        double distance = std::numeric_limits<double>::max();
    };

    Result nearest(const Vector3d& query) const {
        Result best;
        best.distance = std::numeric_limits<double>::max();
        search(root_, query, best);
        best.distance = std::sqrt(best.distance);
        return best;
    }

  private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1, right = -1;
    };

    int build(int lo, int hi, int depth) {
        if (lo >= hi) return -1;
        int axis = depth % 3;
        int mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](int a, int b) {
                             double pa = points_[a][axis], pb = points_[b][axis];
                             if (pa != pb) return pa < pb;
                             return a < b;
                         });
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back({order_[mid], axis, -1, -1});
        nodes_[id].left = build(lo, mid, depth + 1);
        nodes_[id].right = build(mid + 1, hi, depth + 1);
        return id;
    }

    void search(int node, const Vector3d& q, Result& best) const {
        if (node < 0) return;
        const Node& n = nodes_[node];
        double d2 = (points_[n.point] - q).squaredNorm();
        if (d2 < best.distance || (d2 == best.distance && n.point < best.index)) {
            best.distance = d2;
            best.index = n.point;
        }
        double diff = q[n.axis] - points_[n.point][n.axis];
        int near = diff < 0 ? n.left : n.right;
        int far = diff < 0 ? n.right : n.left;
        search(near, q, best);
        if (diff * diff <= best.distance) search(far, q, best);
    }

    std::vector<Vector3d> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

inline int brute_force_nearest(const std::vector<Vector3d>& points, const Vector3d& q) {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < points.size(); ++i) {
        double d2 = (points[i] - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace primfit
