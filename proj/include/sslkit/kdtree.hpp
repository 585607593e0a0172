// Exact nearest-neighbor search over a fixed point set, used for the
// subspace index lookup. Two interchangeable backends: a k-d tree with full
// backtracking (no approximation bound) and a linear scan. Both return the
// exact k nearest points ordered by (squared distance, index), so results are
// identical across backends, ties included.
#pragma once

#include "sslkit/common.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

namespace sslkit {

struct Neighbor {
    double dist2;
    int index;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.index < b.index;
    }
};

class NearestNeighborSearch {
public:
    virtual ~NearestNeighborSearch() = default;
    virtual std::vector<Neighbor> nearest(const RealVec& query, int count) const = 0;
    virtual std::string name() const = 0;
};

namespace detail {

inline double dist2(const RealMat& points, int row, const RealVec& q) {
    return (points.row(row).transpose() - q).squaredNorm();
}

// Bounded worst-first candidate set; keeps the k smallest (dist2, index).
class NeighborHeap {
public:
    explicit NeighborHeap(int k) : k_(static_cast<std::size_t>(k)) {}

    void offer(Neighbor n) {
        if (heap_.size() < k_) {
            heap_.push(n);
        } else if (n < heap_.top()) {
            heap_.pop();
            heap_.push(n);
        }
    }

    bool full() const { return heap_.size() >= k_; }
    const Neighbor& worst() const { return heap_.top(); }

    std::vector<Neighbor> sorted() && {
        std::vector<Neighbor> out;
        out.reserve(heap_.size());
        while (!heap_.empty()) {
            out.push_back(heap_.top());
            heap_.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    std::size_t k_;
    std::priority_queue<Neighbor> heap_;  // max-heap: top is the current worst
};

}  // namespace detail

class LinearScanSearch final : public NearestNeighborSearch {
public:
    explicit LinearScanSearch(RealMat points) : points_(std::move(points)) {}

    std::vector<Neighbor> nearest(const RealVec& query, int count) const override {
        if (query.size() != points_.cols()) throw ConfigError("query dimension mismatch");
        detail::NeighborHeap heap(std::min<int>(count, static_cast<int>(points_.rows())));
        for (int i = 0; i < points_.rows(); ++i)
            heap.offer({detail::dist2(points_, i, query), i});
        return std::move(heap).sorted();
    }

    std::string name() const override { return "linear"; }

private:
    RealMat points_;
};

class KdTreeSearch final : public NearestNeighborSearch {
public:
    explicit KdTreeSearch(RealMat points) : points_(std::move(points)) {
        std::vector<int> order(static_cast<std::size_t>(points_.rows()));
        std::iota(order.begin(), order.end(), 0);
        nodes_.reserve(order.size());
        root_ = build(order, 0, static_cast<int>(order.size()));
    }

    std::vector<Neighbor> nearest(const RealVec& query, int count) const override {
        if (query.size() != points_.cols()) throw ConfigError("query dimension mismatch");
        detail::NeighborHeap heap(std::min<int>(count, static_cast<int>(points_.rows())));
        if (root_ >= 0) descend(root_, query, heap);
        return std::move(heap).sorted();
    }

    std::string name() const override { return "kdtree"; }

private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::vector<int>& order, int begin, int end) {
        if (begin >= end) return -1;
        // split on the dimension with the widest spread in this subset
        int axis = 0;
        double best_spread = -1.0;
        for (int d = 0; d < points_.cols(); ++d) {
            double lo = points_(order[static_cast<std::size_t>(begin)], d), hi = lo;
            for (int i = begin + 1; i < end; ++i) {
                const double v = points_(order[static_cast<std::size_t>(i)], d);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = d;
            }
        }
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                         [&](int a, int b) {
                             const double va = points_(a, axis), vb = points_(b, axis);
                             return va != vb ? va < vb : a < b;
                         });
        Node node;
        node.point = order[static_cast<std::size_t>(mid)];
        node.axis = axis;
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int left = build(order, begin, mid);
        const int right = build(order, mid + 1, end);
        nodes_[static_cast<std::size_t>(self)].left = left;
        nodes_[static_cast<std::size_t>(self)].right = right;
        return self;
    }

    void descend(int node_idx, const RealVec& query, detail::NeighborHeap& heap) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_idx)];
        heap.offer({detail::dist2(points_, node.point, query), node.point});
        const double split = points_(node.point, node.axis);
        const double diff = query(node.axis) - split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        if (near >= 0) descend(near, query, heap);
        // revisit the far side unless the splitting plane is strictly beyond
        // the current worst candidate (<= keeps equal-distance ties exact)
        if (far >= 0 && (!heap.full() || diff * diff <= heap.worst().dist2))
            descend(far, query, heap);
    }

    RealMat points_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

enum class SearchBackend { kdtree, linear };

inline SearchBackend search_backend_from_name(const std::string& name) {
    if (name == "kdtree") return SearchBackend::kdtree;
    if (name == "linear") return SearchBackend::linear;
    throw ConfigError("unknown search backend: " + name);
}

inline std::string search_backend_name(SearchBackend b) {
    return b == SearchBackend::kdtree ? "kdtree" : "linear";
}

inline std::unique_ptr<NearestNeighborSearch> make_search_backend(SearchBackend backend,
                                                                  RealMat points) {
    if (backend == SearchBackend::kdtree)
        return std::make_unique<KdTreeSearch>(std::move(points));
    return std::make_unique<LinearScanSearch>(std::move(points));
}

}  // namespace sslkit
