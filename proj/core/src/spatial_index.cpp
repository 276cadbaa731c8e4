#include "edgegs/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace edgegs {

namespace {

constexpr std::size_t kLeafSize = 8;

double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

} // namespace

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 1);
        build(0, points_.size());
    }
}

int KdTree::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end, -1, 0.0, -1, -1});
    if (end - begin <= kLeafSize) {
        return id;
    }
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<Neighbor> KdTree::nearest(const Vec3& query, std::size_t k,
                                      std::size_t exclude) const {
    std::priority_queue<Neighbor> heap;
    if (k == 0 || nodes_.empty()) {
        return {};
    }
    auto visit = [&](auto&& self, int id) -> void {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx == exclude) {
                    continue;
                }
                const Neighbor cand{idx, squared_distance(query, points_[idx])};
                if (heap.size() < k) {
                    heap.push(cand);
                } else if (cand < heap.top()) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        const double diff = query[node.axis] - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        self(self, near);
        if (heap.size() < k || diff * diff <= heap.top().dist2) {
            self(self, far);
        }
    };
    visit(visit, 0);

    std::vector<Neighbor> result(heap.size());
    for (std::size_t i = result.size(); i-- > 0;) {
        result[i] = heap.top();
        heap.pop();
    }
    return result;
}

std::vector<Neighbor> KdTree::within(const Vec3& query, double radius2) const {
    std::vector<Neighbor> result;
    if (nodes_.empty()) {
        return result;
    }
    auto visit = [&](auto&& self, int id) -> void {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const double d2 = squared_distance(query, points_[idx]);
                if (d2 <= radius2) {
                    result.push_back({idx, d2});
                }
            }
            return;
        }
        const double diff = query[node.axis] - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        self(self, near);
        if (diff * diff <= radius2) {
            self(self, far);
        }
    };
    visit(visit, 0);
    std::sort(result.begin(), result.end());
    return result;
}

} // namespace edgegs
