#pragma once

#include "edgegs/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace edgegs {

struct Neighbor {
    std::size_t index;
    double dist2;

    // Distance first, then lower index: the order every query reports.
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
    bool operator==(const Neighbor&) const = default;
};

// Static 3-d tree over a point set. Queries are exact; reported distances are
// (a-b).squaredNorm() evaluated in the same order as a brute-force scan, so
// results are bit-identical to one.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    // k nearest points to `query`, sorted by (distance, index). Points whose
    // index equals `exclude` are skipped.
    std::vector<Neighbor> nearest(const Vec3& query, std::size_t k,
                                  std::size_t exclude = static_cast<std::size_t>(-1)) const;

    // All points with squared distance <= radius2, sorted by (distance, index).
    std::vector<Neighbor> within(const Vec3& query, double radius2) const;

private:
    struct Node {
        std::size_t begin;
        std::size_t end;
        int axis;   // -1 for leaves
        double split;
        int left;
        int right;
    };

    int build(std::size_t begin, std::size_t end);

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace edgegs
