#include "edgegs/losses.hpp"

#include "edgegs/spatial_index.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace edgegs {

std::size_t PixelMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

// Marks `want` entries of `pool` chosen uniformly without replacement.
void sample_into(std::vector<std::size_t>& pool, std::size_t want, std::mt19937_64& rng,
                 std::vector<std::uint8_t>& bits) {
    want = std::min(want, pool.size());
    for (std::size_t i = 0; i < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        bits[pool[i]] = 1;
    }
}

void check_same_size(const GrayImage& a, const GrayImage& b, const PixelMask& m) {
    if (a.width() != b.width() || a.height() != b.height() || m.width != a.width() ||
        m.height != a.height() || m.bits.size() != a.size()) {
        throw DataError("masked_l1: rendered, target and mask sizes differ");
    }
}

// Axes sorted by decreasing scale; ties keep the lower axis first.
std::array<int, 3> rank_axes(const Vec3& log_scale) {
    std::array<int, 3> axes{0, 1, 2};
    std::stable_sort(axes.begin(), axes.end(),
                     [&](int a, int b) { return log_scale[a] > log_scale[b]; });
    return axes;
}

} // namespace

PixelMask build_mask(const GrayImage& target, double edge_threshold, std::uint64_t seed) {
    PixelMask mask;
    mask.width = target.width();
    mask.height = target.height();
    mask.bits.assign(target.size(), 0);

    std::vector<std::size_t> background;
    background.reserve(target.size());
    std::size_t edges = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] > edge_threshold) {
            mask.bits[i] = 1;
            ++edges;
        } else {
            background.push_back(i);
        }
    }

    std::mt19937_64 rng(seed);
    if (edges == 0) {
        mask.degenerate = true;
        spdlog::warn("edge map has no pixels above {}; sampling {} background pixels only",
                     edge_threshold, std::min<std::size_t>(256, target.size()));
        sample_into(background, 256, rng, mask.bits);
        return mask;
    }
    sample_into(background, edges, rng, mask.bits);
    return mask;
}

double masked_l1(const GrayImage& rendered, const GrayImage& target, const PixelMask& mask) {
    check_same_size(rendered, target, mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        if (mask.bits[i]) {
            sum += std::abs(rendered[i] - target[i]);
            ++n;
        }
    }
    if (n == 0) {
        throw DataError("masked_l1: mask selects no pixels");
    }
    return sum / static_cast<double>(n);
}

GrayImage masked_l1_gradient(const GrayImage& rendered, const GrayImage& target,
                             const PixelMask& mask) {
    check_same_size(rendered, target, mask);
    const std::size_t n = mask.count();
    if (n == 0) {
        throw DataError("masked_l1: mask selects no pixels");
    }
    const double w = 1.0 / static_cast<double>(n);
    GrayImage grad(rendered.width(), rendered.height(), 0.0);
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        if (mask.bits[i]) {
            const double r = rendered[i] - target[i];
            grad[i] = r > 0.0 ? w : (r < 0.0 ? -w : 0.0);
        }
    }
    return grad;
}

KnnGraph knn(const std::vector<Vec3>& means, std::size_t k) {
    if (means.size() < 2) {
        throw DataError("knn: need at least two points");
    }
    if (k == 0) {
        throw DataError("knn: k must be positive");
    }
    KnnGraph graph;
    graph.k = k;
    graph.neighbors.resize(means.size());
    const KdTree tree(means);
    for (std::size_t i = 0; i < means.size(); ++i) {
        const auto found = tree.nearest(means[i], k, i);
        auto& list = graph.neighbors[i];
        list.reserve(found.size());
        for (const auto& nb : found) {
            list.push_back(nb.index);
        }
    }
    return graph;
}

double orientation_loss(const std::vector<Vec3>& directions, const KnnGraph& graph) {
    if (directions.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const auto& list = graph.neighbors.at(i);
        if (list.empty()) {
            continue;
        }
        double inner = 0.0;
        for (const std::size_t j : list) {
            inner += std::abs(directions[i].dot(directions[j]));
        }
        sum += inner / static_cast<double>(list.size());
    }
    return 1.0 - sum / static_cast<double>(directions.size());
}

std::vector<Vec3> orientation_loss_gradient(const std::vector<Vec3>& directions,
                                            const KnnGraph& graph) {
    std::vector<Vec3> grad(directions.size(), Vec3::Zero());
    const double n = static_cast<double>(directions.size());
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const auto& list = graph.neighbors.at(i);
        if (list.empty()) {
            continue;
        }
        const double w = -1.0 / (n * static_cast<double>(list.size()));
        for (const std::size_t j : list) {
            const double dot = directions[i].dot(directions[j]);
            const double sign = dot > 0.0 ? 1.0 : (dot < 0.0 ? -1.0 : 0.0);
            grad[i] += w * sign * directions[j];
            grad[j] += w * sign * directions[i];
        }
    }
    return grad;
}

double shape_loss(const std::vector<Vec3>& log_scales) {
    if (log_scales.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const Vec3& ls : log_scales) {
        const auto axes = rank_axes(ls);
        sum += std::exp(ls[axes[1]]) / std::exp(ls[axes[0]]);
    }
    return sum / static_cast<double>(log_scales.size());
}

std::vector<Vec3> shape_loss_gradient(const std::vector<Vec3>& log_scales) {
    std::vector<Vec3> grad(log_scales.size(), Vec3::Zero());
    const double n = static_cast<double>(log_scales.size());
    for (std::size_t i = 0; i < log_scales.size(); ++i) {
        const Vec3& ls = log_scales[i];
        const auto axes = rank_axes(ls);
        const double ratio = std::exp(ls[axes[1]]) / std::exp(ls[axes[0]]) / n;
        grad[i][axes[1]] += ratio;
        grad[i][axes[0]] -= ratio;
    }
    return grad;
}

double total_loss(double l_proj, double l_orient, double l_shape, double lambda_orient,
                  double lambda_shape) {
    return l_proj + lambda_orient * l_orient + lambda_shape * l_shape;
}

} // namespace edgegs
