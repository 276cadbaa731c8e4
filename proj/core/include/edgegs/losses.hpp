#pragma once

#include "edgegs/geometry.hpp"
#include "edgegs/image.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace edgegs {

// Binary participation mask for the projection loss, same size as its image.
struct PixelMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;
    bool degenerate = false; // no edge pixels were found

    std::size_t count() const;
};

// Marks every pixel above `edge_threshold` plus an equal number of background
// pixels drawn uniformly without replacement. With no edge pixels at all the
// mask falls back to min(256, pixels) random background pixels and logs a warning.
PixelMask build_mask(const GrayImage& target, double edge_threshold, std::uint64_t seed);

// Mean |rendered - target| over masked pixels. Throws DataError on empty
// masks or mismatched sizes.
double masked_l1(const GrayImage& rendered, const GrayImage& target, const PixelMask& mask);

// d(masked_l1)/d(rendered): sign(rendered - target) / |mask| on masked pixels.
GrayImage masked_l1_gradient(const GrayImage& rendered, const GrayImage& target,
                             const PixelMask& mask);

// Neighbor lists of a point set, excluding self.
struct KnnGraph {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> neighbors;
};

// Exact Euclidean k nearest neighbors with ties going to the lower index.
// Lists hold all other points when fewer than k exist. Throws DataError for
// fewer than two points or k == 0.
KnnGraph knn(const std::vector<Vec3>& means, std::size_t k);

// 1 - mean_i mean_j |d_i . d_ij|.
double orientation_loss(const std::vector<Vec3>& directions, const KnnGraph& graph);

// Gradient with respect to every direction, counting both ends of each pair.
std::vector<Vec3> orientation_loss_gradient(const std::vector<Vec3>& directions,
                                            const KnnGraph& graph);

// Mean over Gaussians of (second-largest scale) / (largest scale).
double shape_loss(const std::vector<Vec3>& log_scales);
std::vector<Vec3> shape_loss_gradient(const std::vector<Vec3>& log_scales);

double total_loss(double l_proj, double l_orient, double l_shape, double lambda_orient,
                  double lambda_shape);

} // namespace edgegs
