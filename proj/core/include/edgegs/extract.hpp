#pragma once

#include "edgegs/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace edgegs {

struct ExtractConfig {
    double theta = 0.8;                 // minimum |cos| for both alignment tests
    double neighbor_radius_factor = 3.0; // radius = factor * median nearest-neighbor distance
    std::size_t min_cluster_size = 5;
    double delta = 0.5;                 // curve iff e_c <= delta * e_l
    double opacity_filter = 0.5;
    // Points closer than factor * (longest side of their bounding box) are
    // merged before clustering. 0 disables merging.
    double merge_spacing_factor = 0.025;

    void validate() const;
};

// Ordered chain of oriented-point indices.
struct EdgeCluster {
    std::vector<std::size_t> indices;
};

// Position and principal direction of every Gaussian with opacity >= filter.
// Throws DataError when no Gaussian passes.
std::vector<OrientedPoint> to_oriented_points(const GaussianCloud& cloud, double opacity_filter);

// Greedy bidirectional chain growth. From the lowest unvisited seed, each end
// repeatedly takes its nearest unvisited neighbor within the radius that
// passes |d_new . d_last| >= theta and |d_new . unit(p_new - p_last)| >= theta.
// Chains shorter than min_cluster_size are dropped; every point is used once.
std::vector<EdgeCluster> cluster(const std::vector<OrientedPoint>& points,
                                 const ExtractConfig& cfg);

// Spatial radius used by cluster(): factor * median nearest-neighbor distance.
double neighbor_radius(const std::vector<OrientedPoint>& points, double factor);

// Greedy merge in index order: each unassigned point takes every unassigned
// point within `spacing` (inclusive). The merged point sits at the members'
// mean, oriented along the dominant axis of their directions (sign of the
// first member). spacing <= 0 returns the input unchanged.
std::vector<OrientedPoint> merge_points(const std::vector<OrientedPoint>& points, double spacing);

// Merge spacing for a point set: factor * longest side of its bounding box.
double merge_spacing(const std::vector<OrientedPoint>& points, double factor);

struct LineFit {
    LineSegment segment;
    double residual = 0.0; // mean perpendicular distance
};

// Principal-axis line through the centroid, clipped to the extreme
// projections. p0 is the end nearer the first point of `ordered`.
// Throws DataError for fewer than two points, NumericError if all coincide.
LineFit fit_line(std::span<const Vec3> ordered);

struct BezierFit {
    CubicBezier curve;
    double residual = 0.0;  // mean |B(t_i) - p_i| at chord parameters
    bool fell_back = false; // normal equations too ill-conditioned; use the line
};

inline constexpr double kMaxBezierCondition = 1e12;

// End control points pinned to the chain ends; interior control points by
// linear least squares at chord-length parameters. Throws DataError for fewer
// than four points.
BezierFit fit_bezier(std::span<const Vec3> ordered);

enum class EdgeModel { Line, Curve };

EdgeModel select_model(double curve_residual, double line_residual, double delta);

struct ExtractResult {
    std::vector<OrientedPoint> points; // exported oriented points
    std::vector<OrientedPoint> merged; // clustering input; clusters index into this
    std::vector<EdgeCluster> clusters;
    std::vector<ParametricEdge> edges; // one per successfully fitted cluster, in cluster order
};

// to_oriented_points -> merge_points -> cluster -> fit both models -> select_model.
// An empty filtered cloud yields no edges (with a warning), not an error.
ExtractResult extract(const GaussianCloud& cloud, const ExtractConfig& cfg);

// Same pipeline starting from already exported oriented points.
ExtractResult extract_from_points(std::vector<OrientedPoint> points, const ExtractConfig& cfg);

} // namespace edgegs
