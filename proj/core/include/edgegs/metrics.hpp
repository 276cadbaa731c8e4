#pragma once

#include "edgegs/geometry.hpp"

#include <iosfwd>
#include <vector>

namespace edgegs {

// Points along an edge at equal arc-length steps no longer than `spacing`,
// both endpoints included. Curves are measured on a 256-segment polyline.
std::vector<Vec3> sample_edge(const ParametricEdge& edge, double spacing);

// Mean over a in A of the distance to the closest point of B. The per-point
// distances are summed in ascending order, so the result does not depend on
// the order of A. Throws DataError when either set is empty.
double chamfer_directional(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

struct PrecisionRecall {
    double precision = 0.0; // percent
    double recall = 0.0;    // percent
    double fscore = 0.0;    // percent
};

// Percentages of predicted (ground-truth) points with a ground-truth
// (predicted) point within tau. Empty predictions score zero.
// Throws DataError when gt is empty or tau <= 0.
PrecisionRecall precision_recall(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                                 double tau);

struct EvalConfig {
    double spacing = 0.005;
    std::vector<double> thresholds{0.005, 0.01, 0.02};
    bool normalize = true; // rescale so the GT bounding box's longest side is 1
};

struct MetricReport {
    double accuracy = 0.0;     // pred -> gt, normalized scene units
    double completeness = 0.0; // gt -> pred
    std::vector<double> thresholds;
    std::vector<PrecisionRecall> scores; // one per threshold
    double spacing = 0.0;
    double scale = 1.0; // factor applied to input coordinates
    std::size_t pred_edges = 0;
    std::size_t gt_edges = 0;
    std::size_t pred_points = 0;
    std::size_t gt_points = 0;
};

// Throws DataError when gt_edges is empty.
MetricReport evaluate(const std::vector<ParametricEdge>& pred_edges,
                      const std::vector<ParametricEdge>& gt_edges, const EvalConfig& cfg = {});

// Acc / Comp / R / P / F table with distances in millimeters of the
// normalized scene (1 unit = 1000 mm).
void print_metric_table(std::ostream& os, const MetricReport& report);

} // namespace edgegs
