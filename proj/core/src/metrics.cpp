#include "edgegs/metrics.hpp"

#include "edgegs/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace edgegs {

namespace {

constexpr int kCurveSegments = 256;

std::vector<Vec3> edge_polyline(const ParametricEdge& edge) {
    if (const auto* line = std::get_if<LineSegment>(&edge)) {
        return {line->p0, line->p1};
    }
    const auto& curve = std::get<CubicBezier>(edge);
    std::vector<Vec3> pts;
    pts.reserve(kCurveSegments + 1);
    for (int i = 0; i <= kCurveSegments; ++i) {
        pts.push_back(curve.evaluate(static_cast<double>(i) / kCurveSegments));
    }
    return pts;
}

std::vector<double> nearest_distances(const std::vector<Vec3>& from, const KdTree& to) {
    std::vector<double> d(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        d[i] = std::sqrt(to.nearest(from[i], 1).front().dist2);
    }
    return d;
}

double sorted_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

double percent_within(const std::vector<double>& distances, double tau) {
    if (distances.empty()) {
        return 0.0;
    }
    const auto hits = std::count_if(distances.begin(), distances.end(),
                                    [tau](double d) { return d <= tau; });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(distances.size());
}

double harmonic(double p, double r) {
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

ParametricEdge transform_edge(const ParametricEdge& edge, const Vec3& origin, double scale) {
    auto map = [&](const Vec3& p) -> Vec3 { return (p - origin) * scale; };
    if (const auto* line = std::get_if<LineSegment>(&edge)) {
        return LineSegment{map(line->p0), map(line->p1)};
    }
    CubicBezier c = std::get<CubicBezier>(edge);
    for (auto& p : c.control) {
        p = map(p);
    }
    return c;
}

} // namespace

std::vector<Vec3> sample_edge(const ParametricEdge& edge, double spacing) {
    if (!(spacing > 0.0)) {
        throw DataError("sample_edge: spacing must be positive");
    }
    const auto poly = edge_polyline(edge);
    std::vector<double> arc(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) {
        arc[i] = arc[i - 1] + (poly[i] - poly[i - 1]).norm();
    }
    const double length = arc.back();
    const auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(length / spacing)));

    std::vector<Vec3> samples;
    samples.reserve(segments + 1);
    samples.push_back(poly.front());
    std::size_t seg = 0;
    for (std::size_t k = 1; k < segments; ++k) {
        const double s = length * static_cast<double>(k) / static_cast<double>(segments);
        while (seg + 2 < poly.size() && arc[seg + 1] < s) {
            ++seg;
        }
        const double span = arc[seg + 1] - arc[seg];
        const double u = span > 0.0 ? std::clamp((s - arc[seg]) / span, 0.0, 1.0) : 0.0;
        samples.push_back(poly[seg] + u * (poly[seg + 1] - poly[seg]));
    }
    samples.push_back(poly.back());
    return samples;
}

double chamfer_directional(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    if (from.empty() || to.empty()) {
        throw DataError("chamfer distance needs two non-empty point sets");
    }
    return sorted_mean(nearest_distances(from, KdTree(to)));
}

PrecisionRecall precision_recall(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                                 double tau) {
    if (gt.empty()) {
        throw DataError("precision_recall: ground truth is empty");
    }
    if (!(tau > 0.0)) {
        throw DataError("precision_recall: tau must be positive");
    }
    PrecisionRecall pr;
    if (pred.empty()) {
        return pr;
    }
    pr.precision = percent_within(nearest_distances(pred, KdTree(gt)), tau);
    pr.recall = percent_within(nearest_distances(gt, KdTree(pred)), tau);
    pr.fscore = harmonic(pr.precision, pr.recall);
    return pr;
}

MetricReport evaluate(const std::vector<ParametricEdge>& pred_edges,
                      const std::vector<ParametricEdge>& gt_edges, const EvalConfig& cfg) {
    if (gt_edges.empty()) {
        throw DataError("evaluate: no ground-truth edges");
    }
    MetricReport report;
    report.thresholds = cfg.thresholds;
    report.spacing = cfg.spacing;
    report.pred_edges = pred_edges.size();
    report.gt_edges = gt_edges.size();

    Vec3 origin = Vec3::Zero();
    if (cfg.normalize) {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (const auto& e : gt_edges) {
            for (const Vec3& p : edge_polyline(e)) {
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
            }
        }
        const double side = (hi - lo).maxCoeff();
        if (!(side > 0.0)) {
            throw DataError("evaluate: ground truth has a degenerate bounding box");
        }
        report.scale = 1.0 / side;
        origin = lo;
    }

    std::vector<Vec3> pred;
    std::vector<Vec3> gt;
    for (const auto& e : pred_edges) {
        const auto s = sample_edge(transform_edge(e, origin, report.scale), cfg.spacing);
        pred.insert(pred.end(), s.begin(), s.end());
    }
    for (const auto& e : gt_edges) {
        const auto s = sample_edge(transform_edge(e, origin, report.scale), cfg.spacing);
        gt.insert(gt.end(), s.begin(), s.end());
    }
    report.pred_points = pred.size();
    report.gt_points = gt.size();

    const KdTree gt_tree(gt);
    const std::vector<double> pred_to_gt = pred.empty() ? std::vector<double>{}
                                                        : nearest_distances(pred, gt_tree);
    std::vector<double> gt_to_pred;
    if (!pred.empty()) {
        gt_to_pred = nearest_distances(gt, KdTree(pred));
        report.accuracy = sorted_mean(pred_to_gt);
        report.completeness = sorted_mean(gt_to_pred);
    } else {
        report.accuracy = std::numeric_limits<double>::infinity();
        report.completeness = std::numeric_limits<double>::infinity();
    }
    for (const double tau : cfg.thresholds) {
        if (!(tau > 0.0)) {
            throw DataError("evaluate: thresholds must be positive");
        }
        PrecisionRecall pr;
        pr.precision = percent_within(pred_to_gt, tau);
        pr.recall = percent_within(gt_to_pred, tau);
        pr.fscore = harmonic(pr.precision, pr.recall);
        report.scores.push_back(pr);
    }
    return report;
}

void print_metric_table(std::ostream& os, const MetricReport& report) {
    const auto flags = os.flags();
    const auto precision = os.precision();
    auto mm = [](double v) { return v * 1000.0; };
    os << std::left << std::setw(8) << "Acc" << std::setw(8) << "Comp";
    for (const char* name : {"R", "P", "F"}) {
        for (const double tau : report.thresholds) {
            os << std::setw(8) << (name + std::to_string(static_cast<int>(std::lround(mm(tau)))));
        }
    }
    os << '\n' << std::fixed << std::setprecision(1);
    os << std::setw(8) << mm(report.accuracy) << std::setw(8) << mm(report.completeness);
    for (const auto& s : report.scores) {
        os << std::setw(8) << s.recall;
    }
    for (const auto& s : report.scores) {
        os << std::setw(8) << s.precision;
    }
    for (const auto& s : report.scores) {
        os << std::setw(8) << s.fscore;
    }
    os << '\n';
    os.flags(flags);
    os.precision(precision);
}

} // namespace edgegs
