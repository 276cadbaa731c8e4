#include "edgegs/extract.hpp"

#include "edgegs/spatial_index.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace edgegs {

void ExtractConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw DataError("theta must lie in (0, 1]");
    }
    if (!(delta > 0.0)) {
        throw DataError("delta must be positive");
    }
    if (!(neighbor_radius_factor > 0.0)) {
        throw DataError("neighbor_radius_factor must be positive");
    }
    if (!(merge_spacing_factor >= 0.0)) {
        throw DataError("merge_spacing_factor must be non-negative");
    }
}

std::vector<OrientedPoint> to_oriented_points(const GaussianCloud& cloud, double opacity_filter) {
    std::vector<OrientedPoint> points;
    for (const auto& g : cloud) {
        if (g.opacity() >= opacity_filter) {
            points.push_back({g.mean, principal_direction(g).normalized()});
        }
    }
    if (points.empty()) {
        throw DataError("no Gaussian has opacity >= " + std::to_string(opacity_filter));
    }
    return points;
}

namespace {

std::vector<Vec3> positions(const std::vector<OrientedPoint>& points) {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back(p.position);
    }
    return out;
}

double median_nn_distance(const KdTree& tree) {
    const auto& pts = tree.points();
    if (pts.size() < 2) {
        return 0.0;
    }
    std::vector<double> d(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        d[i] = std::sqrt(tree.nearest(pts[i], 1, i).front().dist2);
    }
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
}

bool aligned(const OrientedPoint& last, const OrientedPoint& next, double theta) {
    if (std::abs(next.direction.dot(last.direction)) < theta) {
        return false;
    }
    const Vec3 step = next.position - last.position;
    const double len = step.norm();
    if (len == 0.0) {
        return true;
    }
    return std::abs(next.direction.dot(step / len)) >= theta;
}

} // namespace

double neighbor_radius(const std::vector<OrientedPoint>& points, double factor) {
    return factor * median_nn_distance(KdTree(positions(points)));
}

std::vector<EdgeCluster> cluster(const std::vector<OrientedPoint>& points,
                                 const ExtractConfig& cfg) {
    cfg.validate();
    std::vector<EdgeCluster> clusters;
    if (points.empty()) {
        return clusters;
    }
    const KdTree tree(positions(points));
    const double radius = cfg.neighbor_radius_factor * median_nn_distance(tree);
    const double radius2 = radius * radius;
    std::vector<std::uint8_t> visited(points.size(), 0);

    auto next_from = [&](std::size_t last) -> std::size_t {
        for (const Neighbor& nb : tree.within(points[last].position, radius2)) {
            if (!visited[nb.index] && aligned(points[last], points[nb.index], cfg.theta)) {
                return nb.index;
            }
        }
        return points.size();
    };

    for (std::size_t seed = 0; seed < points.size(); ++seed) {
        if (visited[seed]) {
            continue;
        }
        visited[seed] = 1;
        std::deque<std::size_t> chain{seed};
        for (std::size_t last = seed, next; (next = next_from(last)) < points.size(); last = next) {
            visited[next] = 1;
            chain.push_back(next);
        }
        for (std::size_t last = seed, next; (next = next_from(last)) < points.size(); last = next) {
            visited[next] = 1;
            chain.push_front(next);
        }
        if (chain.size() >= cfg.min_cluster_size) {
            clusters.push_back({std::vector<std::size_t>(chain.begin(), chain.end())});
        }
    }
    return clusters;
}

LineFit fit_line(std::span<const Vec3> ordered) {
    if (ordered.size() < 2) {
        throw DataError("fit_line needs at least two points");
    }
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : ordered) {
        centroid += p;
    }
    centroid /= static_cast<double>(ordered.size());
    Mat3 cov = Mat3::Zero();
    double spread = 0.0;
    for (const Vec3& p : ordered) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
        spread = std::max(spread, d.norm());
    }
    if (spread < 1e-12) {
        throw NumericError("fit_line: all points coincide");
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    Vec3 axis = solver.eigenvectors().col(2).normalized();
    if ((ordered.back() - ordered.front()).dot(axis) < 0.0) {
        axis = -axis;
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double residual = 0.0;
    for (const Vec3& p : ordered) {
        const Vec3 d = p - centroid;
        const double s = d.dot(axis);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        residual += (d - s * axis).norm();
    }
    LineFit fit;
    fit.segment = {centroid + lo * axis, centroid + hi * axis};
    fit.residual = residual / static_cast<double>(ordered.size());
    return fit;
}

BezierFit fit_bezier(std::span<const Vec3> ordered) {
    if (ordered.size() < 4) {
        throw DataError("fit_bezier needs at least four points");
    }
    const std::size_t n = ordered.size();
    std::vector<double> t(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        t[i] = t[i - 1] + (ordered[i] - ordered[i - 1]).norm();
    }
    BezierFit fit;
    const Vec3& c0 = ordered.front();
    const Vec3& c3 = ordered.back();
    fit.curve.control = {c0, c0, c3, c3};
    if (!(t.back() > 0.0)) {
        fit.fell_back = true;
        fit.residual = std::numeric_limits<double>::infinity();
        return fit;
    }
    for (double& ti : t) {
        ti /= t.back();
    }

    Mat2 normal = Mat2::Zero();
    Eigen::Matrix<double, 2, 3> rhs = Eigen::Matrix<double, 2, 3>::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = bernstein3(t[i]);
        const Vec3 r = ordered[i] - b[0] * c0 - b[3] * c3;
        normal(0, 0) += b[1] * b[1];
        normal(0, 1) += b[1] * b[2];
        normal(1, 1) += b[2] * b[2];
        rhs.row(0) += b[1] * r.transpose();
        rhs.row(1) += b[2] * r.transpose();
    }
    normal(1, 0) = normal(0, 1);
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(normal);
    const double lmin = eig.eigenvalues()[0];
    const double lmax = eig.eigenvalues()[1];
    if (!(lmin > 0.0) || lmax / lmin > kMaxBezierCondition) {
        fit.fell_back = true;
        fit.residual = std::numeric_limits<double>::infinity();
        return fit;
    }
    const Eigen::Matrix<double, 2, 3> inner = normal.ldlt().solve(rhs);
    fit.curve.control[1] = inner.row(0).transpose();
    fit.curve.control[2] = inner.row(1).transpose();

    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        residual += (fit.curve.evaluate(t[i]) - ordered[i]).norm();
    }
    fit.residual = residual / static_cast<double>(n);
    return fit;
}

EdgeModel select_model(double curve_residual, double line_residual, double delta) {
    return curve_residual <= delta * line_residual ? EdgeModel::Curve : EdgeModel::Line;
}

std::vector<OrientedPoint> merge_points(const std::vector<OrientedPoint>& points, double spacing) {
    if (!(spacing > 0.0) || points.empty()) {
        return points;
    }
    const KdTree tree(positions(points));
    std::vector<std::uint8_t> used(points.size(), 0);
    std::vector<OrientedPoint> merged;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (used[i]) {
            continue;
        }
        Vec3 sum = Vec3::Zero();
        Mat3 scatter = Mat3::Zero();
        std::size_t count = 0;
        for (const Neighbor& nb : tree.within(points[i].position, spacing * spacing)) {
            if (used[nb.index]) {
                continue;
            }
            used[nb.index] = 1;
            const OrientedPoint& p = points[nb.index];
            sum += p.position;
            scatter += p.direction * p.direction.transpose();
            ++count;
        }
        const Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
        Vec3 dir = eig.eigenvectors().col(2).normalized();
        if (dir.dot(points[i].direction) < 0.0) {
            dir = -dir;
        }
        merged.push_back({sum / static_cast<double>(count), dir});
    }
    return merged;
}

double merge_spacing(const std::vector<OrientedPoint>& points, double factor) {
    if (points.empty()) {
        return 0.0;
    }
    Vec3 lo = points.front().position;
    Vec3 hi = lo;
    for (const auto& p : points) {
        lo = lo.cwiseMin(p.position);
        hi = hi.cwiseMax(p.position);
    }
    return factor * (hi - lo).maxCoeff();
}

ExtractResult extract_from_points(std::vector<OrientedPoint> points, const ExtractConfig& cfg) {
    cfg.validate();
    ExtractResult result;
    result.points = std::move(points);
    result.merged =
        merge_points(result.points, merge_spacing(result.points, cfg.merge_spacing_factor));
    result.clusters = cluster(result.merged, cfg);
    for (std::size_t c = 0; c < result.clusters.size(); ++c) {
        std::vector<Vec3> ordered;
        ordered.reserve(result.clusters[c].indices.size());
        for (const std::size_t i : result.clusters[c].indices) {
            ordered.push_back(result.merged[i].position);
        }
        try {
            const LineFit line = fit_line(ordered);
            const BezierFit curve = fit_bezier(ordered);
            if (!curve.fell_back &&
                select_model(curve.residual, line.residual, cfg.delta) == EdgeModel::Curve) {
                result.edges.emplace_back(curve.curve);
            } else {
                result.edges.emplace_back(line.segment);
            }
        } catch (const Error& e) {
            spdlog::warn("skipping cluster {} ({} points): {}", c, ordered.size(), e.what());
        }
    }
    return result;
}

ExtractResult extract(const GaussianCloud& cloud, const ExtractConfig& cfg) {
    cfg.validate();
    std::vector<OrientedPoint> points;
    try {
        points = to_oriented_points(cloud, cfg.opacity_filter);
    } catch (const DataError& e) {
        spdlog::warn("extract: {}; no edges produced", e.what());
        return {};
    }
    return extract_from_points(std::move(points), cfg);
}

} // namespace edgegs
