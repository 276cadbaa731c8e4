#include "edgegs/synth.hpp"

#include "edgegs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace edgegs {

SceneKind parse_scene_kind(const std::string& name) {
    if (name == "cube") {
        return SceneKind::Cube;
    }
    if (name == "mixed") {
        return SceneKind::Mixed;
    }
    if (name == "helix_curves" || name == "helix") {
        return SceneKind::HelixCurves;
    }
    throw DataError("unknown scene kind '" + name + "' (expected cube, mixed or helix_curves)");
}

std::string to_string(SceneKind kind) {
    switch (kind) {
    case SceneKind::Cube:
        return "cube";
    case SceneKind::Mixed:
        return "mixed";
    case SceneKind::HelixCurves:
        return "helix_curves";
    }
    return "unknown";
}

namespace {

std::vector<ParametricEdge> cube_edges() {
    std::vector<ParametricEdge> edges;
    for (int axis = 0; axis < 3; ++axis) {
        const int a = (axis + 1) % 3;
        const int b = (axis + 2) % 3;
        for (const double sa : {-0.5, 0.5}) {
            for (const double sb : {-0.5, 0.5}) {
                Vec3 p0 = Vec3::Zero();
                p0[a] = sa;
                p0[b] = sb;
                Vec3 p1 = p0;
                p0[axis] = -0.5;
                p1[axis] = 0.5;
                edges.emplace_back(LineSegment{p0, p1});
            }
        }
    }
    return edges;
}

// One arch on the face x = +0.5, rotated about z onto each side face. The base
// arch is a 120 degree circular arc, so its speed is nearly uniform and a
// chord-length fit can follow it.
std::vector<ParametricEdge> face_arches(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.03, 0.03);
    const double span = 2.0 * std::numbers::pi / 3.0;
    const double radius = 0.3 / std::sin(span / 2.0);
    const double handle = 4.0 / 3.0 * std::tan(span / 4.0) * radius;
    const double hx = handle * std::cos(span / 2.0);
    const double hz = handle * std::sin(span / 2.0);
    const std::array<Vec3, 4> base{Vec3(0.5, -0.3, -0.25), Vec3(0.5, -0.3 + hx, -0.25 + hz),
                                   Vec3(0.5, 0.3 - hx, -0.25 + hz), Vec3(0.5, 0.3, -0.25)};
    std::vector<ParametricEdge> edges;
    for (int face = 0; face < 4; ++face) {
        const double angle = face * std::numbers::pi / 2.0;
        Mat3 rz;
        rz << std::cos(angle), -std::sin(angle), 0.0, std::sin(angle), std::cos(angle), 0.0, 0.0,
            0.0, 1.0;
        CubicBezier curve;
        for (int j = 0; j < 4; ++j) {
            Vec3 p = base[static_cast<std::size_t>(j)];
            if (j == 1 || j == 2) {
                p.y() += jitter(rng);
                p.z() += jitter(rng);
            }
            curve.control[static_cast<std::size_t>(j)] = rz * p;
        }
        edges.emplace_back(curve);
    }
    return edges;
}

std::vector<ParametricEdge> helix(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    const double phase = phase_dist(rng);
    constexpr double radius = 0.35;
    constexpr int pieces = 8;
    constexpr double z0 = -0.4;
    constexpr double z1 = 0.4;
    const double step = std::numbers::pi / 2.0;
    const double dz = (z1 - z0) / pieces;
    // Standard cubic approximation of a circular arc, with z interpolated linearly.
    const double k = 4.0 / 3.0 * std::tan(step / 4.0);
    auto point = [&](double theta, double z) {
        return Vec3(radius * std::cos(theta), radius * std::sin(theta), z);
    };
    auto tangent = [&](double theta) { return Vec3(-std::sin(theta), std::cos(theta), 0.0); };
    std::vector<ParametricEdge> edges;
    for (int i = 0; i < pieces; ++i) {
        const double t0 = phase + i * step;
        const double t1 = t0 + step;
        const double za = z0 + i * dz;
        const double zb = za + dz;
        CubicBezier c;
        c.control[0] = point(t0, za);
        c.control[1] = c.control[0] + k * radius * tangent(t0) + Vec3(0.0, 0.0, dz / 3.0);
        c.control[3] = point(t1, zb);
        c.control[2] = c.control[3] - k * radius * tangent(t1) - Vec3(0.0, 0.0, dz / 3.0);
        edges.emplace_back(c);
    }
    return edges;
}

// Squared distance from p to segment ab.
double segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + t * ab - p).squaredNorm();
}

std::vector<Vec3> polyline(const ParametricEdge& edge) {
    if (const auto* line = std::get_if<LineSegment>(&edge)) {
        return {line->p0, line->p1};
    }
    const auto& curve = std::get<CubicBezier>(edge);
    constexpr int segments = 64;
    std::vector<Vec3> pts;
    pts.reserve(segments + 1);
    for (int i = 0; i <= segments; ++i) {
        pts.push_back(curve.evaluate(static_cast<double>(i) / segments));
    }
    return pts;
}

} // namespace

std::vector<ParametricEdge> make_scene(SceneKind kind, std::uint64_t seed) {
    switch (kind) {
    case SceneKind::Cube:
        return cube_edges();
    case SceneKind::Mixed: {
        auto edges = cube_edges();
        auto arches = face_arches(seed);
        edges.insert(edges.end(), arches.begin(), arches.end());
        return edges;
    }
    case SceneKind::HelixCurves:
        return helix(seed);
    }
    return {};
}

Intrinsics Intrinsics::for_size(int width, int height) {
    Intrinsics in;
    in.width = width;
    in.height = height;
    in.fx = 1.2 * width;
    in.fy = in.fx;
    in.cx = 0.5 * width;
    in.cy = 0.5 * height;
    return in;
}

std::vector<CameraView> camera_ring(int n, double radius, double elevation, const Vec3& lookat,
                                    const Intrinsics& intrinsics) {
    if (n < 2) {
        throw DataError("camera_ring needs at least two cameras");
    }
    if (!(radius > 0.0)) {
        throw DataError("camera_ring radius must be positive");
    }
    std::vector<CameraView> cams;
    cams.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double az = 2.0 * std::numbers::pi * i / n;
        const Vec3 eye = lookat + radius * Vec3(std::cos(elevation) * std::cos(az),
                                                std::cos(elevation) * std::sin(az),
                                                std::sin(elevation));
        CameraView cam;
        cam.fx = intrinsics.fx;
        cam.fy = intrinsics.fy;
        cam.cx = intrinsics.cx;
        cam.cy = intrinsics.cy;
        cam.width = intrinsics.width;
        cam.height = intrinsics.height;
        cam.world_to_cam = look_at(eye, lookat, Vec3::UnitZ());
        cams.push_back(std::move(cam));
    }
    return cams;
}

GrayImage render_gt_edge_map(const std::vector<ParametricEdge>& edges, const CameraView& cam,
                             double thickness_px, bool soft) {
    if (!(thickness_px >= 1.0)) {
        throw DataError("edge thickness must be at least one pixel");
    }
    GrayImage image(cam.width, cam.height, 0.0);
    const double half = 0.5 * thickness_px;
    const double reach = soft ? half + 1.0 : half;

    for (const auto& edge : edges) {
        const auto pts = polyline(edge);
        for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
            const auto pa = project_point(cam, pts[s]);
            const auto pb = project_point(cam, pts[s + 1]);
            if (!pa || !pb) {
                continue;
            }
            const Vec2 a = pa->pixel;
            const Vec2 b = pb->pixel;
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - reach)));
            const int x1 = std::min(cam.width - 1,
                                    static_cast<int>(std::ceil(std::max(a.x(), b.x()) + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - reach)));
            const int y1 = std::min(cam.height - 1,
                                    static_cast<int>(std::ceil(std::max(a.y(), b.y()) + reach)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double d = std::sqrt(segment_distance2(Vec2(x, y), a, b));
                    double v = 0.0;
                    if (d <= half) {
                        v = 1.0;
                    } else if (soft && d < reach) {
                        v = reach - d;
                    }
                    double& px = image(x, y);
                    px = std::max(px, v);
                }
            }
        }
    }
    return image;
}

SyntheticScene make_synthetic_scene(const SceneOptions& options) {
    SyntheticScene scene;
    scene.name = to_string(options.kind);
    scene.gt_edges = make_scene(options.kind, options.seed);
    scene.cameras = camera_ring(options.views, options.radius, options.elevation, Vec3::Zero(),
                                Intrinsics::for_size(options.width, options.height));
    parallel_for(scene.cameras.size(), [&](std::size_t i) {
        scene.cameras[i].target = render_gt_edge_map(scene.gt_edges, scene.cameras[i],
                                                     options.thickness_px, options.soft);
    });
    return scene;
}

} // namespace edgegs
