#pragma once

#include "edgegs/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace edgegs {

enum class SceneKind { Cube, Mixed, HelixCurves };

SceneKind parse_scene_kind(const std::string& name);
std::string to_string(SceneKind kind);

// Ground-truth edges inside [-0.5, 0.5]^3.
//   Cube:        the 12 edges of the unit cube centered at the origin
//   Mixed:       the cube plus one arched cubic Bezier on each side face
//   HelixCurves: two helix turns as eight quarter-turn Bezier pieces
// The seed jitters curve control points (Mixed) or the helix phase.
std::vector<ParametricEdge> make_scene(SceneKind kind, std::uint64_t seed);

struct Intrinsics {
    double fx = 300.0;
    double fy = 300.0;
    double cx = 128.0;
    double cy = 128.0;
    int width = 256;
    int height = 256;

    // Square pixels with focal = 1.2 * width and the principal point at the center.
    static Intrinsics for_size(int width, int height);
};

// n cameras at equal azimuth steps (starting at 0) on a circle of `radius`
// around `lookat` at the given elevation (radians), all looking at `lookat`
// with +z as the up vector. Targets are left empty.
std::vector<CameraView> camera_ring(int n, double radius, double elevation, const Vec3& lookat,
                                    const Intrinsics& intrinsics);

// Wireframe edge map (no occlusion): 1 within thickness_px/2 of any projected
// edge, with a 1-pixel linear falloff beyond that when `soft` is set. Curves
// are projected as 64-segment polylines; segments touching the region behind
// the camera are dropped.
GrayImage render_gt_edge_map(const std::vector<ParametricEdge>& edges, const CameraView& cam,
                             double thickness_px, bool soft);

struct SceneOptions {
    SceneKind kind = SceneKind::Cube;
    std::uint64_t seed = 0;
    int views = 50;
    int width = 256;
    int height = 256;
    double thickness_px = 2.0;
    bool soft = false;
    double radius = 3.5;
    double elevation = 0.5235987755982988; // 30 degrees
};

struct SyntheticScene {
    std::string name;
    std::vector<ParametricEdge> gt_edges;
    std::vector<CameraView> cameras; // targets filled
    Vec3 bbox_min = Vec3::Constant(-0.5);
    Vec3 bbox_max = Vec3::Constant(0.5);
};

SyntheticScene make_synthetic_scene(const SceneOptions& options);

} // namespace edgegs
