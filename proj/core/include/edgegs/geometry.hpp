#pragma once

#include "edgegs/image.hpp"
#include "edgegs/types.hpp"

#include <array>
#include <optional>
#include <variant>
#include <vector>

namespace edgegs {

// One oriented edge point, stored as pre-activation (optimizer) parameters.
//   rotation:    scalar-first quaternion (w, x, y, z), normalized on use
//   log_scale:   scale = exp(log_scale)
//   opacity_raw: opacity = sigmoid(opacity_raw)
// The emitted intensity is fixed to 1 (white edge on black background).
struct EdgeGaussian {
    Vec3 mean = Vec3::Zero();
    Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
    Vec3 log_scale = Vec3::Zero();
    double opacity_raw = 0.0;

    Vec3 scale() const { return log_scale.array().exp(); }
    double opacity() const;
};

using GaussianCloud = std::vector<EdgeGaussian>;

// Rigid world-to-camera transform: x_cam = rotation * x_world + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 camera_center() const { return -rotation.transpose() * translation; }
};

// Pinhole camera (OpenCV convention: x right, y down, z forward) with its
// supervising edge map. Pixel (x, y) samples the image plane at integer
// coordinates, so a point on the optical axis lands exactly on pixel (cx, cy)
// when cx, cy are integers.
struct CameraView {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    RigidTransform world_to_cam;
    GrayImage target;

    // Throws DataError when fx/fy are not positive or the target size differs.
    void validate() const;
};

struct OrientedPoint {
    Vec3 position = Vec3::Zero();
    Vec3 direction = Vec3::UnitX();
};

struct LineSegment {
    Vec3 p0;
    Vec3 p1;
};

struct CubicBezier {
    std::array<Vec3, 4> control;

    Vec3 evaluate(double t) const;
};

using ParametricEdge = std::variant<LineSegment, CubicBezier>;

// Cubic Bernstein basis at t.
std::array<double, 4> bernstein3(double t);

double sigmoid(double x);
double inverse_sigmoid(double y);

// Rotation matrix of the normalized scalar-first quaternion.
Mat3 rotation_matrix(const Vec4& quaternion);

// Vector-Jacobian product of rotation_matrix(): given dL/dR, returns dL/dq for
// the raw (unnormalized) quaternion.
Vec4 rotation_matrix_vjp(const Vec4& quaternion, const Mat3& grad_rotation);

Vec4 quaternion_from_axis_angle(const Vec3& axis, double angle);

// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
Mat3 covariance(const Vec4& quaternion, const Vec3& log_scale);

// Axis index of the largest scale; ties resolve to the lowest index.
int principal_axis(const Vec3& log_scale);

// Column of the rotation matrix belonging to the largest scale.
Vec3 principal_direction(const EdgeGaussian& g);

struct PixelProjection {
    Vec2 pixel;
    double depth;
};

// Pinhole projection. Empty when the camera-space depth is <= 1e-8.
std::optional<PixelProjection> project_point(const CameraView& cam, const Vec3& p);

// Camera whose optical axis passes through `target`, using `up` to fix roll.
RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

} // namespace edgegs
