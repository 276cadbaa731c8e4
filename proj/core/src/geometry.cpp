#include "edgegs/geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <string>

namespace edgegs {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double inverse_sigmoid(double y) {
    return std::log(y / (1.0 - y));
}

double EdgeGaussian::opacity() const {
    return sigmoid(opacity_raw);
}

void CameraView::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw DataError("camera focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw DataError("camera image size must be positive");
    }
    if (!target.empty() && (target.width() != width || target.height() != height)) {
        throw DataError("target image is " + std::to_string(target.width()) + "x" +
                        std::to_string(target.height()) + " but camera expects " +
                        std::to_string(width) + "x" + std::to_string(height));
    }
}

std::array<double, 4> bernstein3(double t) {
    const double s = 1.0 - t;
    return {s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t};
}

Vec3 CubicBezier::evaluate(double t) const {
    const auto b = bernstein3(t);
    return b[0] * control[0] + b[1] * control[1] + b[2] * control[2] + b[3] * control[3];
}

Mat3 rotation_matrix(const Vec4& quaternion) {
    const Vec4 q = quaternion.normalized();
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Vec4 rotation_matrix_vjp(const Vec4& quaternion, const Mat3& g) {
    const double norm = quaternion.norm();
    const Vec4 q = quaternion / norm;
    const double w = q[0], x = q[1], y = q[2], z = q[3];

    // dL/dq for the normalized quaternion, differentiating each entry of R.
    Vec4 gn;
    gn[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) +
                   x * g(2, 1));
    gn[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) +
                   z * g(2, 0) + w * g(2, 1) - 2.0 * x * g(2, 2));
    gn[2] = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                   w * g(2, 0) + z * g(2, 1) - 2.0 * y * g(2, 2));
    gn[3] = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
                   2.0 * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));

    // Through q_n = q / |q|.
    return (gn - q * q.dot(gn)) / norm;
}

Vec4 quaternion_from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = axis.normalized();
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return {std::cos(h), a.x() * s, a.y() * s, a.z() * s};
}

Mat3 covariance(const Vec4& quaternion, const Vec3& log_scale) {
    const Mat3 r = rotation_matrix(quaternion);
    const Mat3 m = r * log_scale.array().exp().matrix().asDiagonal();
    return m * m.transpose();
}

int principal_axis(const Vec3& log_scale) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
        if (log_scale[i] > log_scale[best]) {
            best = i;
        }
    }
    return best;
}

Vec3 principal_direction(const EdgeGaussian& g) {
    return rotation_matrix(g.rotation).col(principal_axis(g.log_scale));
}

std::optional<PixelProjection> project_point(const CameraView& cam, const Vec3& p) {
    const Vec3 c = cam.world_to_cam.apply(p);
    if (c.z() <= 1e-8) {
        return std::nullopt;
    }
    return PixelProjection{
        Vec2(cam.fx * c.x() / c.z() + cam.cx, cam.fy * c.y() / c.z() + cam.cy), c.z()};
}

RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-9) {
        // Viewing along the up vector: pick any perpendicular roll reference.
        const Vec3 alt = std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        right = forward.cross(alt);
    }
    right.normalize();
    const Vec3 down = forward.cross(right);

    RigidTransform t;
    t.rotation.row(0) = right.transpose();
    t.rotation.row(1) = down.transpose();
    t.rotation.row(2) = forward.transpose();
    t.translation = -t.rotation * eye;
    return t;
}

} // namespace edgegs
