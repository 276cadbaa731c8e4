#include "edgegs/renderer.hpp"

#include "edgegs/parallel.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

namespace edgegs {

namespace {

// Rows are split into a fixed number of bands independent of the worker
// count, so per-Gaussian partial sums are always reduced in the same order.
constexpr std::size_t kBands = 8;

// Per-splat partial derivatives accumulated during the pixel pass:
// d/du, d/dv, d/dconic_xx, d/dconic_xy, d/dconic_yy, d/dopacity.
constexpr std::size_t kPartials = 6;

struct Band {
    int y0;
    int y1; // inclusive
};

Band band_rows(std::size_t band, int height) {
    const auto h = static_cast<std::size_t>(height);
    return {static_cast<int>(band * h / kBands), static_cast<int>((band + 1) * h / kBands) - 1};
}

struct Projection {
    Vec3 cam_mean;
    Mat3 world_rot;
    Mat23 jacobian;
    Mat3 cov3d;
    Mat2 cov2d_raw;
};

Projection project_detail(const CameraView& cam, const EdgeGaussian& g) {
    Projection p;
    p.world_rot = cam.world_to_cam.rotation;
    p.cam_mean = cam.world_to_cam.apply(g.mean);
    const double z = p.cam_mean.z();
    const double iz = 1.0 / z;
    p.jacobian << cam.fx * iz, 0.0, -cam.fx * p.cam_mean.x() * iz * iz, 0.0, cam.fy * iz,
        -cam.fy * p.cam_mean.y() * iz * iz;
    p.cov3d = covariance(g.rotation, g.log_scale);
    const Mat23 t = p.jacobian * p.world_rot;
    p.cov2d_raw = t * p.cov3d * t.transpose();
    return p;
}

PixelRect clip(PixelRect r, int width, int height) {
    r.x0 = std::max(r.x0, 0);
    r.y0 = std::max(r.y0, 0);
    r.x1 = std::min(r.x1, width - 1);
    r.y1 = std::min(r.y1, height - 1);
    return r;
}

// FNV-1a over 64-bit words (n must be a multiple of 8).
std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; i += 8) {
        std::uint64_t word = 0;
        std::memcpy(&word, bytes + i, 8);
        h ^= word;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<Splat2D> project_all(const GaussianCloud& cloud, const CameraView& cam,
                                 const RenderSettings& settings) {
    std::vector<Splat2D> splats;
    splats.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (auto s = project_gaussian(cam, cloud[i], i, settings)) {
            splats.push_back(*s);
        }
    }
    std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
        if (a.depth != b.depth) {
            return a.depth < b.depth;
        }
        return a.source_index < b.source_index;
    });
    return splats;
}

} // namespace

GaussianGradient& GaussianGradient::operator+=(const GaussianGradient& o) {
    mean += o.mean;
    rotation += o.rotation;
    log_scale += o.log_scale;
    opacity_raw += o.opacity_raw;
    return *this;
}

std::optional<Splat2D> project_gaussian(const CameraView& cam, const EdgeGaussian& g,
                                        std::size_t index, const RenderSettings& settings) {
    const Vec3 cam_mean = cam.world_to_cam.apply(g.mean);
    if (!(cam_mean.z() > settings.near_plane)) {
        return std::nullopt;
    }
    const Projection p = project_detail(cam, g);

    Splat2D s;
    s.depth = cam_mean.z();
    s.mean2d = Vec2(cam.fx * cam_mean.x() / cam_mean.z() + cam.cx,
                    cam.fy * cam_mean.y() / cam_mean.z() + cam.cy);
    s.cov2d = p.cov2d_raw + settings.dilation * Mat2::Identity();
    const double det = s.cov2d.determinant();
    if (!(det >= settings.min_determinant)) {
        return std::nullopt;
    }
    s.conic = Vec3(s.cov2d(1, 1) / det, -s.cov2d(0, 1) / det, s.cov2d(0, 0) / det);
    s.opacity = g.opacity();
    s.source_index = index;

    PixelRect rect;
    if (!settings.fixed_footprints.empty()) {
        rect = settings.fixed_footprints.at(index);
    } else {
        const double rx = settings.cutoff_sigma * std::sqrt(s.cov2d(0, 0));
        const double ry = settings.cutoff_sigma * std::sqrt(s.cov2d(1, 1));
        const double lo_x = std::ceil(s.mean2d.x() - rx);
        const double hi_x = std::floor(s.mean2d.x() + rx);
        const double lo_y = std::ceil(s.mean2d.y() - ry);
        const double hi_y = std::floor(s.mean2d.y() + ry);
        if (hi_x < 0.0 || hi_y < 0.0 || lo_x > cam.width - 1 || lo_y > cam.height - 1) {
            return std::nullopt;
        }
        rect = {static_cast<int>(lo_x), static_cast<int>(hi_x), static_cast<int>(lo_y),
                static_cast<int>(hi_y)};
    }
    s.footprint = clip(rect, cam.width, cam.height);
    if (s.footprint.empty()) {
        return std::nullopt;
    }
    return s;
}

std::uint64_t render_state_key(const GaussianCloud& cloud, const CameraView& cam) {
    std::uint64_t h = 1469598103934665603ull;
    const std::uint64_t n = cloud.size();
    h = fnv1a(h, &n, sizeof(n));
    for (const auto& g : cloud) {
        h = fnv1a(h, g.mean.data(), sizeof(double) * 3);
        h = fnv1a(h, g.rotation.data(), sizeof(double) * 4);
        h = fnv1a(h, g.log_scale.data(), sizeof(double) * 3);
        h = fnv1a(h, &g.opacity_raw, sizeof(double));
    }
    const std::array<double, 4> intr{cam.fx, cam.fy, cam.cx, cam.cy};
    h = fnv1a(h, intr.data(), sizeof(intr));
    h = fnv1a(h, cam.world_to_cam.rotation.data(), sizeof(double) * 9);
    h = fnv1a(h, cam.world_to_cam.translation.data(), sizeof(double) * 3);
    const std::array<std::int64_t, 2> dims{cam.width, cam.height};
    return fnv1a(h, dims.data(), sizeof(dims));
}

RenderOutput render(const GaussianCloud& cloud, const CameraView& cam,
                    const RenderSettings& settings) {
    RenderOutput out;
    out.image = GrayImage(cam.width, cam.height, 0.0);
    out.splats = project_all(cloud, cam, settings);
    out.state_key = render_state_key(cloud, cam);

    std::vector<double> transmittance(out.image.size(), 1.0);
    parallel_for(kBands, [&](std::size_t b) {
        const Band band = band_rows(b, cam.height);
        for (const Splat2D& s : out.splats) {
            const int y0 = std::max(s.footprint.y0, band.y0);
            const int y1 = std::min(s.footprint.y1, band.y1);
            for (int y = y0; y <= y1; ++y) {
                const double dy = y - s.mean2d.y();
                for (int x = s.footprint.x0; x <= s.footprint.x1; ++x) {
                    const std::size_t idx = out.image.index(x, y);
                    double& t = transmittance[idx];
                    if (settings.early_out && t < settings.min_transmittance) {
                        continue;
                    }
                    const double dx = x - s.mean2d.x();
                    const double power =
                        -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy +
                                s.conic[2] * dy * dy);
                    const double alpha =
                        std::min(settings.alpha_clamp, s.opacity * std::exp(power));
                    out.image[idx] += alpha * t;
                    t *= 1.0 - alpha;
                }
            }
        }
    });
    return out;
}

RenderGradients render_backward(const GaussianCloud& cloud, const CameraView& cam,
                                const RenderOutput& forward, const GrayImage& upstream,
                                const RenderSettings& settings) {
    if (forward.state_key != render_state_key(cloud, cam) ||
        forward.image.width() != cam.width || forward.image.height() != cam.height) {
        throw ContractError("render_backward: forward state does not match cloud/camera");
    }
    if (upstream.width() != cam.width || upstream.height() != cam.height) {
        throw ContractError("render_backward: upstream gradient has wrong dimensions");
    }

    const std::size_t n_splats = forward.splats.size();
    std::vector<double> partials(kBands * n_splats * kPartials, 0.0);
    std::vector<double> transmittance(upstream.size(), 1.0);
    std::vector<double> accumulated(upstream.size(), 0.0);

    parallel_for(kBands, [&](std::size_t b) {
        const Band band = band_rows(b, cam.height);
        double* band_partials = partials.data() + b * n_splats * kPartials;
        for (std::size_t k = 0; k < n_splats; ++k) {
            const Splat2D& s = forward.splats[k];
            const int y0 = std::max(s.footprint.y0, band.y0);
            const int y1 = std::min(s.footprint.y1, band.y1);
            double* acc = band_partials + k * kPartials;
            for (int y = y0; y <= y1; ++y) {
                const double dy = y - s.mean2d.y();
                for (int x = s.footprint.x0; x <= s.footprint.x1; ++x) {
                    const std::size_t idx = upstream.index(x, y);
                    const double grad_pixel = upstream[idx];
                    if (grad_pixel == 0.0) {
                        continue;
                    }
                    double& t = transmittance[idx];
                    if (settings.early_out && t < settings.min_transmittance) {
                        continue;
                    }
                    const double dx = x - s.mean2d.x();
                    const double power =
                        -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy +
                                s.conic[2] * dy * dy);
                    const double g = std::exp(power);
                    const double raw_alpha = s.opacity * g;
                    const bool clamped = raw_alpha > settings.alpha_clamp;
                    const double alpha = clamped ? settings.alpha_clamp : raw_alpha;

                    double& a = accumulated[idx];
                    a += alpha * t;
                    // Color behind this splat, rescaled to remove its own (1 - alpha).
                    const double behind = (forward.image[idx] - a) / (1.0 - alpha);
                    const double d_alpha = grad_pixel * (t - behind);
                    t *= 1.0 - alpha;
                    if (clamped) {
                        continue;
                    }
                    acc[5] += d_alpha * g;
                    const double d_power = d_alpha * s.opacity * g;
                    acc[0] += d_power * (s.conic[0] * dx + s.conic[1] * dy);
                    acc[1] += d_power * (s.conic[1] * dx + s.conic[2] * dy);
                    acc[2] += d_power * (-0.5 * dx * dx);
                    acc[3] += d_power * (-dx * dy);
                    acc[4] += d_power * (-0.5 * dy * dy);
                }
            }
        }
    });

    RenderGradients grads;
    grads.params.assign(cloud.size(), GaussianGradient{});
    grads.mean2d.assign(cloud.size(), Vec2::Zero());
    grads.visible.assign(cloud.size(), 0);

    const double fx = cam.fx;
    const double fy = cam.fy;
    for (std::size_t k = 0; k < n_splats; ++k) {
        std::array<double, kPartials> sum{};
        for (std::size_t b = 0; b < kBands; ++b) {
            const double* acc = partials.data() + (b * n_splats + k) * kPartials;
            for (std::size_t j = 0; j < kPartials; ++j) {
                sum[j] += acc[j];
            }
        }
        const Splat2D& s = forward.splats[k];
        const std::size_t i = s.source_index;
        const EdgeGaussian& gauss = cloud[i];
        const Projection p = project_detail(cam, gauss);
        grads.visible[i] = 1;
        grads.mean2d[i] = Vec2(sum[0], sum[1]);

        // conic = cov2d^-1  =>  dL/dcov2d = -K dL/dK K (symmetric matrix form).
        Mat2 conic;
        conic << s.conic[0], s.conic[1], s.conic[1], s.conic[2];
        Mat2 d_conic;
        d_conic << sum[2], 0.5 * sum[3], 0.5 * sum[3], sum[4];
        const Mat2 d_cov2d = -conic * d_conic * conic;

        // cov2d = T Sigma T^T with T = J W.
        const Mat23 t_mat = p.jacobian * p.world_rot;
        const Mat3 d_cov3d = t_mat.transpose() * d_cov2d * t_mat;
        const Mat23 d_t = 2.0 * d_cov2d * t_mat * p.cov3d;
        const Mat23 d_j = d_t * p.world_rot.transpose();

        const double tx = p.cam_mean.x();
        const double ty = p.cam_mean.y();
        const double tz = p.cam_mean.z();
        const double iz = 1.0 / tz;
        const double iz2 = iz * iz;
        const double iz3 = iz2 * iz;
        Vec3 d_cam;
        d_cam.x() = sum[0] * fx * iz + d_j(0, 2) * (-fx * iz2);
        d_cam.y() = sum[1] * fy * iz + d_j(1, 2) * (-fy * iz2);
        d_cam.z() = -sum[0] * fx * tx * iz2 - sum[1] * fy * ty * iz2 + d_j(0, 0) * (-fx * iz2) +
                    d_j(0, 2) * (2.0 * fx * tx * iz3) + d_j(1, 1) * (-fy * iz2) +
                    d_j(1, 2) * (2.0 * fy * ty * iz3);

        GaussianGradient& out = grads.params[i];
        out.mean = p.world_rot.transpose() * d_cam;

        // Sigma = M M^T with M = R S.
        const Mat3 rot = rotation_matrix(gauss.rotation);
        const Vec3 scale = gauss.scale();
        const Mat3 m = rot * scale.asDiagonal();
        const Mat3 d_m = 2.0 * d_cov3d * m;
        const Mat3 d_rot = d_m * scale.asDiagonal();
        const Mat3 rt_dm = rot.transpose() * d_m;
        for (int j = 0; j < 3; ++j) {
            out.log_scale[j] = rt_dm(j, j) * scale[j];
        }
        out.rotation = rotation_matrix_vjp(gauss.rotation, d_rot);
        out.opacity_raw = sum[5] * s.opacity * (1.0 - s.opacity);
    }
    return grads;
}

} // namespace edgegs
