#pragma once

#include "edgegs/geometry.hpp"
#include "edgegs/image.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace edgegs {

// Inclusive pixel rectangle; empty when x0 > x1 or y0 > y1.
struct PixelRect {
    int x0 = 0;
    int x1 = -1;
    int y0 = 0;
    int y1 = -1;

    bool empty() const { return x0 > x1 || y0 > y1; }
    bool operator==(const PixelRect&) const = default;
};

struct RenderSettings {
    double near_plane = 1e-4;
    double dilation = 0.3;          // px^2 added to the projected covariance
    double alpha_clamp = 0.99;
    double min_transmittance = 1e-4;
    double cutoff_sigma = 3.0;      // footprint = bounding box of this sigma ellipse
    double min_determinant = 1e-12;
    bool early_out = true;

    // Test hook: when non-empty (one rect per Gaussian), replaces the computed
    // footprint so finite differences see a fixed pixel support.
    std::vector<PixelRect> fixed_footprints;
};

// A Gaussian projected into one view.
struct Splat2D {
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Identity(); // dilated
    Vec3 conic = Vec3::Zero();     // inverse of cov2d as (xx, xy, yy)
    double depth = 0.0;
    double opacity = 0.0;
    std::size_t source_index = 0;
    PixelRect footprint;
};

struct RenderOutput {
    GrayImage image;
    std::vector<Splat2D> splats; // sorted front to back, index tie-break
    std::uint64_t state_key = 0; // fingerprint of (cloud, camera) for backward
};

struct GaussianGradient {
    Vec3 mean = Vec3::Zero();
    Vec4 rotation = Vec4::Zero();
    Vec3 log_scale = Vec3::Zero();
    double opacity_raw = 0.0;

    GaussianGradient& operator+=(const GaussianGradient& o);
};

struct RenderGradients {
    std::vector<GaussianGradient> params; // one per Gaussian, zero when culled
    std::vector<Vec2> mean2d;             // dL/d(pixel position of the mean)
    std::vector<std::uint8_t> visible;    // 1 when the Gaussian produced a splat
};

// EWA projection of one Gaussian. Empty when behind the near plane, when the
// footprint misses the image, or when the dilated covariance is singular.
std::optional<Splat2D> project_gaussian(const CameraView& cam, const EdgeGaussian& g,
                                        std::size_t index = 0,
                                        const RenderSettings& settings = {});

RenderOutput render(const GaussianCloud& cloud, const CameraView& cam,
                    const RenderSettings& settings = {});

// Gradients of a scalar loss with respect to every raw Gaussian parameter,
// given dL/d(pixel) in `upstream`. `forward` must be the output of render()
// for exactly this cloud and camera; otherwise throws ContractError.
RenderGradients render_backward(const GaussianCloud& cloud, const CameraView& cam,
                                const RenderOutput& forward, const GrayImage& upstream,
                                const RenderSettings& settings = {});

// Fingerprint used to pair a backward call with its forward pass.
std::uint64_t render_state_key(const GaussianCloud& cloud, const CameraView& cam);

} // namespace edgegs
