#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include "edgegs/losses.hpp"
#include "edgegs/renderer.hpp"
#include "edgegs/trainer.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace edgegs::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    const char* root = std::getenv("EDGEGS_TEST_TMP");
    std::filesystem::path dir =
        std::filesystem::path(root ? root : std::filesystem::temp_directory_path().string()) /
        name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return {u(rng), u(rng), u(rng)};
}

inline Vec4 random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vec4 q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized();
}

// Camera on the -z axis looking at the origin, square image.
inline CameraView test_camera(int size, double focal, double distance = 2.0) {
    CameraView cam;
    cam.fx = focal;
    cam.fy = focal;
    cam.cx = size / 2.0;
    cam.cy = size / 2.0;
    cam.width = size;
    cam.height = size;
    cam.world_to_cam = look_at(Vec3(0.0, -0.3, -distance), Vec3::Zero(), Vec3::UnitY());
    return cam;
}

// Up to 20 anisotropic Gaussians in front of test_camera(32, 40), with
// opacities well below the alpha clamp and distinct scales (no ranking ties).
inline GaussianCloud random_fd_cloud(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GaussianCloud cloud(n);
    for (auto& g : cloud) {
        g.mean = random_vec(rng, -0.35, 0.35);
        g.rotation = random_quaternion(rng) * (0.8 + 0.4 * u(rng));
        // Sorted distinct log-scales, then shuffled across axes.
        std::array<double, 3> ls{std::log(0.10 + 0.05 * u(rng)), std::log(0.05 + 0.02 * u(rng)),
                                 std::log(0.02 + 0.015 * u(rng))};
        std::shuffle(ls.begin(), ls.end(), rng);
        g.log_scale = Vec3(ls[0], ls[1], ls[2]);
        g.opacity_raw = inverse_sigmoid(0.15 + 0.45 * u(rng));
    }
    return cloud;
}

inline GrayImage random_binary_target(std::mt19937_64& rng, int size, double p_edge) {
    std::bernoulli_distribution b(p_edge);
    GrayImage img(size, size);
    for (double& v : img.data()) {
        v = b(rng) ? 1.0 : 0.0;
    }
    return img;
}

// Footprints of the unperturbed cloud, frozen so that central differences
// never see a pixel enter or leave a splat's support.
inline RenderSettings frozen_settings(const GaussianCloud& cloud, const CameraView& cam) {
    RenderSettings settings;
    settings.early_out = false;
    settings.fixed_footprints.assign(cloud.size(), PixelRect{});
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (auto s = project_gaussian(cam, cloud[i], i, settings)) {
            settings.fixed_footprints[i] = s->footprint;
        }
    }
    return settings;
}

inline double* raw_param(EdgeGaussian& g, std::size_t slot) {
    if (slot < 3) {
        return g.mean.data() + slot;
    }
    if (slot < 7) {
        return g.rotation.data() + (slot - 3);
    }
    if (slot < 10) {
        return g.log_scale.data() + (slot - 7);
    }
    return &g.opacity_raw;
}

inline double grad_param(const GaussianGradient& g, std::size_t slot) {
    if (slot < 3) {
        return g.mean[static_cast<int>(slot)];
    }
    if (slot < 7) {
        return g.rotation[static_cast<int>(slot - 3)];
    }
    if (slot < 10) {
        return g.log_scale[static_cast<int>(slot - 7)];
    }
    return g.opacity_raw;
}

struct GradCheck {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst_rel = 0.0;
    double worst_abs = 0.0;
};

inline bool grad_close(double analytic, double numeric, double rel_tol, double abs_tol) {
    const double diff = std::abs(analytic - numeric);
    if (diff < abs_tol) {
        return true;
    }
    return diff / std::max(std::abs(analytic), std::abs(numeric)) < rel_tol;
}

// Compares evaluate_loss() gradients with central differences of its value.
inline GradCheck check_total_loss_gradient(const GaussianCloud& cloud, const CameraView& cam,
                                           const PixelMask& mask, const KnnGraph* graph,
                                           double lambda_orient, double lambda_shape,
                                           double step = 1e-5, double rel_tol = 1e-3,
                                           double abs_tol = 1e-6) {
    const RenderSettings settings = frozen_settings(cloud, cam);
    const LossEvaluation base =
        evaluate_loss(cloud, cam, mask, graph, lambda_orient, lambda_shape, settings);
    auto value = [&](const GaussianCloud& c) {
        return evaluate_loss(c, cam, mask, graph, lambda_orient, lambda_shape, settings)
            .terms.total;
    };
    GradCheck out;
    GaussianCloud work = cloud;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t slot = 0; slot < kParamsPerGaussian; ++slot) {
            double* p = raw_param(work[i], slot);
            const double x = *p;
            *p = x + step;
            const double up = value(work);
            *p = x - step;
            const double down = value(work);
            *p = x;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grad_param(base.grads.params[i], slot);
            ++out.checked;
            const double diff = std::abs(analytic - numeric);
            const double scale = std::max(std::abs(analytic), std::abs(numeric));
            out.worst_abs = std::max(out.worst_abs, diff);
            if (diff >= abs_tol) {
                out.worst_rel = std::max(out.worst_rel, diff / scale);
            }
            if (!grad_close(analytic, numeric, rel_tol, abs_tol)) {
                ++out.failed;
            }
        }
    }
    return out;
}

// |d_i . d_j| is not differentiable at zero; central differences straddling
// the kink are meaningless, so gradient fixtures avoid such pairs.
inline bool near_orientation_kink(const GaussianCloud& cloud, const KnnGraph& graph,
                                  double margin = 1e-3) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 di = principal_direction(cloud[i]).normalized();
        for (const std::size_t j : graph.neighbors[i]) {
            if (std::abs(di.dot(principal_direction(cloud[j]).normalized())) < margin) {
                return true;
            }
        }
    }
    return false;
}

inline double brute_dist2(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

// O(N^2) k-NN with (distance, index) ordering.
inline std::vector<std::vector<std::size_t>> brute_knn(const std::vector<Vec3>& pts,
                                                       std::size_t k) {
    std::vector<std::vector<std::size_t>> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j != i) {
                all.emplace_back(brute_dist2(pts[i], pts[j]), j);
            }
        }
        std::sort(all.begin(), all.end());
        for (std::size_t m = 0; m < std::min(k, all.size()); ++m) {
            out[i].push_back(all[m].second);
        }
    }
    return out;
}

inline std::vector<double> brute_nn_distances(const std::vector<Vec3>& from,
                                              const std::vector<Vec3>& to) {
    std::vector<double> d;
    d.reserve(from.size());
    for (const Vec3& a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& b : to) {
            best = std::min(best, brute_dist2(a, b));
        }
        d.push_back(std::sqrt(best));
    }
    return d;
}

// Mean nearest distance, summed in ascending order.
inline double brute_chamfer(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    std::vector<double> d = brute_nn_distances(from, to);
    std::sort(d.begin(), d.end());
    double sum = 0.0;
    for (const double v : d) {
        sum += v;
    }
    return sum / static_cast<double>(d.size());
}

inline double brute_fraction_within(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                                    double tau) {
    const auto d = brute_nn_distances(from, to);
    std::size_t hits = 0;
    for (const double v : d) {
        hits += v <= tau ? 1 : 0;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(d.size());
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double extent = 1.0) {
    std::vector<Vec3> pts(n);
    for (auto& p : pts) {
        p = random_vec(rng, -extent, extent);
    }
    return pts;
}

// Control points of the chord-length least-squares test curve.
inline CubicBezier reference_bezier() {
    return {{Vec3(0, 0, 0), Vec3(0.3, 2, 0), Vec3(3.7, 2, 0), Vec3(4, 0, 0)}};
}

// Five samples of a curve symmetric about t = 1/2 whose chord-length
// parameters equal their curve parameters: t = 0, s, 1/2, 1-s, 1 with s found
// by bisection on (0.1, 0.4). Only valid for reference_bezier().
inline std::vector<Vec3> chord_consistent_samples(const CubicBezier& curve) {
    auto gap = [&](double s) {
        const double d1 = (curve.evaluate(s) - curve.evaluate(0.0)).norm();
        const double d2 = (curve.evaluate(0.5) - curve.evaluate(s)).norm();
        return d1 / (2.0 * (d1 + d2)) - s;
    };
    double lo = 0.1;
    double hi = 0.4;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    return {curve.evaluate(0.0), curve.evaluate(s), curve.evaluate(0.5), curve.evaluate(1.0 - s),
            curve.evaluate(1.0)};
}

} // namespace edgegs::testing
