#include "edgegs/trainer.hpp"

#include "edgegs/losses.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

namespace edgegs {

namespace {

// Parameter slots inside one Gaussian's 11-vector.
constexpr std::size_t kMean = 0;
constexpr std::size_t kRot = 3;
constexpr std::size_t kScale = 7;
constexpr std::size_t kOpacity = 10;

void pack(const GaussianGradient& g, double* out) {
    for (int j = 0; j < 3; ++j) {
        out[kMean + j] = g.mean[j];
        out[kScale + j] = g.log_scale[j];
    }
    for (int j = 0; j < 4; ++j) {
        out[kRot + j] = g.rotation[j];
    }
    out[kOpacity] = g.opacity_raw;
}

double* param_ptr(EdgeGaussian& g, std::size_t slot) {
    if (slot < kRot) {
        return g.mean.data() + slot;
    }
    if (slot < kScale) {
        return g.rotation.data() + (slot - kRot);
    }
    if (slot < kOpacity) {
        return g.log_scale.data() + (slot - kScale);
    }
    return &g.opacity_raw;
}

bool all_finite(const EdgeGaussian& g) {
    return g.mean.allFinite() && g.rotation.allFinite() && g.log_scale.allFinite() &&
           std::isfinite(g.opacity_raw);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(a) ^ b) ^ c);
}

void TrainConfig::validate() const {
    if (epochs <= 0) {
        throw DataError("epochs must be positive");
    }
    if (position_only_epochs < 0 || regularizer_start_epoch < 0) {
        throw DataError("schedule epochs must be non-negative");
    }
    if (position_only_epochs >= regularizer_start_epoch) {
        throw DataError("position_only_epochs must be smaller than regularizer_start_epoch");
    }
    if (regularizer_every <= 0) {
        throw DataError("regularizer_every must be positive");
    }
    if (lambda_orient < 0.0 || lambda_shape < 0.0) {
        throw DataError("loss weights must be non-negative");
    }
    if (k == 0) {
        throw DataError("k must be positive");
    }
    if (!(lr.position > 0.0) || !(lr.rotation > 0.0) || !(lr.scale > 0.0) ||
        !(lr.opacity > 0.0)) {
        throw DataError("learning rates must be positive");
    }
    if (lr.position_decay_every <= 0 || lr.position_decay_count < 0) {
        throw DataError("invalid position learning-rate decay");
    }
    if (density.densify_every <= 0 || !(density.clone_scale_divisor > 0.0)) {
        throw DataError("invalid density-control settings");
    }
}

TrainConfig TrainConfig::preset(const std::string& name) {
    TrainConfig cfg;
    if (name == "object") {
        cfg.lambda_orient = 0.1;
        cfg.lambda_shape = 0.1;
    } else if (name == "scene") {
        cfg.lambda_orient = 0.01;
        cfg.lambda_shape = 0.01;
    } else {
        throw DataError("unknown preset '" + name + "' (expected object or scene)");
    }
    return cfg;
}

double position_learning_rate(const LearningRates& lr, int epoch) {
    const int decays = std::min(std::max(epoch, 0) / lr.position_decay_every,
                                lr.position_decay_count);
    return lr.position * std::pow(lr.position_decay, decays);
}

GaussianCloud init_cloud(const InitMode& mode, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec3> means;
    if (const auto* r = std::get_if<RandomInit>(&mode)) {
        if (r->count == 0) {
            throw DataError("init_cloud: random initialization needs at least one point");
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        means.reserve(r->count);
        for (std::size_t i = 0; i < r->count; ++i) {
            const Vec3 u(unit(rng), unit(rng), unit(rng));
            means.push_back(r->lower + u.cwiseProduct(r->upper - r->lower));
        }
    } else {
        means = std::get<PointInit>(mode).points;
        if (means.empty()) {
            throw DataError("init_cloud: empty point list");
        }
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    GaussianCloud cloud(means.size());
    const double log_scale = std::log(kInitialScale);
    const double opacity_raw = inverse_sigmoid(kInitialOpacity);
    for (std::size_t i = 0; i < means.size(); ++i) {
        EdgeGaussian& g = cloud[i];
        g.mean = means[i];
        Vec4 q;
        do {
            q = Vec4(normal(rng), normal(rng), normal(rng), normal(rng));
        } while (q.norm() < 1e-12);
        g.rotation = q.normalized();
        g.log_scale = Vec3::Constant(log_scale);
        g.opacity_raw = opacity_raw;
    }
    return cloud;
}

void TrainState::resize_optimizer() {
    adam_m.resize(cloud.size() * kParamsPerGaussian, 0.0);
    adam_v.resize(cloud.size() * kParamsPerGaussian, 0.0);
    grad2d_sum.resize(cloud.size(), 0.0);
    grad2d_count.resize(cloud.size(), 0);
}

DensityOutcome density_control(const GaussianCloud& cloud, const std::vector<double>& mean_grad2d,
                               const DensityControlConfig& cfg, std::mt19937_64& rng) {
    if (mean_grad2d.size() != cloud.size()) {
        throw ContractError("density_control: gradient accumulators do not match the cloud");
    }
    DensityOutcome out;
    std::vector<std::size_t> to_clone;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (cloud[i].opacity() < cfg.cull_opacity) {
            ++out.culled;
            continue;
        }
        out.cloud.push_back(cloud[i]);
        out.source.push_back(i);
        out.cloned.push_back(0);
        if (mean_grad2d[i] > cfg.densify_grad_threshold) {
            to_clone.push_back(out.cloud.size() - 1);
        }
    }
    if (out.cloud.empty()) {
        throw NumericError("density control culled every Gaussian; training collapsed");
    }

    const double shrink = std::log(cfg.clone_scale_divisor);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const std::size_t slot : to_clone) {
        EdgeGaussian& parent = out.cloud[slot];
        const Mat3 rot = rotation_matrix(parent.rotation);
        const Vec3 z(normal(rng), normal(rng), normal(rng));
        EdgeGaussian child = parent;
        child.mean = parent.mean + rot * parent.scale().cwiseProduct(z);
        parent.log_scale.array() -= shrink;
        child.log_scale.array() -= shrink;
        out.cloud.push_back(child);
        out.source.push_back(out.source[slot]);
        out.cloned.push_back(1);
        ++out.clones;
    }
    return out;
}

LossEvaluation evaluate_loss(const GaussianCloud& cloud, const CameraView& cam,
                             const PixelMask& mask, const KnnGraph* graph, double lambda_orient,
                             double lambda_shape, const RenderSettings& settings) {
    LossEvaluation out;
    const RenderOutput frame = render(cloud, cam, settings);
    out.terms.l_proj = masked_l1(frame.image, cam.target, mask);
    const GrayImage upstream = masked_l1_gradient(frame.image, cam.target, mask);
    out.grads = render_backward(cloud, cam, frame, upstream, settings);
    if (graph != nullptr) {
        const std::size_t n = cloud.size();
        std::vector<Vec3> dirs(n);
        std::vector<Vec3> log_scales(n);
        for (std::size_t i = 0; i < n; ++i) {
            dirs[i] = principal_direction(cloud[i]);
            log_scales[i] = cloud[i].log_scale;
        }
        out.terms.l_orient = orientation_loss(dirs, *graph);
        out.terms.l_shape = shape_loss(log_scales);
        const auto d_dirs = orientation_loss_gradient(dirs, *graph);
        const auto d_scales = shape_loss_gradient(log_scales);
        for (std::size_t i = 0; i < n; ++i) {
            const EdgeGaussian& g = cloud[i];
            Mat3 d_rot = Mat3::Zero();
            d_rot.col(principal_axis(g.log_scale)) = lambda_orient * d_dirs[i];
            out.grads.params[i].rotation += rotation_matrix_vjp(g.rotation, d_rot);
            out.grads.params[i].log_scale += lambda_shape * d_scales[i];
        }
    }
    out.terms.total = total_loss(out.terms.l_proj, out.terms.l_orient, out.terms.l_shape,
                                 lambda_orient, lambda_shape);
    return out;
}

Trainer::Trainer(std::vector<CameraView> views, GaussianCloud cloud, TrainConfig cfg)
    : Trainer(std::move(views), [&cloud] {
          TrainState s;
          s.cloud = std::move(cloud);
          return s;
      }(), std::move(cfg)) {}

Trainer::Trainer(std::vector<CameraView> views, TrainState state, TrainConfig cfg)
    : views_(std::move(views)), cfg_(std::move(cfg)), state_(std::move(state)) {
    cfg_.validate();
    if (views_.size() < 2) {
        throw DataError("training needs at least two views");
    }
    if (state_.cloud.empty()) {
        throw DataError("training needs a non-empty Gaussian cloud");
    }
    for (const auto& v : views_) {
        v.validate();
        if (v.target.empty()) {
            throw DataError("training view has no target edge map");
        }
    }
    state_.resize_optimizer();
}

Trainer::StepLosses Trainer::step(std::size_t view_index) {
    const CameraView& cam = views_[view_index];
    const int epoch = state_.epoch;
    const bool position_only = epoch < cfg_.position_only_epochs;
    const bool regularize = epoch >= cfg_.regularizer_start_epoch &&
                            state_.step % static_cast<std::uint64_t>(cfg_.regularizer_every) == 0;

    const PixelMask mask = build_mask(cam.target, cfg_.edge_threshold,
                                      mix_seed(cfg_.seed, static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(view_index)));
    std::optional<KnnGraph> graph;
    if (regularize && state_.cloud.size() >= 2) {
        std::vector<Vec3> means(state_.cloud.size());
        for (std::size_t i = 0; i < means.size(); ++i) {
            means[i] = state_.cloud[i].mean;
        }
        graph = knn(means, cfg_.k);
    }
    LossEvaluation eval = evaluate_loss(state_.cloud, cam, mask, graph ? &*graph : nullptr,
                                        cfg_.lambda_orient, cfg_.lambda_shape, render_settings_);
    StepLosses losses;
    losses.l_proj = eval.terms.l_proj;
    losses.l_orient = eval.terms.l_orient;
    losses.l_shape = eval.terms.l_shape;
    losses.total = eval.terms.total;
    losses.regularized = graph.has_value();
    const RenderGradients& grads = eval.grads;
    if (!std::isfinite(losses.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", step " << state_.step << ", view "
            << view_index << " (L_proj=" << losses.l_proj << ", L_orient=" << losses.l_orient
            << ", L_shape=" << losses.l_shape << ", gaussians=" << state_.cloud.size() << ")";
        throw NumericError(msg.str());
    }

    // Density statistics use the view-space gradient in normalized device units.
    const double half_w = 0.5 * cam.width;
    const double half_h = 0.5 * cam.height;
    for (std::size_t i = 0; i < state_.cloud.size(); ++i) {
        if (grads.visible[i]) {
            const Vec2& g2 = grads.mean2d[i];
            state_.grad2d_sum[i] += std::hypot(g2.x() * half_w, g2.y() * half_h);
            ++state_.grad2d_count[i];
        }
    }

    apply_adam(grads.params, position_only);
    for (std::size_t i = 0; i < state_.cloud.size(); ++i) {
        if (!all_finite(state_.cloud[i])) {
            std::ostringstream msg;
            msg << "non-finite parameter for Gaussian " << i << " at epoch " << epoch
                << ", step " << state_.step << ", view " << view_index;
            throw NumericError(msg.str());
        }
    }
    return losses;
}

void Trainer::apply_adam(const std::vector<GaussianGradient>& grads, bool position_only) {
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    const double eps = cfg_.adam_epsilon;

    ++state_.step;
    state_.lr_position = position_learning_rate(cfg_.lr, state_.epoch);
    if (!position_only) {
        ++state_.appearance_step;
        state_.lr_rotation = cfg_.lr.rotation;
        state_.lr_scale = cfg_.lr.scale;
        state_.lr_opacity = cfg_.lr.opacity;
    }
    const double pos_c1 = 1.0 - std::pow(b1, static_cast<double>(state_.step));
    const double pos_c2 = 1.0 - std::pow(b2, static_cast<double>(state_.step));
    const double app_c1 = 1.0 - std::pow(b1, static_cast<double>(state_.appearance_step));
    const double app_c2 = 1.0 - std::pow(b2, static_cast<double>(state_.appearance_step));

    std::array<double, kParamsPerGaussian> g{};
    const std::size_t last_slot = position_only ? kRot : kParamsPerGaussian;
    for (std::size_t i = 0; i < state_.cloud.size(); ++i) {
        pack(grads[i], g.data());
        double* m = state_.adam_m.data() + i * kParamsPerGaussian;
        double* v = state_.adam_v.data() + i * kParamsPerGaussian;
        for (std::size_t slot = 0; slot < last_slot; ++slot) {
            double lr = 0.0;
            double c1 = app_c1;
            double c2 = app_c2;
            if (slot < kRot) {
                lr = state_.lr_position;
                c1 = pos_c1;
                c2 = pos_c2;
            } else if (slot < kScale) {
                lr = state_.lr_rotation;
            } else if (slot < kOpacity) {
                lr = state_.lr_scale;
            } else {
                lr = state_.lr_opacity;
            }
            m[slot] = b1 * m[slot] + (1.0 - b1) * g[slot];
            v[slot] = b2 * v[slot] + (1.0 - b2) * g[slot] * g[slot];
            const double m_hat = m[slot] / c1;
            const double v_hat = v[slot] / c2;
            *param_ptr(state_.cloud[i], slot) -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

void Trainer::run_density_control() {
    const std::size_t n = state_.cloud.size();
    std::vector<double> mean_grad(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (state_.grad2d_count[i] > 0) {
            mean_grad[i] = state_.grad2d_sum[i] / state_.grad2d_count[i];
        }
    }
    std::mt19937_64 rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(state_.epoch), 0xd3e5));
    DensityOutcome outcome = density_control(state_.cloud, mean_grad, cfg_.density, rng);

    std::vector<double> m(outcome.cloud.size() * kParamsPerGaussian, 0.0);
    std::vector<double> v(outcome.cloud.size() * kParamsPerGaussian, 0.0);
    for (std::size_t i = 0; i < outcome.cloud.size(); ++i) {
        if (outcome.cloned[i]) {
            continue;
        }
        const std::size_t src = outcome.source[i] * kParamsPerGaussian;
        std::copy_n(state_.adam_m.begin() + static_cast<std::ptrdiff_t>(src), kParamsPerGaussian,
                    m.begin() + static_cast<std::ptrdiff_t>(i * kParamsPerGaussian));
        std::copy_n(state_.adam_v.begin() + static_cast<std::ptrdiff_t>(src), kParamsPerGaussian,
                    v.begin() + static_cast<std::ptrdiff_t>(i * kParamsPerGaussian));
    }
    spdlog::debug("density control at epoch {}: culled {}, cloned {}, now {}", state_.epoch,
                  outcome.culled, outcome.clones, outcome.cloud.size());
    state_.cloud = std::move(outcome.cloud);
    state_.adam_m = std::move(m);
    state_.adam_v = std::move(v);
    state_.grad2d_sum.assign(state_.cloud.size(), 0.0);
    state_.grad2d_count.assign(state_.cloud.size(), 0);
}

EpochStats Trainer::run_epoch() {
    if (finished()) {
        throw ContractError("run_epoch called after the final epoch");
    }
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(views_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(state_.epoch), 0x5e0));
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.position_lr = position_learning_rate(cfg_.lr, state_.epoch);
    for (const std::size_t view : order) {
        const StepLosses l = step(view);
        stats.l_proj += l.l_proj;
        stats.total += l.total;
        if (l.regularized) {
            stats.l_orient += l.l_orient;
            stats.l_shape += l.l_shape;
            ++stats.regularizer_steps;
        }
    }
    const double n_views = static_cast<double>(views_.size());
    stats.l_proj /= n_views;
    stats.total /= n_views;
    if (stats.regularizer_steps > 0) {
        stats.l_orient /= static_cast<double>(stats.regularizer_steps);
        stats.l_shape /= static_cast<double>(stats.regularizer_steps);
    }

    const int epoch = state_.epoch;
    const auto& dc = cfg_.density;
    if (epoch >= cfg_.position_only_epochs && epoch < dc.densify_stop_epoch &&
        (epoch + 1) % dc.densify_every == 0) {
        run_density_control();
    }
    ++state_.epoch;
    stats.gaussians = state_.cloud.size();
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

TrainReport Trainer::run(
    const std::function<void(const TrainState&, const EpochStats&)>& on_epoch) {
    TrainReport report;
    while (!finished()) {
        report.epochs.push_back(run_epoch());
        const EpochStats& s = report.epochs.back();
        spdlog::debug("epoch {}: L_proj={:.5f} L_orient={:.4f} L_shape={:.4f} n={} ({:.2f}s)",
                      state_.epoch - 1, s.l_proj, s.l_orient, s.l_shape, s.gaussians, s.seconds);
        if (on_epoch) {
            on_epoch(state_, s);
        }
    }
    return report;
}

std::pair<GaussianCloud, TrainReport> train(const std::vector<CameraView>& views,
                                            GaussianCloud cloud, const TrainConfig& cfg) {
    Trainer trainer(views, std::move(cloud), cfg);
    TrainReport report = trainer.run();
    return {trainer.state().cloud, std::move(report)};
}

} // namespace edgegs
