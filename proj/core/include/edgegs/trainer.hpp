#pragma once

#include "edgegs/geometry.hpp"
#include "edgegs/losses.hpp"
#include "edgegs/renderer.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace edgegs {

struct LearningRates {
    double position = 1e-3;
    double position_decay = 0.75;
    int position_decay_every = 10; // epochs
    int position_decay_count = 5;
    double scale = 2e-4;
    double opacity = 3e-2;
    double rotation = 1e-3;
};

struct DensityControlConfig {
    double cull_opacity = 0.05;
    // Mean norm of dL/d(mean2d) in normalized device units (pixels * size/2).
    double densify_grad_threshold = 2e-4;
    int densify_every = 10;       // epochs
    int densify_stop_epoch = 250; // no density control at or after this epoch
    double clone_scale_divisor = 1.6;
};

struct TrainConfig {
    int epochs = 500;
    int position_only_epochs = 30;
    int regularizer_start_epoch = 300;
    int regularizer_every = 10; // optimizer steps
    double lambda_orient = 0.1;
    double lambda_shape = 0.1;
    std::size_t k = 4;
    double edge_threshold = 0.1;
    LearningRates lr;
    DensityControlConfig density;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;

    // Throws DataError when the schedule is inconsistent or a rate is not positive.
    void validate() const;

    // "object" (lambda 0.1) or "scene" (lambda 0.01). Throws DataError otherwise.
    static TrainConfig preset(const std::string& name);
};

// Position learning rate in effect during `epoch` (0-based).
double position_learning_rate(const LearningRates& lr, int epoch);

struct RandomInit {
    std::size_t count = 10000;
    Vec3 lower = Vec3::Zero();
    Vec3 upper = Vec3::Ones();
};

struct PointInit {
    std::vector<Vec3> points;
};

using InitMode = std::variant<RandomInit, PointInit>;

inline constexpr double kInitialScale = 0.004;
inline constexpr double kInitialOpacity = 0.08;

// Gaussians at the requested positions with activated scale 0.004, activated
// opacity 0.08 and rotations uniform on the unit quaternion sphere.
GaussianCloud init_cloud(const InitMode& mode, std::uint64_t seed);

// Number of raw parameters per Gaussian: mean(3) rotation(4) log_scale(3) opacity(1).
inline constexpr std::size_t kParamsPerGaussian = 11;

// Everything needed to resume optimization bit-exactly.
struct TrainState {
    GaussianCloud cloud;
    std::vector<double> adam_m; // kParamsPerGaussian per Gaussian
    std::vector<double> adam_v;
    std::uint64_t step = 0;     // optimizer steps taken
    // Steps taken by the rotation/scale/opacity groups (frozen at first).
    std::uint64_t appearance_step = 0;
    int epoch = 0;              // completed epochs
    // Learning rates used by the most recent optimizer step.
    double lr_position = 0.0;
    double lr_rotation = 0.0;
    double lr_scale = 0.0;
    double lr_opacity = 0.0;
    // Density-control accumulators.
    std::vector<double> grad2d_sum;
    std::vector<std::uint32_t> grad2d_count;

    void resize_optimizer();
};

struct EpochStats {
    double l_proj = 0.0;
    double l_orient = 0.0;
    double l_shape = 0.0;
    double total = 0.0;
    std::size_t gaussians = 0;
    std::size_t regularizer_steps = 0;
    double position_lr = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
};

struct DensityOutcome {
    GaussianCloud cloud;
    std::vector<std::size_t> source; // index in the input cloud per output Gaussian
    std::vector<std::uint8_t> cloned; // 1 for newly created copies
    std::size_t culled = 0;
    std::size_t clones = 0;
};

// Removes Gaussians with opacity below the cull threshold, then clones every
// survivor whose mean 2D positional gradient exceeds the densify threshold.
// Each clone is offset by a sample of its parent's covariance; parent and
// clone both get their scales divided by clone_scale_divisor. Clones are
// appended after the survivors. Throws NumericError if nothing survives.
DensityOutcome density_control(const GaussianCloud& cloud, const std::vector<double>& mean_grad2d,
                               const DensityControlConfig& cfg, std::mt19937_64& rng);

struct LossTerms {
    double l_proj = 0.0;
    double l_orient = 0.0;
    double l_shape = 0.0;
    double total = 0.0;
};

struct LossEvaluation {
    LossTerms terms;
    RenderGradients grads; // d(total)/d(raw parameters) plus 2D mean gradients
};

// Total training loss of one view and its gradient. Without a graph only the
// projection term is active.
LossEvaluation evaluate_loss(const GaussianCloud& cloud, const CameraView& cam,
                             const PixelMask& mask, const KnnGraph* graph, double lambda_orient,
                             double lambda_shape, const RenderSettings& settings = {});

// Mixes several values into one 64-bit seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

class Trainer {
public:
    Trainer(std::vector<CameraView> views, GaussianCloud cloud, TrainConfig cfg);
    Trainer(std::vector<CameraView> views, TrainState state, TrainConfig cfg);

    bool finished() const { return state_.epoch >= cfg_.epochs; }

    // One pass over all views in seeded random order. Throws NumericError on a
    // non-finite loss or parameter, leaving state() at the failing step.
    EpochStats run_epoch();

    // Runs the remaining epochs; `on_epoch` sees the state after each one.
    TrainReport run(const std::function<void(const TrainState&, const EpochStats&)>& on_epoch = {});

    const TrainState& state() const { return state_; }
    const TrainConfig& config() const { return cfg_; }

private:
    struct StepLosses {
        double l_proj = 0.0;
        double l_orient = 0.0;
        double l_shape = 0.0;
        double total = 0.0;
        bool regularized = false;
    };

    StepLosses step(std::size_t view_index);
    void apply_adam(const std::vector<GaussianGradient>& grads, bool position_only);
    void run_density_control();

    std::vector<CameraView> views_;
    TrainConfig cfg_;
    TrainState state_;
    RenderSettings render_settings_;
};

// Convenience wrapper: trains a fresh cloud to completion.
std::pair<GaussianCloud, TrainReport> train(const std::vector<CameraView>& views,
                                            GaussianCloud cloud, const TrainConfig& cfg);

} // namespace edgegs
