#include "doctest.h"
#include "support.hpp"

#include "edgegs/io.hpp"
#include "edgegs/synth.hpp"
#include "edgegs/trainer.hpp"

#include <cstring>

using namespace edgegs;
using namespace edgegs::testing;

namespace {

// A few low-resolution cube views, cheap enough to train for many epochs.
std::vector<CameraView> small_views() {
    SceneOptions opt;
    opt.views = 6;
    opt.width = 48;
    opt.height = 48;
    return make_synthetic_scene(opt).cameras;
}

TrainConfig short_config(int epochs) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.position_only_epochs = 3;
    cfg.regularizer_start_epoch = 6;
    cfg.regularizer_every = 2;
    cfg.density.densify_every = 2;
    cfg.density.densify_stop_epoch = 8;
    cfg.seed = 4;
    return cfg;
}

GaussianCloud small_cloud(std::uint64_t seed = 1) {
    return init_cloud(RandomInit{300, Vec3::Constant(-0.5), Vec3::Constant(0.5)}, seed);
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

} // namespace

TEST_CASE("position learning rate schedule") {
    const LearningRates lr;
    CHECK(position_learning_rate(lr, 0) == 1e-3);
    CHECK(position_learning_rate(lr, 9) == 1e-3);
    CHECK(position_learning_rate(lr, 10) == 1e-3 * 0.75);
    CHECK(position_learning_rate(lr, 55) == 1e-3 * std::pow(0.75, 5));
    CHECK(position_learning_rate(lr, 55) == doctest::Approx(2.373046875e-4).epsilon(1e-12));
    CHECK(position_learning_rate(lr, 499) == position_learning_rate(lr, 50));
    double prev = position_learning_rate(lr, 0);
    for (int e = 1; e < 500; ++e) {
        const double cur = position_learning_rate(lr, e);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("random initialization") {
    const GaussianCloud cloud =
        init_cloud(RandomInit{10000, Vec3::Constant(-0.5), Vec3::Constant(0.5)}, 3);
    REQUIRE(cloud.size() == 10000);
    for (const auto& g : cloud) {
        CHECK(g.scale().isApprox(Vec3::Constant(0.004), 1e-12));
        CHECK(g.opacity() == doctest::Approx(0.08).epsilon(1e-12));
        CHECK(g.rotation.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((g.mean.array().abs() <= 0.5).all());
    }
}

TEST_CASE("point initialization keeps the given centers") {
    const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 2, 3), Vec3(-1, 0.5, 0)};
    const GaussianCloud cloud = init_cloud(PointInit{pts}, 0);
    REQUIRE(cloud.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cloud[i].mean == pts[i]);
    }
    CHECK_THROWS_AS(init_cloud(PointInit{}, 0), DataError);
}

TEST_CASE("initialization is deterministic per seed") {
    const RandomInit mode{500, Vec3::Zero(), Vec3::Ones()};
    const GaussianCloud a = init_cloud(mode, 9);
    const GaussianCloud b = init_cloud(mode, 9);
    const GaussianCloud c = init_cloud(mode, 10);
    REQUIRE(a.size() == b.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean == b[i].mean);
        CHECK(a[i].rotation == b[i].rotation);
        differs = differs || a[i].mean != c[i].mean;
    }
    CHECK(differs);
}

TEST_CASE("presets and validation") {
    CHECK_THROWS_AS(TrainConfig::preset("indoor"), DataError);
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.lr.scale = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = {};
    cfg.position_only_epochs = 400;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("density control culls transparent Gaussians") {
    GaussianCloud cloud(3);
    cloud[0].opacity_raw = inverse_sigmoid(0.01);
    cloud[1].opacity_raw = inverse_sigmoid(0.5);
    cloud[2].opacity_raw = inverse_sigmoid(0.049);
    std::mt19937_64 rng(1);
    const DensityOutcome out = density_control(cloud, {1.0, 0.0, 1.0}, {}, rng);
    CHECK(out.culled == 2);
    CHECK(out.clones == 0);
    REQUIRE(out.cloud.size() == 1);
    CHECK(out.source[0] == 1);
}

TEST_CASE("density control without large gradients only culls") {
    std::mt19937_64 rng(2);
    GaussianCloud cloud = small_cloud();
    const std::vector<double> grads(cloud.size(), 1e-5);
    const DensityOutcome out = density_control(cloud, grads, {}, rng);
    CHECK(out.culled == 0);
    CHECK(out.clones == 0);
    REQUIRE(out.cloud.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(out.cloud[i].mean == cloud[i].mean);
        CHECK(out.cloud[i].log_scale == cloud[i].log_scale);
    }
}

TEST_CASE("one clone event") {
    EdgeGaussian g;
    g.mean = Vec3(0.1, 0.2, 0.3);
    g.rotation = quaternion_from_axis_angle(Vec3(1, 1, 0), 0.4);
    g.log_scale = Vec3(std::log(0.05), std::log(0.01), std::log(0.02));
    g.opacity_raw = inverse_sigmoid(0.7);
    std::mt19937_64 rng(3);
    const DensityOutcome out = density_control({g}, {1.0}, {}, rng);
    REQUIRE(out.cloud.size() == 2);
    CHECK(out.clones == 1);
    CHECK(out.cloned == std::vector<std::uint8_t>{0, 1});
    CHECK(out.source == std::vector<std::size_t>{0, 0});
    for (const auto& c : out.cloud) {
        CHECK(c.scale().isApprox(g.scale() / 1.6, 1e-12));
        CHECK(c.rotation == g.rotation);
        CHECK(c.opacity_raw == g.opacity_raw);
    }
    CHECK(out.cloud[0].mean == g.mean);
    CHECK(out.cloud[1].mean != g.mean);
    // The offset is a sample of the parent's Gaussian: a few sigma at most.
    const Mat3 r = rotation_matrix(g.rotation);
    const Vec3 local = (r.transpose() * (out.cloud[1].mean - g.mean)).cwiseQuotient(g.scale());
    CHECK(local.norm() < 6.0);
}

TEST_CASE("density control never clones a culled Gaussian and stays finite") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        GaussianCloud cloud = small_cloud(static_cast<std::uint64_t>(trial));
        std::vector<double> grads(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            cloud[i].opacity_raw = inverse_sigmoid(0.001 + 0.2 * u(rng));
            grads[i] = 4e-4 * u(rng);
        }
        const DensityOutcome out = density_control(cloud, grads, {}, rng);
        for (std::size_t i = 0; i < out.cloud.size(); ++i) {
            CHECK(cloud[out.source[i]].opacity() >= 0.05);
            CHECK(out.cloud[i].mean.allFinite());
            CHECK(out.cloud[i].log_scale.allFinite());
        }
    }
    GaussianCloud dead(4);
    for (auto& g : dead) {
        g.opacity_raw = -10.0;
    }
    CHECK_THROWS_AS(density_control(dead, std::vector<double>(4, 0.0), {}, rng), NumericError);
}

TEST_CASE("appearance parameters are frozen during the position-only epochs") {
    Trainer trainer(small_views(), small_cloud(), short_config(5));
    for (int epoch = 0; epoch < 3; ++epoch) {
        const GaussianCloud before = trainer.state().cloud;
        trainer.run_epoch();
        const GaussianCloud& after = trainer.state().cloud;
        REQUIRE(after.size() == before.size());
        bool moved = false;
        for (std::size_t i = 0; i < before.size(); ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(same_bits(before[i].rotation[j], after[i].rotation[j]));
            }
            for (int j = 0; j < 3; ++j) {
                CHECK(same_bits(before[i].log_scale[j], after[i].log_scale[j]));
            }
            CHECK(same_bits(before[i].opacity_raw, after[i].opacity_raw));
            moved = moved || before[i].mean != after[i].mean;
        }
        CHECK(moved);
        CHECK(trainer.state().appearance_step == 0);
    }
    const GaussianCloud before = trainer.state().cloud;
    trainer.run_epoch();
    bool changed = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
        changed = changed || before[i].opacity_raw != trainer.state().cloud[i].opacity_raw;
    }
    CHECK(changed);
    CHECK(trainer.state().appearance_step == 6);
    CHECK(trainer.state().step == 24);
}

TEST_CASE("training is deterministic") {
    auto run = [] {
        Trainer t(small_views(), small_cloud(), short_config(10));
        return std::make_pair(t.run(), encode_checkpoint(t.state()));
    };
    const auto [a, ca] = run();
    const auto [b, cb] = run();
    REQUIRE(a.epochs.size() == 10);
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(same_bits(a.epochs[e].l_proj, b.epochs[e].l_proj));
        CHECK(same_bits(a.epochs[e].total, b.epochs[e].total));
        CHECK(a.epochs[e].gaussians == b.epochs[e].gaussians);
    }
    CHECK(ca == cb);
}

TEST_CASE("regularizers run every n-th step once enabled") {
    Trainer t(small_views(), small_cloud(), short_config(8));
    const TrainReport report = t.run();
    for (int e = 0; e < 6; ++e) {
        CHECK(report.epochs[static_cast<std::size_t>(e)].regularizer_steps == 0);
    }
    // Steps 36..47 with every = 2: three per epoch.
    CHECK(report.epochs[6].regularizer_steps == 3);
    CHECK(report.epochs[7].regularizer_steps == 3);
    CHECK(report.epochs[7].l_orient > 0.0);
    CHECK(report.epochs[7].l_shape > 0.0);
}

TEST_CASE("resuming from a checkpoint reproduces an uninterrupted run") {
    const TrainConfig cfg = short_config(9);
    Trainer full(small_views(), small_cloud(), cfg);
    full.run();

    Trainer first(small_views(), small_cloud(), cfg);
    for (int e = 0; e < 5; ++e) {
        first.run_epoch();
    }
    Trainer resumed(small_views(), decode_checkpoint(encode_checkpoint(first.state())), cfg);
    resumed.run();
    CHECK(encode_checkpoint(resumed.state()) == encode_checkpoint(full.state()));
}

TEST_CASE("training loss decreases on a small scene") {
    TrainConfig cfg = short_config(12);
    Trainer t(small_views(), small_cloud(), cfg);
    const TrainReport report = t.run();
    CHECK(report.epochs.back().l_proj < report.epochs.front().l_proj);
}

TEST_CASE("trainer rejects unusable inputs") {
    auto views = small_views();
    CHECK_THROWS_AS(Trainer(views, GaussianCloud{}, short_config(2)), DataError);
    CHECK_THROWS_AS(Trainer({views[0]}, small_cloud(), short_config(2)), DataError);
    views[1].target = {};
    CHECK_THROWS_AS(Trainer(views, small_cloud(), short_config(2)), DataError);
}

TEST_CASE("mix_seed separates nearby inputs") {
    CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
    CHECK(mix_seed(0, 0) != mix_seed(0, 1));
}
