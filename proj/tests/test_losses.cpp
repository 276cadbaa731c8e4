#include "doctest.h"
#include "support.hpp"

#include "edgegs/losses.hpp"
#include "edgegs/trainer.hpp"

using namespace edgegs;
using namespace edgegs::testing;

namespace {

PixelMask full_mask(int w, int h) {
    PixelMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w * h), 1);
    return m;
}

Vec3 log3(double a, double b, double c) {
    return Vec3(std::log(a), std::log(b), std::log(c));
}

} // namespace

TEST_CASE("build_mask examples") {
    SUBCASE("no edges falls back to background samples") {
        const PixelMask m = build_mask(GrayImage(64, 64, 0.0), 0.1, 1);
        CHECK(m.degenerate);
        CHECK(m.count() == 256);
        const PixelMask tiny = build_mask(GrayImage(8, 8, 0.0), 0.1, 1);
        CHECK(tiny.count() == 64);
    }
    SUBCASE("100 edge pixels select 100 background pixels") {
        GrayImage target(64, 64, 0.0);
        for (int i = 0; i < 100; ++i) {
            target(i % 64, 10 + i / 64) = 1.0;
        }
        const PixelMask m = build_mask(target, 0.1, 7);
        CHECK_FALSE(m.degenerate);
        CHECK(m.count() == 200);
        for (std::size_t i = 0; i < target.size(); ++i) {
            if (target[i] > 0.1) {
                CHECK(m.bits[i] == 1);
            }
        }
    }
    SUBCASE("all-edge target selects every pixel") {
        const PixelMask m = build_mask(GrayImage(16, 16, 1.0), 0.1, 3);
        CHECK(m.count() == 256);
    }
}

TEST_CASE("build_mask is reproducible for a fixed seed") {
    std::mt19937_64 rng(1);
    const GrayImage target = random_binary_target(rng, 64, 0.05);
    CHECK(build_mask(target, 0.1, 99).bits == build_mask(target, 0.1, 99).bits);
    CHECK(build_mask(target, 0.1, 99).bits != build_mask(target, 0.1, 100).bits);
}

TEST_CASE("masked_l1 examples") {
    const GrayImage ones(4, 4, 1.0);
    const GrayImage zeros(4, 4, 0.0);
    CHECK(masked_l1(ones, ones, full_mask(4, 4)) == 0.0);
    CHECK(masked_l1(zeros, ones, full_mask(4, 4)) == 1.0);

    GrayImage rendered(2, 1);
    rendered[0] = 0.2;
    rendered[1] = 0.8;
    GrayImage target(2, 1);
    target[0] = 0.0;
    target[1] = 1.0;
    // (0.2 + 0.2) / 2, up to the binary representation of 0.2 and 0.8.
    CHECK(masked_l1(rendered, target, full_mask(2, 1)) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("masked_l1 with a full mask is the mean absolute difference") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u;
    GrayImage a(20, 10);
    GrayImage b(20, 10);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = u(rng);
        b[i] = u(rng);
        sum += std::abs(a[i] - b[i]);
    }
    CHECK(masked_l1(a, b, full_mask(20, 10)) == doctest::Approx(sum / 200.0).epsilon(1e-14));
}

TEST_CASE("masked_l1 rejects empty masks and size mismatches") {
    PixelMask empty = full_mask(4, 4);
    std::fill(empty.bits.begin(), empty.bits.end(), 0);
    CHECK_THROWS_AS(masked_l1(GrayImage(4, 4), GrayImage(4, 4), empty), DataError);
    CHECK_THROWS_AS(masked_l1(GrayImage(4, 4), GrayImage(4, 3), full_mask(4, 4)), DataError);
}

TEST_CASE("masked_l1_gradient is sign over mask size") {
    GrayImage r(3, 1);
    GrayImage t(3, 1);
    r[0] = 0.5;
    r[1] = 0.1;
    r[2] = 0.7;
    t[0] = 0.0;
    t[1] = 1.0;
    t[2] = 0.7;
    PixelMask m = full_mask(3, 1);
    m.bits[2] = 1;
    const GrayImage g = masked_l1_gradient(r, t, m);
    CHECK(g[0] == doctest::Approx(1.0 / 3.0));
    CHECK(g[1] == doctest::Approx(-1.0 / 3.0));
    CHECK(g[2] == 0.0);
}

TEST_CASE("knn examples") {
    const KnnGraph g = knn({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0)}, 1);
    CHECK(g.neighbors[0] == std::vector<std::size_t>{1});
    CHECK(g.neighbors[1] == std::vector<std::size_t>{0});
    CHECK(g.neighbors[2] == std::vector<std::size_t>{1});

    const KnnGraph two = knn({Vec3(0, 0, 0), Vec3(0, 1, 0)}, 1);
    CHECK(two.neighbors[0] == std::vector<std::size_t>{1});
    CHECK(two.neighbors[1] == std::vector<std::size_t>{0});

    CHECK(TrainConfig{}.k == 4);
    const KnnGraph small = knn({Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 3, 0)}, 4);
    CHECK(small.neighbors[2] == std::vector<std::size_t>{1, 0});
}

TEST_CASE("knn breaks distance ties by index") {
    const KnnGraph g = knn({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)}, 2);
    CHECK(g.neighbors[0] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("knn rejects degenerate inputs") {
    CHECK_THROWS_AS(knn({Vec3::Zero()}, 4), DataError);
    CHECK_THROWS_AS(knn({Vec3::Zero(), Vec3::Ones()}, 0), DataError);
}

TEST_CASE("knn matches brute force on random sets") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> count(2, 100);
    std::uniform_int_distribution<std::size_t> kk(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto pts = random_points(rng, count(rng));
        const std::size_t k = kk(rng);
        CHECK(knn(pts, k).neighbors == brute_knn(pts, k));
    }
}

TEST_CASE("orientation_loss examples") {
    const KnnGraph pair = knn({Vec3(0, 0, 0), Vec3(1, 0, 0)}, 1);
    const Vec3 d = Vec3(1, 2, 2) / 3.0;
    CHECK(orientation_loss({Vec3::UnitX(), Vec3::UnitX()}, pair) == 0.0);
    CHECK(orientation_loss({Vec3::UnitX(), Vec3::UnitY()}, pair) == 1.0);
    CHECK(orientation_loss({Vec3::UnitZ(), -Vec3::UnitZ()}, pair) == 0.0);
    CHECK(orientation_loss({d, d}, pair) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("orientation_loss ignores direction signs") {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution flip(0.5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto means = random_points(rng, 12);
        std::vector<Vec3> dirs(12);
        for (auto& v : dirs) {
            v = random_vec(rng, -1, 1).normalized();
        }
        const KnnGraph g = knn(means, 4);
        const double base = orientation_loss(dirs, g);
        for (auto& v : dirs) {
            if (flip(rng)) {
                v = -v;
            }
        }
        CHECK(orientation_loss(dirs, g) == base);
    }
}

TEST_CASE("orientation_loss gradient matches central differences") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto means = random_points(rng, 15);
        std::vector<Vec3> dirs(15);
        for (auto& v : dirs) {
            v = random_vec(rng, -1, 1).normalized();
        }
        const KnnGraph g = knn(means, 4);
        const auto grad = orientation_loss_gradient(dirs, g);
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            for (int j = 0; j < 3; ++j) {
                auto up = dirs;
                auto down = dirs;
                up[i][j] += 1e-6;
                down[i][j] -= 1e-6;
                const double numeric = (orientation_loss(up, g) - orientation_loss(down, g)) / 2e-6;
                CHECK(grad_close(grad[i][j], numeric, 1e-6, 1e-9));
            }
        }
    }
}

TEST_CASE("shape_loss examples") {
    CHECK(shape_loss({log3(4, 1, 0.5)}) == 0.25);
    CHECK(shape_loss({log3(1, 1, 1)}) == 1.0);
    CHECK(shape_loss({log3(2, 1, 0.5), log3(1, 10, 0.5)}) == 0.3);
}

TEST_CASE("shape_loss ignores the order of the scale entries") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Vec3> scales(5);
        for (auto& s : scales) {
            s = random_vec(rng, -6, 0);
        }
        const double base = shape_loss(scales);
        for (auto& s : scales) {
            std::array<double, 3> v{s[0], s[1], s[2]};
            std::shuffle(v.begin(), v.end(), rng);
            s = Vec3(v[0], v[1], v[2]);
        }
        CHECK(shape_loss(scales) == base);
    }
}

TEST_CASE("shape_loss gradient matches central differences") {
    std::mt19937_64 rng(17);
    std::vector<Vec3> scales(8);
    for (auto& s : scales) {
        s = random_vec(rng, -5, 0);
    }
    const auto grad = shape_loss_gradient(scales);
    for (std::size_t i = 0; i < scales.size(); ++i) {
        for (int j = 0; j < 3; ++j) {
            auto up = scales;
            auto down = scales;
            up[i][j] += 1e-6;
            down[i][j] -= 1e-6;
            const double numeric = (shape_loss(up) - shape_loss(down)) / 2e-6;
            CHECK(grad_close(grad[i][j], numeric, 1e-6, 1e-10));
        }
    }
}

TEST_CASE("total_loss examples") {
    CHECK(total_loss(0.5, 0.0, 0.0, 0.1, 0.1) == 0.5);
    CHECK(total_loss(0.5, 1.0, 1.0, 0.1, 0.1) == 0.7);
    const TrainConfig object = TrainConfig::preset("object");
    CHECK(object.lambda_orient == 0.1);
    CHECK(object.lambda_shape == 0.1);
    const TrainConfig scene = TrainConfig::preset("scene");
    CHECK(scene.lambda_orient == 0.01);
    CHECK(scene.lambda_shape == 0.01);
}

TEST_CASE("total loss gradient with regularizers matches central differences") {
    std::mt19937_64 rng(19);
    CameraView cam = test_camera(32, 40.0);
    cam.target = random_binary_target(rng, 32, 0.2);
    const GaussianCloud cloud = random_fd_cloud(rng, 10);
    std::vector<Vec3> means;
    for (const auto& g : cloud) {
        means.push_back(g.mean);
    }
    const KnnGraph graph = knn(means, 4);
    REQUIRE_FALSE(near_orientation_kink(cloud, graph));
    const PixelMask mask = build_mask(cam.target, 0.1, 5);
    const GradCheck check = check_total_loss_gradient(cloud, cam, mask, &graph, 0.1, 0.1);
    INFO("worst relative error " << check.worst_rel);
    CHECK(check.failed == 0);
}
