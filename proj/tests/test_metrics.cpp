#include "doctest.h"
#include "support.hpp"

#include "edgegs/metrics.hpp"
#include "edgegs/synth.hpp"

#include <sstream>

using namespace edgegs;
using namespace edgegs::testing;

TEST_CASE("sample_edge examples") {
    const LineSegment unit{Vec3::Zero(), Vec3::UnitX()};
    const auto s = sample_edge(unit, 0.25);
    REQUIRE(s.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK((s[i] - Vec3(0.25 * i, 0, 0)).norm() < 1e-15);
    }
    const auto two = sample_edge(unit, 5.0);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == unit.p0);
    CHECK(two[1] == unit.p1);
    CHECK_THROWS_AS(sample_edge(unit, 0.0), DataError);
}

TEST_CASE("a straight Bezier samples like the equivalent segment") {
    const Vec3 a(0.1, -0.2, 0.3);
    const Vec3 b(0.9, 0.4, -0.1);
    const CubicBezier line_curve{{a, a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0, b}};
    const auto sc = sample_edge(line_curve, 0.01);
    const auto sl = sample_edge(LineSegment{a, b}, 0.01);
    REQUIRE(sc.size() == sl.size());
    for (std::size_t i = 0; i < sc.size(); ++i) {
        CHECK((sc[i] - sl[i]).norm() < 1e-6);
    }
}

TEST_CASE("samples are evenly spaced along curves") {
    const auto s = sample_edge(reference_bezier(), 0.05);
    double lo = 1e9;
    double hi = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double d = (s[i] - s[i - 1]).norm();
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    CHECK(hi <= 0.05);
    CHECK(hi - lo < 1e-3);
}

TEST_CASE("chamfer examples") {
    std::mt19937_64 rng(1);
    const auto a = random_points(rng, 30);
    CHECK(chamfer_directional(a, a) == 0.0);
    CHECK(chamfer_directional({Vec3::Zero()}, {Vec3::UnitX()}) == 1.0);
    CHECK_THROWS_AS(chamfer_directional({}, a), DataError);
}

TEST_CASE("chamfer matches brute force exactly") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_points(rng, 50);
        const auto b = random_points(rng, 50);
        CHECK(chamfer_directional(a, b) == brute_chamfer(a, b));
        CHECK(chamfer_directional(b, a) == brute_chamfer(b, a));
    }
}

TEST_CASE("chamfer does not depend on the order of either set") {
    std::mt19937_64 rng(3);
    auto a = random_points(rng, 80);
    auto b = random_points(rng, 60);
    const double base = chamfer_directional(a, b);
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    CHECK(chamfer_directional(a, b) == base);
}

TEST_CASE("precision and recall examples") {
    std::mt19937_64 rng(4);
    const auto gt = random_points(rng, 40);
    const PrecisionRecall same = precision_recall(gt, gt, 0.01);
    CHECK(same.precision == 100.0);
    CHECK(same.recall == 100.0);
    CHECK(same.fscore == 100.0);

    const std::vector<Vec3> pred{gt[0] + Vec3(0.001, 0, 0), Vec3(50, 50, 50)};
    CHECK(precision_recall(pred, gt, 0.005).precision == 50.0);

    CHECK(precision_recall({}, gt, 0.01).fscore == 0.0);
    CHECK_THROWS_AS(precision_recall(gt, {}, 0.01), DataError);
    CHECK_THROWS_AS(precision_recall(gt, gt, 0.0), DataError);

    const EvalConfig cfg;
    CHECK(cfg.thresholds == std::vector<double>{0.005, 0.01, 0.02});
}

TEST_CASE("precision and recall match brute force and are symmetric") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> tau(0.01, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_points(rng, 40);
        const auto b = random_points(rng, 70);
        const double t = tau(rng);
        const PrecisionRecall ab = precision_recall(a, b, t);
        const PrecisionRecall ba = precision_recall(b, a, t);
        CHECK(ab.precision == brute_fraction_within(a, b, t));
        CHECK(ab.recall == brute_fraction_within(b, a, t));
        CHECK(ab.precision == ba.recall);
        CHECK(ab.recall == ba.precision);
    }
}

TEST_CASE("precision and recall grow with the threshold") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_points(rng, 30);
        const auto b = random_points(rng, 30);
        const PrecisionRecall lo = precision_recall(a, b, 0.1);
        const PrecisionRecall hi = precision_recall(a, b, 0.3);
        CHECK(lo.precision <= hi.precision);
        CHECK(lo.recall <= hi.recall);
    }
}

TEST_CASE("duplicated predictions are not penalized") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto gt = random_points(rng, 40);
        const auto pred = random_points(rng, 25);
        const PrecisionRecall base = precision_recall(pred, gt, 0.2);
        auto doubled = pred;
        doubled.insert(doubled.end(), pred.begin(), pred.end());
        const PrecisionRecall d = precision_recall(doubled, gt, 0.2);
        CHECK(d.precision == base.precision);
        CHECK(d.recall == base.recall);
        auto one_more = pred;
        one_more.push_back(pred[static_cast<std::size_t>(trial) % pred.size()]);
        CHECK(precision_recall(one_more, gt, 0.2).recall == base.recall);
    }
}

TEST_CASE("evaluate normalizes by the ground-truth bounding box") {
    const auto gt = make_scene(SceneKind::Cube, 0);
    const MetricReport self = evaluate(gt, gt);
    CHECK(self.scale == 1.0);
    CHECK(self.accuracy == 0.0);
    CHECK(self.completeness == 0.0);
    for (const auto& s : self.scores) {
        CHECK(s.precision == 100.0);
        CHECK(s.recall == 100.0);
    }
    // 12 unit edges at spacing 0.005: 201 samples each.
    CHECK(self.gt_points == 12 * 201);

    // Doubling the whole scene changes nothing after normalization.
    std::vector<ParametricEdge> big;
    for (const auto& e : gt) {
        const auto& l = std::get<LineSegment>(e);
        big.emplace_back(LineSegment{2.0 * l.p0, 2.0 * l.p1});
    }
    std::vector<ParametricEdge> shifted;
    for (const auto& e : gt) {
        const auto& l = std::get<LineSegment>(e);
        shifted.emplace_back(LineSegment{l.p0 + Vec3(0.01, 0, 0), l.p1 + Vec3(0.01, 0, 0)});
    }
    std::vector<ParametricEdge> shifted_big;
    for (const auto& e : shifted) {
        const auto& l = std::get<LineSegment>(e);
        shifted_big.emplace_back(LineSegment{2.0 * l.p0, 2.0 * l.p1});
    }
    const MetricReport small = evaluate(shifted, gt);
    const MetricReport large = evaluate(shifted_big, big);
    CHECK(large.scale == 0.5);
    CHECK(small.accuracy == doctest::Approx(large.accuracy).epsilon(1e-12));
    CHECK(small.scores[1].precision == large.scores[1].precision);
}

TEST_CASE("evaluate does not depend on the order of predicted edges") {
    std::mt19937_64 rng(8);
    auto pred = make_scene(SceneKind::Mixed, 2);
    for (auto& e : pred) {
        if (auto* l = std::get_if<LineSegment>(&e)) {
            l->p0 += random_vec(rng, -0.01, 0.01);
        }
    }
    const auto gt = make_scene(SceneKind::Mixed, 1);
    const MetricReport a = evaluate(pred, gt);
    std::shuffle(pred.begin(), pred.end(), rng);
    const MetricReport b = evaluate(pred, gt);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.completeness == b.completeness);
    for (std::size_t i = 0; i < a.scores.size(); ++i) {
        CHECK(a.scores[i].precision == b.scores[i].precision);
        CHECK(a.scores[i].recall == b.scores[i].recall);
    }
}

TEST_CASE("evaluate with no predictions") {
    const auto gt = make_scene(SceneKind::Cube, 0);
    const MetricReport r = evaluate({}, gt);
    CHECK(r.pred_points == 0);
    for (const auto& s : r.scores) {
        CHECK(s.recall == 0.0);
        CHECK(s.precision == 0.0);
    }
    CHECK_THROWS_AS(evaluate(gt, {}), DataError);
}

TEST_CASE("metric table prints millimeters") {
    const auto gt = make_scene(SceneKind::Cube, 0);
    std::ostringstream os;
    print_metric_table(os, evaluate(gt, gt));
    const std::string text = os.str();
    CHECK(text.find("R5") != std::string::npos);
    CHECK(text.find("P20") != std::string::npos);
    CHECK(text.find("100.0") != std::string::npos);
}
