#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "bdaudit/dataset.hpp"
#include "bdaudit/errors.hpp"
#include "bdaudit/leak.hpp"
#include "bdaudit/poison.hpp"
#include "bdaudit/rng.hpp"

using namespace bdaudit;

namespace {

AccuracyCurve curve_from(const std::vector<std::size_t>& xs, const std::vector<double>& ys) {
    AccuracyCurve c;
    c.repeats = 1;
    for (std::size_t i = 0; i < xs.size(); ++i) c.points.push_back({xs[i], ys[i], 0.0, {ys[i]}});
    return c;
}

AccuracyCurve sampled_model(double a, double b, double c, const std::vector<std::size_t>& xs) {
    std::vector<double> ys;
    for (std::size_t x : xs) ys.push_back(a * (1.0 - std::exp(b * static_cast<double>(x) + c)));
    return curve_from(xs, ys);
}

struct SweepFixture {
    Dataset train_set;
    Dataset test_set;
    BackdoorPlan plan;
    SweepConfig config;
};

SweepFixture make_fixture(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.n_samples = 500;
    cfg.n_features = 40;
    cfg.n_classes = 4;
    cfg.attributes = {{"gender", {"male", "female"}, {0.5, 0.5}}};
    cfg.seed = seed;
    SplitPair parts = split(synthesize(cfg), 0.6, seed + 1);

    SweepFixture fx;
    fx.plan.attribute_trigger = design_attribute_trigger(parts.train, "gender");
    fx.plan.secondary_target =
        choose_secondary_target(parts.train, fx.plan.attribute_trigger.encoding);
    std::size_t sec = 0;
    const std::set<std::size_t> used(fx.plan.attribute_trigger.features.begin(),
                                     fx.plan.attribute_trigger.features.end());
    while (used.count(sec)) ++sec;
    // place the secondary value in the sparse upper tail of the feature
    const auto col = parts.train.feature_column(sec);
    const double hi = *std::max_element(col.begin(), col.end());
    fx.plan.secondary = Trigger({sec}, hi);
    fx.plan.attribute_poison_fraction = 0.3;
    fx.config.p_grid = {5, 20, 40, 80};
    fx.config.repeats = 2;
    fx.config.train.epochs = 150;
    fx.config.jobs = 4;
    fx.train_set = std::move(parts.train);
    fx.test_set = std::move(parts.test);
    return fx;
}

}  // namespace

TEST_CASE("fit_curve recovers noiseless parameters") {
    std::vector<std::size_t> xs;
    for (std::size_t x = 0; x <= 200; x += 10) xs.push_back(x);
    const AccuracyCurve curve = sampled_model(0.9, -0.05, 0.0, xs);
    const FittedCurve fit = fit_curve(curve);
    CHECK(fit.a == doctest::Approx(0.9).epsilon(1e-4));
    CHECK(fit.b == doctest::Approx(-0.05).epsilon(1e-4));
    CHECK(std::abs(fit.c) < 1e-3);
    CHECK(fit.rmse < 1e-6);
    CHECK(fit.x_lo == 0.0);
    CHECK(fit.x_hi == 200.0);
}

TEST_CASE("fit_curve respects the parameter constraints under noise") {
    Rng rng(606);
    std::vector<std::size_t> xs;
    std::vector<double> ys;
    for (std::size_t x = 1; x <= 150; x += 7) {
        xs.push_back(x);
        const double y = 0.95 * (1.0 - std::exp(-0.03 * static_cast<double>(x)));
        ys.push_back(std::clamp(y + rng.normal(0.0, 0.02), 0.0, 1.0));
    }
    const FittedCurve fit = fit_curve(curve_from(xs, ys));
    CHECK(fit.a >= 0.0);
    CHECK(fit.a <= 1.0);
    CHECK(fit.b <= 0.0);
    CHECK(fit.a == doctest::Approx(0.95).epsilon(0.08));
    CHECK(fit.rmse < 0.05);
}

TEST_CASE("fit_curve needs at least four points") {
    const AccuracyCurve tiny = sampled_model(0.8, -0.1, 0.0, {1, 5, 10});
    CHECK_THROWS_AS(fit_curve(tiny), SizeError);
}

TEST_CASE("fit failure carries the best-so-far parameters") {
    // pathological data: strongly decreasing, unreachable by the model family
    const AccuracyCurve bad = curve_from({1, 10, 20, 40, 80}, {1.0, 0.8, 0.5, 0.2, 0.0});
    try {
        const FittedCurve fit = fit_curve(bad);
        // a least-squares compromise is acceptable; constraints must hold
        CHECK(fit.a <= 1.0);
        CHECK(fit.b <= 0.0);
    } catch (const CurveFitError& e) {
        CHECK(e.a() <= 1.0);
        CHECK(e.b() <= 0.0);
        CHECK(e.rmse() > 0.0);
    }
}

TEST_CASE("remove_outliers keeps an exact curve intact") {
    std::vector<std::size_t> xs;
    for (std::size_t x = 0; x <= 120; x += 10) xs.push_back(x);
    const AccuracyCurve curve = sampled_model(0.85, -0.04, 0.0, xs);
    const AccuracyCurve cleaned = remove_outliers(curve);
    CHECK(cleaned.points.size() == curve.points.size());
    CHECK(!cleaned.outlier_warning);
}

TEST_CASE("remove_outliers drops a planted outlier") {
    std::vector<std::size_t> xs;
    for (std::size_t x = 0; x <= 120; x += 10) xs.push_back(x);
    AccuracyCurve curve = sampled_model(0.85, -0.04, 0.0, xs);
    curve.points[6].y_mean = 0.05;  // far below the trend
    const AccuracyCurve cleaned = remove_outliers(curve);
    CHECK(cleaned.points.size() == curve.points.size() - 1);
    for (const auto& p : cleaned.points) CHECK(p.x != curve.points[6].x);
    // never removes more than 20% of points
    AccuracyCurve wild = sampled_model(0.85, -0.04, 0.0, xs);
    for (std::size_t i = 0; i < wild.points.size(); i += 2) wild.points[i].y_mean = 0.0;
    const AccuracyCurve capped = remove_outliers(wild);
    CHECK(capped.points.size() >=
          curve.points.size() - static_cast<std::size_t>(0.2 * curve.points.size()));
}

TEST_CASE("remove_outliers tolerates ordinary jitter on a near-perfect curve") {
    // On a tight fit the median residual is tiny, so a pure 2x-median rule
    // would misread small accuracy jitter as outliers; the absolute floor
    // keeps these points.
    std::vector<std::size_t> xs;
    for (std::size_t x = 0; x <= 120; x += 10) xs.push_back(x);
    AccuracyCurve curve = sampled_model(0.85, -0.04, 0.0, xs);
    curve.points[3].y_mean += 0.02;
    curve.points[9].y_mean -= 0.02;
    const AccuracyCurve cleaned = remove_outliers(curve);
    CHECK(cleaned.points.size() == curve.points.size());
    CHECK(!cleaned.outlier_warning);
}

TEST_CASE("remove_outliers refuses to go below four points") {
    AccuracyCurve small = sampled_model(0.8, -0.1, 0.0, {1, 5, 10, 20});
    small.points[2].y_mean = 0.0;
    const AccuracyCurve out = remove_outliers(small);
    CHECK(out.points.size() == 4);
    CHECK(out.outlier_warning);
}

TEST_CASE("sweep produces one point per distinct count with stats over repeats") {
    const SweepFixture fx = make_fixture(31);
    const AccuracyCurve curve = sweep(fx.train_set, fx.plan, fx.config, fx.test_set, 17);
    curve.validate();

    const Dataset pooled =
        poison_attribute(fx.train_set, fx.plan.attribute_trigger,
                         fx.plan.attribute_poison_fraction, fx.plan.seed);
    const std::size_t x_k = attribute_pool_size(pooled);
    std::set<std::size_t> expected_x;
    for (double p : fx.config.p_grid) expected_x.insert(poison_count(p, x_k));
    CHECK(curve.points.size() == expected_x.size());

    std::size_t prev_x = 0;
    bool first = true;
    for (const auto& pt : curve.points) {
        CHECK(expected_x.count(pt.x) == 1);
        if (!first) CHECK(pt.x > prev_x);
        prev_x = pt.x;
        first = false;
        CHECK(pt.repeats.size() >= fx.config.repeats);
        CHECK(pt.y_mean >= 0.0);
        CHECK(pt.y_mean <= 1.0);
        // mean/std recomputable from raw repeats
        double mean = 0.0;
        for (double y : pt.repeats) mean += y;
        mean /= static_cast<double>(pt.repeats.size());
        CHECK(pt.y_mean == doctest::Approx(mean));
        double var = 0.0;
        for (double y : pt.repeats) var += (y - mean) * (y - mean);
        CHECK(pt.y_std == doctest::Approx(std::sqrt(var / pt.repeats.size())));
    }
}

TEST_CASE("sweep is deterministic and attack accuracy saturates with more poison") {
    const SweepFixture fx = make_fixture(32);
    const AccuracyCurve a = sweep(fx.train_set, fx.plan, fx.config, fx.test_set, 21);
    SweepConfig serial = fx.config;
    serial.jobs = 1;
    const AccuracyCurve b = sweep(fx.train_set, fx.plan, serial, fx.test_set, 21);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.points[i].repeats == b.points[i].repeats);
    }
    // the heaviest poisoning level should dominate the lightest
    CHECK(a.points.back().y_mean >= a.points.front().y_mean);
    CHECK(a.points.back().y_mean > 0.5);
}

TEST_CASE("detect reproduces a reference curve with zero MSE") {
    ReferenceLibrary lib;
    lib.attribute = "gender";
    lib.group = "male";
    std::vector<std::size_t> xs;
    for (std::size_t x = 0; x <= 100; x += 10) xs.push_back(x);
    const std::vector<double> s_values = {0.5, 0.6, 0.7, 0.8};
    for (std::size_t i = 0; i < s_values.size(); ++i) {
        ReferenceEntry entry;
        entry.s = s_values[i];
        entry.curve = sampled_model(0.9, -0.02 * static_cast<double>(i + 1), 0.0, xs);
        entry.fit = fit_curve(entry.curve);
        lib.entries.push_back(entry);
    }
    // a cloud identical to the s = 0.7 reference
    const AccuracyCurve cloud = sampled_model(0.9, -0.06, 0.0, xs);
    const DetectionReport report = detect(cloud, lib);
    CHECK(report.s_hat == doctest::Approx(0.7));
    CHECK(report.biased);
    double best_mse = 1e300;
    for (const auto& [s, mse] : report.mse_by_s) {
        CHECK(mse >= 0.0);
        if (s == 0.7) best_mse = mse;
    }
    CHECK(best_mse < 1e-10);

    // matching the s = 0.5 reference instead flips the verdict
    const AccuracyCurve unbiased_cloud = sampled_model(0.9, -0.02, 0.0, xs);
    const DetectionReport r2 = detect(unbiased_cloud, lib);
    CHECK(r2.s_hat == doctest::Approx(0.5));
    CHECK(!r2.biased);
}

TEST_CASE("detect is invariant to reference entry order and breaks ties low") {
    std::vector<std::size_t> xs;
    for (std::size_t x = 0; x <= 100; x += 10) xs.push_back(x);
    ReferenceLibrary lib;
    // two identical reference fits at different s: tie goes to the smaller s
    for (double s : {0.75, 0.55}) {
        ReferenceEntry e;
        e.s = s;
        e.curve = sampled_model(0.9, -0.03, 0.0, xs);
        e.fit = fit_curve(e.curve);
        lib.entries.push_back(e);
    }
    const AccuracyCurve cloud = sampled_model(0.9, -0.03, 0.0, xs);
    CHECK(detect(cloud, lib).s_hat == doctest::Approx(0.55));

    CHECK_THROWS_AS(detect(cloud, ReferenceLibrary{}), SizeError);
}

TEST_CASE("detect requires overlapping validity ranges") {
    ReferenceLibrary lib;
    ReferenceEntry e;
    e.s = 0.6;
    e.curve = sampled_model(0.9, -0.05, 0.0, {200, 220, 240, 260, 280});
    e.fit = fit_curve(e.curve);
    lib.entries.push_back(e);
    const AccuracyCurve cloud = sampled_model(0.9, -0.05, 0.0, {1, 5, 10, 20, 40});
    CHECK_THROWS_AS(detect(cloud, lib), IncomparableCurvesError);
}

TEST_CASE("library JSON round-trips") {
    ReferenceLibrary lib;
    lib.attribute = "gender";
    lib.group = "male";
    lib.seed = 12345;
    lib.dataset_hash = 999;
    std::vector<std::size_t> xs = {0, 10, 20, 40, 80};
    ReferenceEntry e;
    e.s = 0.65;
    e.curve = sampled_model(0.88, -0.04, 0.0, xs);
    e.curve.sample_pct = 0.65;
    e.curve.attribute = "gender";
    e.curve.group = "male";
    e.fit = fit_curve(e.curve);
    lib.entries.push_back(e);
    lib.failures.push_back({0.5, "pool too small"});

    const ReferenceLibrary back = ReferenceLibrary::from_json(lib.to_json());
    REQUIRE(back.entries.size() == 1);
    CHECK(back.attribute == "gender");
    CHECK(back.seed == 12345);
    CHECK(back.dataset_hash == 999);
    CHECK(back.entries[0].s == doctest::Approx(0.65));
    CHECK(back.entries[0].fit.a == doctest::Approx(lib.entries[0].fit.a));
    CHECK(back.entries[0].fit.b == doctest::Approx(lib.entries[0].fit.b));
    CHECK(back.entries[0].curve.points.size() == xs.size());
    CHECK(back.entries[0].curve.points[2].repeats == lib.entries[0].curve.points[2].repeats);
    REQUIRE(back.failures.size() == 1);
    CHECK(back.failures[0].second == "pool too small");
}

TEST_CASE("curve CSV lists x, stats, and raw repeats") {
    AccuracyCurve curve;
    curve.repeats = 2;
    curve.points.push_back({10, 0.5, 0.1, {0.4, 0.6}});
    curve.points.push_back({20, 0.9, 0.0, {0.9, 0.9}});
    const auto path = (std::filesystem::temp_directory_path() / "bd_curve.csv").string();
    save_curve_csv(curve, path);
    std::ifstream in(path);
    std::string header, line1, line2;
    std::getline(in, header);
    std::getline(in, line1);
    std::getline(in, line2);
    CHECK(header == "x,y_mean,y_std,repeats");
    CHECK(line1.rfind("10,", 0) == 0);
    CHECK(line1.find("0.4;0.6") != std::string::npos);
    CHECK(line2.rfind("20,", 0) == 0);
}

TEST_CASE("curve validate rejects malformed data") {
    AccuracyCurve bad;
    bad.repeats = 1;
    bad.points.push_back({10, 0.5, 0.0, {0.5}});
    bad.points.push_back({10, 0.6, 0.0, {0.6}});  // duplicate x
    CHECK_THROWS_AS(bad.validate(), BoundsError);
    AccuracyCurve oob;
    oob.repeats = 1;
    oob.points.push_back({10, 1.5, 0.0, {1.5}});  // accuracy above 1
    CHECK_THROWS_AS(oob.validate(), DomainError);
}

TEST_CASE("fitted curve evaluation is monotone non-decreasing for b < 0") {
    FittedCurve fit;
    fit.a = 0.9;
    fit.b = -0.04;
    fit.c = -0.1;
    double prev = -1.0;
    for (double x = 0.0; x <= 300.0; x += 3.0) {
        const double y = fit.eval(x);
        CHECK(y >= prev);
        CHECK(y <= 0.9 + 1e-12);
        prev = y;
    }
}
