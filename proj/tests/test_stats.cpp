#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bdaudit/dataset.hpp"
#include "bdaudit/errors.hpp"
#include "bdaudit/rng.hpp"
#include "bdaudit/stats.hpp"

using namespace bdaudit;

namespace {

// Build a minimal dataset from an explicit matrix and label vector.
Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                     std::size_t k) {
    Dataset ds;
    const std::size_t d = rows[0].size();
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t c = 0; c < k; ++c) ds.class_names.push_back("c" + std::to_string(c));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ds.sample_ids.push_back("s" + std::to_string(i));
        ds.values.insert(ds.values.end(), rows[i].begin(), rows[i].end());
    }
    ds.labels = labels;
    ds.tags.assign(rows.size(), PoisonTag::clean);
    return ds;
}

// Independent oracle: direct evaluation of sum (O - E)^2 / E.
double chi2_oracle(const Dataset& ds, std::size_t feature) {
    const std::size_t k = ds.n_classes();
    std::vector<double> observed(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        observed[ds.labels[i]] += ds.at(i, feature);
        counts[ds.labels[i]]++;
        total += ds.at(i, feature);
    }
    double score = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const double expected = total * counts[c] / static_cast<double>(ds.n_samples());
        if (expected > 0.0) score += (observed[c] - expected) * (observed[c] - expected) / expected;
    }
    return score;
}

// Naive per-sample Gaussian summation.
double density_oracle(const std::vector<double>& samples, double h, double x) {
    double sum = 0.0;
    for (double v : samples) sum += std::exp(-(x - v) * (x - v) / (2.0 * h * h));
    return sum / (samples.size() * h * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST_CASE("chi2 score is zero under class independence") {
    const Dataset ds = make_dataset({{5}, {5}}, {0, 1}, 2);
    const auto report = chi2_scores(ds);
    CHECK(report.scores[0] == doctest::Approx(0.0));
}

TEST_CASE("chi2 score matches the hand-computed value") {
    // O = [8, 2], E = [5, 5] -> 9/5 + 9/5 = 3.6
    const Dataset ds = make_dataset({{8}, {2}}, {0, 1}, 2);
    const auto report = chi2_scores(ds);
    CHECK(report.scores[0] == doctest::Approx(3.6));
}

TEST_CASE("all-zero feature scores zero") {
    const Dataset ds = make_dataset({{0, 1}, {0, 2}}, {0, 1}, 2);
    const auto report = chi2_scores(ds);
    CHECK(report.scores[0] == doctest::Approx(0.0));
}

TEST_CASE("chi2 matches the brute-force oracle on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.bounded(45);
        const std::size_t d = 1 + rng.bounded(5);
        const std::size_t k = 3;
        std::vector<std::vector<double>> rows(n, std::vector<double>(d));
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(i % k);  // every class populated
            for (std::size_t j = 0; j < d; ++j) rows[i][j] = rng.uniform(0.0, 10.0);
        }
        const Dataset ds = make_dataset(rows, labels, k);
        const auto report = chi2_scores(ds);
        for (std::size_t j = 0; j < d; ++j)
            CHECK(report.scores[j] == doctest::Approx(chi2_oracle(ds, j)).epsilon(1e-9));
    }
}

TEST_CASE("chi2 ranking is stable under class-proportional duplication") {
    Rng rng(77);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < 30; ++i) {
        rows.push_back({rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)});
        labels.push_back(static_cast<int>(i % 2));
    }
    const Dataset ds = make_dataset(rows, labels, 2);
    // duplicate every sample once: O and E scale together
    std::vector<std::vector<double>> rows2 = rows;
    rows2.insert(rows2.end(), rows.begin(), rows.end());
    std::vector<int> labels2 = labels;
    labels2.insert(labels2.end(), labels.begin(), labels.end());
    const Dataset ds2 = make_dataset(rows2, labels2, 2);
    CHECK(chi2_scores(ds).ranking == chi2_scores(ds2).ranking);
}

TEST_CASE("chi2 rejects bad inputs") {
    Dataset ds = make_dataset({{1}, {2}}, {0, 0}, 2);
    CHECK_THROWS_AS(chi2_scores(ds), DegenerateError);  // single populated class
}

TEST_CASE("rank_features slices the ranking with index tiebreak") {
    Chi2Report report;
    report.scores = {1.0, 5.0, 3.0};
    report.ranking = {1, 2, 0};
    CHECK(rank_features(report, 2) == std::vector<std::size_t>{1, 2});
    CHECK(rank_features(report, 3) == std::vector<std::size_t>{1, 2, 0});
    CHECK_THROWS_AS(rank_features(report, 4), BoundsError);
    CHECK_THROWS_AS(rank_features(report, 0), BoundsError);

    const Dataset tie = make_dataset({{2, 2}, {2, 2}}, {0, 1}, 2);
    const auto r = chi2_scores(tie);
    CHECK(rank_features(r, 2) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("fit_kde bandwidth is factor times population sigma") {
    const std::vector<double> values = {0.0, 0.0, 0.0, 10.0};
    const DensityModel model = fit_kde(values, 0.5);
    // population sigma of {0,0,0,10} = sqrt(18.75)
    CHECK(model.bandwidth == doctest::Approx(0.5 * std::sqrt(18.75)));
    CHECK(density(model, 0.0) > density(model, 5.0));
}

TEST_CASE("fit_kde rejects degenerate samples") {
    CHECK_THROWS_AS(fit_kde({3.0}), DegenerateError);
    CHECK_THROWS_AS(fit_kde({3.0, 3.0, 3.0}), DegenerateError);
}

TEST_CASE("density is symmetric for symmetric data") {
    const DensityModel model = fit_kde({-1.0, 1.0});
    for (double x : {0.3, 0.8, 1.5, 4.0})
        CHECK(density(model, x) == doctest::Approx(density(model, -x)));
}

TEST_CASE("density matches the naive Gaussian oracle") {
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values;
        const std::size_t n = 2 + rng.bounded(40);
        for (std::size_t i = 0; i < n; ++i) values.push_back(rng.uniform(-5.0, 5.0));
        DensityModel model;
        try {
            model = fit_kde(values);
        } catch (const DegenerateError&) {
            continue;
        }
        for (int q = 0; q < 5; ++q) {
            const double x = rng.uniform(-8.0, 8.0);
            CHECK(density(model, x) ==
                  doctest::Approx(density_oracle(values, model.bandwidth, x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("density integrates to one and vanishes far away") {
    Rng rng(99);
    std::vector<double> values;
    for (int i = 0; i < 60; ++i) values.push_back(rng.normal(2.0, 1.5));
    const DensityModel model = fit_kde(values);
    // trapezoid quadrature with a 10h margin
    const double lo = *std::min_element(values.begin(), values.end()) - 10.0 * model.bandwidth;
    const double hi = *std::max_element(values.begin(), values.end()) + 10.0 * model.bandwidth;
    const int steps = 20000;
    double integral = 0.0;
    double prev = density(model, lo);
    for (int i = 1; i <= steps; ++i) {
        const double x = lo + (hi - lo) * i / steps;
        const double cur = density(model, x);
        integral += 0.5 * (prev + cur) * (hi - lo) / steps;
        prev = cur;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

    const double mean = 2.0;
    const double range = hi - lo;
    CHECK(density(model, mean + 20.0 * model.bandwidth + range) < 1e-12);
}

TEST_CASE("lowest_density_candidates finds the inter-mode gap") {
    std::vector<double> values;
    for (int i = 0; i < 50; ++i) values.push_back(0.0);
    for (int i = 0; i < 50; ++i) values.push_back(10.0);
    const DensityModel model = fit_kde(values);
    const auto candidates = lowest_density_candidates(model, 10);
    REQUIRE(!candidates.empty());
    CHECK(candidates.front() > 2.5);
    CHECK(candidates.front() < 7.5);
    // all candidates within the data range, ascending density, spaced by h
    double prev_density = -1.0;
    for (double c : candidates) {
        CHECK(c >= 0.0);
        CHECK(c <= 10.0);
        const double dc = density(model, c);
        CHECK(dc >= prev_density);
        prev_density = dc;
    }
    for (std::size_t i = 0; i < candidates.size(); ++i)
        for (std::size_t j = i + 1; j < candidates.size(); ++j)
            CHECK(std::abs(candidates[i] - candidates[j]) >= model.bandwidth);
}

TEST_CASE("lowest_density_candidates edge cases") {
    const DensityModel model = fit_kde({0.0, 1.0, 2.0});
    CHECK(lowest_density_candidates(model, 0).empty());
    CHECK_THROWS_AS(lowest_density_candidates(model, 5, 1), BoundsError);
    // k larger than attainable under spacing: returns fewer, not an error
    const auto many = lowest_density_candidates(model, 1000);
    CHECK(many.size() < 1000);
}
