#include "bdaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "bdaudit/errors.hpp"

namespace bdaudit {

Chi2Report chi2_scores(const Dataset& dataset, const std::string& target) {
    const std::size_t n = dataset.n_samples();
    const std::size_t d = dataset.n_features();

    // Resolve the target into a per-sample group index vector.
    std::vector<int> groups;
    std::size_t n_groups = 0;
    if (target == "label") {
        groups = dataset.labels;
        n_groups = dataset.n_classes();
    } else {
        const auto& attr = dataset.attribute(target);
        groups = attr.groups;
        n_groups = attr.group_names.size();
    }
    std::vector<std::size_t> group_count(n_groups, 0);
    for (int g : groups) group_count[static_cast<std::size_t>(g)]++;
    std::size_t populated = 0;
    for (std::size_t c : group_count)
        if (c > 0) ++populated;
    if (populated < 2)
        throw DegenerateError("chi2_scores: target '" + target + "' has fewer than 2 populated groups");

    Chi2Report report;
    report.scores.assign(d, 0.0);
    std::vector<double> observed(n_groups);
    for (std::size_t j = 0; j < d; ++j) {
        std::fill(observed.begin(), observed.end(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = dataset.at(i, j);
            if (v < 0.0) throw DomainError("chi2_scores: negative feature value");
            observed[static_cast<std::size_t>(groups[i])] += v;
            total += v;
        }
        double score = 0.0;
        for (std::size_t c = 0; c < n_groups; ++c) {
            const double expected =
                total * static_cast<double>(group_count[c]) / static_cast<double>(n);
            if (expected > 0.0) {
                const double diff = observed[c] - expected;
                score += diff * diff / expected;
            }
        }
        report.scores[j] = score;
    }

    report.ranking.resize(d);
    std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return report.scores[a] > report.scores[b]; });
    return report;
}

std::vector<std::size_t> rank_features(const Chi2Report& report, std::size_t top_m) {
    if (top_m < 1 || top_m > report.ranking.size())
        throw BoundsError("rank_features: top_m must lie in [1, d]");
    return {report.ranking.begin(), report.ranking.begin() + top_m};
}

DensityModel fit_kde(const std::vector<double>& values, double factor) {
    if (values.size() < 2) throw DegenerateError("fit_kde: need at least 2 samples");
    if (!(factor > 0.0)) throw DegenerateError("fit_kde: smoothing factor must be positive");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;  // population variance
    const double sigma = std::sqrt(var);
    if (!(sigma > 0.0)) throw DegenerateError("fit_kde: zero variance sample");
    return DensityModel{values, factor * sigma, factor};
}

double density(const DensityModel& model, double x) {
    const double h = model.bandwidth;
    const double n = static_cast<double>(model.samples.size());
    double sum = 0.0;
    for (double v : model.samples) {
        const double z = (x - v) / h;
        sum += std::exp(-0.5 * z * z);
    }
    return sum / (n * h * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<double> lowest_density_candidates(const DensityModel& model, std::size_t k,
                                              std::size_t grid_points) {
    if (grid_points < 2) throw BoundsError("lowest_density_candidates: grid_points must be >= 2");
    if (k == 0) return {};
    const auto [mn_it, mx_it] = std::minmax_element(model.samples.begin(), model.samples.end());
    const double lo = *mn_it, hi = *mx_it;

    std::vector<double> xs(grid_points), ds(grid_points);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        xs[i] = lo + step * static_cast<double>(i);
        ds[i] = density(model, xs[i]);
    }
    std::vector<std::size_t> order(grid_points);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ds[a] < ds[b]; });

    // Greedy pick in ascending density, keeping candidates one bandwidth apart.
    std::vector<double> picked;
    for (std::size_t idx : order) {
        if (picked.size() >= k) break;
        const double x = xs[idx];
        bool ok = true;
        for (double p : picked)
            if (std::abs(p - x) < model.bandwidth) {
                ok = false;
                break;
            }
        if (ok) picked.push_back(x);
    }
    return picked;
}

void save_chi2_csv(const Chi2Report& report, const std::vector<std::string>& feature_names,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write chi2 report '" + path + "'");
    out << "feature,score,rank\n";
    std::vector<std::size_t> rank_of(report.scores.size());
    for (std::size_t r = 0; r < report.ranking.size(); ++r) rank_of[report.ranking[r]] = r;
    for (std::size_t j = 0; j < report.scores.size(); ++j)
        out << feature_names[j] << ',' << report.scores[j] << ',' << rank_of[j] << '\n';
}

std::string density_model_json(const DensityModel& model) {
    nlohmann::json j;
    j["schema_version"] = "1";
    j["bandwidth"] = model.bandwidth;
    j["smoothing_factor"] = model.smoothing_factor;
    j["n_samples"] = model.samples.size();
    j["samples"] = model.samples;
    return j.dump(2);
}

}  // namespace bdaudit
