#ifndef BDAUDIT_STATS_HPP
#define BDAUDIT_STATS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "bdaudit/dataset.hpp"

namespace bdaudit {

// Per-feature chi-squared statistics against a categorical target.
struct Chi2Report {
    std::vector<double> scores;        // one per feature, >= 0
    std::vector<std::size_t> ranking;  // feature indices, descending score, index tiebreak
};

// Gaussian kernel density model with bandwidth h = factor * population sigma.
struct DensityModel {
    std::vector<double> samples;
    double bandwidth = 0.0;
    double smoothing_factor = 0.5;
};

// Feature-selection chi-squared: O_c = per-class sum of the feature,
// E_c = class-prior-weighted total sum, score = sum (O_c - E_c)^2 / E_c.
// `target` is either the label column ("label") or an attribute name.
Chi2Report chi2_scores(const Dataset& dataset, const std::string& target = "label");

std::vector<std::size_t> rank_features(const Chi2Report& report, std::size_t top_m);

DensityModel fit_kde(const std::vector<double>& values, double factor = 0.5);

double density(const DensityModel& model, double x);

// Grid argmin scan over [min(samples), max(samples)]; returns up to k grid
// values in ascending density order with a minimum spacing of one bandwidth.
std::vector<double> lowest_density_candidates(const DensityModel& model, std::size_t k = 10,
                                              std::size_t grid_points = 512);

void save_chi2_csv(const Chi2Report& report, const std::vector<std::string>& feature_names,
                   const std::string& path);
std::string density_model_json(const DensityModel& model);

}  // namespace bdaudit

#endif  // BDAUDIT_STATS_HPP
