#ifndef BDAUDIT_LEAK_HPP
#define BDAUDIT_LEAK_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdaudit/dataset.hpp"
#include "bdaudit/model.hpp"
#include "bdaudit/poison.hpp"

namespace bdaudit {

struct CurvePoint {
    std::size_t x = 0;           // poisoned-sample count
    double y_mean = 0.0;         // mean attack accuracy over repeats
    double y_std = 0.0;
    std::vector<double> repeats; // raw per-repeat attack accuracies
};

// Attack-accuracy-vs-poison-count saturation data for one (biased) dataset.
struct AccuracyCurve {
    std::vector<CurvePoint> points;  // x strictly increasing
    std::size_t repeats = 0;
    double sample_pct = 0.0;  // s of the generating dataset
    std::string attribute;
    std::string group;
    bool outlier_warning = false;

    void validate() const;
};

// Parameters of y = a * (1 - e^(b*x + c)).
struct FittedCurve {
    double a = 0.0;  // in [0, 1]
    double b = 0.0;  // <= 0
    double c = 0.0;
    double rmse = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::size_t iterations = 0;

    double eval(double x) const;
};

struct SweepConfig {
    std::vector<double> p_grid = {1, 2, 5, 10, 15, 20, 30, 40};  // percentages
    std::size_t repeats = 10;
    TrainConfig train;
    std::size_t jobs = 1;
};

// For each p: x = poison_count(p, attribute pool size); for each repeat the
// dataset is attribute-poisoned and secondary-injected with a seed derived
// from (seed, p, r), a model is trained, and attack accuracy is measured on
// double-triggered test data against the secondary target.
AccuracyCurve sweep(const Dataset& train_set, const BackdoorPlan& plan, const SweepConfig& config,
                    const Dataset& test_set, std::uint64_t seed);

// Fraction of double-triggered non-target test samples classified as the
// secondary target.
double double_trigger_attack_accuracy(const ClassifierModel& model, const Dataset& test_set,
                                      const BackdoorPlan& plan);

// Drops points whose residual against a preliminary fit exceeds twice the
// median absolute residual (at most 20% of points, never below 4 remaining).
AccuracyCurve remove_outliers(const AccuracyCurve& curve);

// Damped (Levenberg-Marquardt) least squares for a(1 - e^(bx+c)) with
// a in [0,1] and b <= 0 enforced by projection.
FittedCurve fit_curve(const AccuracyCurve& curve);

struct ReferenceEntry {
    double s = 0.0;
    AccuracyCurve curve;
    FittedCurve fit;
};

struct ReferenceLibrary {
    std::string attribute;
    std::string group;
    std::vector<ReferenceEntry> entries;  // ascending s
    std::vector<std::pair<double, std::string>> failures;  // (s, reason)
    SweepConfig config;
    std::uint64_t seed = 0;
    std::uint64_t dataset_hash = 0;

    std::string to_json() const;
    static ReferenceLibrary from_json(const std::string& text);
};

// Full per-s pipeline over the collaborator's data: biased subset -> sweep ->
// outlier removal -> fit. The collaborator data is split 60-40 internally.
ReferenceLibrary build_reference_library(const Dataset& collab_data, const std::string& attribute,
                                         const std::string& group,
                                         const std::vector<double>& s_grid,
                                         const BackdoorPlan& plan, const SweepConfig& config,
                                         std::uint64_t seed);

struct DetectionReport {
    std::vector<std::pair<double, double>> mse_by_s;
    double s_hat = 0.0;
    bool biased = false;
    double bias_threshold = 0.55;
    std::optional<double> s_true;
    std::optional<double> estimation_error;
    FittedCurve cloud_fit;

    std::string to_json() const;
    std::string to_text() const;
};

// Fits the cloud curve and compares it to every reference fit on a common
// 100-point grid over the intersection of validity ranges; s_hat is the
// argmin-MSE reference (ties to smaller s), biased iff s_hat >= threshold.
DetectionReport detect(const AccuracyCurve& cloud_curve, const ReferenceLibrary& library,
                       double bias_threshold = 0.55);

void save_curve_csv(const AccuracyCurve& curve, const std::string& path);

}  // namespace bdaudit

#endif  // BDAUDIT_LEAK_HPP
