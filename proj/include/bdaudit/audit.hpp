#ifndef BDAUDIT_AUDIT_HPP
#define BDAUDIT_AUDIT_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bdaudit/dataset.hpp"
#include "bdaudit/leak.hpp"
#include "bdaudit/poison.hpp"
#include "bdaudit/trigger.hpp"

namespace bdaudit {

// End-to-end audit parameters: one hidden attribute, one biasing group,
// reference s-grid, and the training/search/sweep settings underneath.
struct AuditConfig {
    std::string attribute;
    std::string group;
    std::vector<double> s_grid = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};
    SweepConfig sweep;
    SearchConfig search;
    std::size_t attr_trigger_features = 10;
    bool score_attr_against_attribute = false;
    double attr_fraction_init = 0.2;   // escalated in steps until validation passes
    double attr_fraction_step = 0.1;
    double attr_fraction_max = 0.5;
    double parity_slack = 0.05;        // allowed gap to the independent attribute model
    double tumor_drop_slack = 0.02;    // allowed clean-accuracy drop of the poisoned model
    double bias_threshold = 0.55;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    ExclusionList exclusion;
    std::optional<double> s_true;      // ground-truth cloud bias, when known
};

struct AuditResult {
    double clean_baseline = 0.0;
    BackdoorPlan plan;
    AttributeValidation validation;
    double independent_attr_accuracy = 0.0;
    double secondary_attack_acc = 0.0;
    double secondary_clean_acc = 0.0;
    ReferenceLibrary library;
    AccuracyCurve cloud_curve;
    DetectionReport detection;

    std::string to_json(const Dataset& collab) const;
};

// The split used both for plan design and inside build_reference_library, so
// every stage of one audit sees the same train/test partition.
SplitPair audit_split(const Dataset& collab, std::uint64_t seed);

// Designs the double-backdoor plan on the collaborator's data: attribute
// trigger + encoded labels, poison-fraction escalation until attribute
// learning validates, then the single-feature secondary trigger search.
struct PlanDesign {
    BackdoorPlan plan;
    double clean_baseline = 0.0;
    AttributeValidation validation;
    double independent_attr_accuracy = 0.0;
    double secondary_attack_acc = 0.0;
    double secondary_clean_acc = 0.0;
};

PlanDesign design_backdoor_plan(const Dataset& collab_train, const Dataset& collab_test,
                                const AuditConfig& config);

// Called after each pipeline stage with the stage name and the partial
// result, so callers can persist intermediate artifacts.
using AuditObserver = std::function<void(const std::string& stage, const AuditResult& partial)>;

// Full pipeline: plan design, reference library over the s-grid, cloud sweep,
// MSE detection. Stages: "plan_design", "reference_library", "cloud_sweep",
// "detection".
AuditResult run_audit(const Dataset& collab, const Dataset& cloud, const AuditConfig& config,
                      const AuditObserver& observer = {});

}  // namespace bdaudit

#endif  // BDAUDIT_AUDIT_HPP
