#include "bdaudit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <json.hpp>

#include "bdaudit/errors.hpp"
#include "bdaudit/rng.hpp"

namespace bdaudit {

SplitPair audit_split(const Dataset& collab, std::uint64_t seed) {
    return split(collab, 0.6, derive_seed(seed, {0x5F11}));
}

PlanDesign design_backdoor_plan(const Dataset& collab_train, const Dataset& collab_test,
                                const AuditConfig& config) {
    PlanDesign out;

    TrainConfig tc = config.sweep.train;
    tc.seed = derive_seed(config.seed, {0xC1EA});
    const ClassifierModel baseline = train(collab_train, tc);
    out.clean_baseline = accuracy(baseline, collab_test);

    AttributeTrigger attr_trigger =
        design_attribute_trigger(collab_train, config.attribute, config.attr_trigger_features,
                                 config.score_attr_against_attribute);

    const IndependentAttributeModel indep =
        train_independent_attribute_model(collab_train, collab_test, config.attribute, tc);
    out.independent_attr_accuracy = indep.test_accuracy;

    // Escalate the poison fraction until attribute learning reaches parity
    // with the independent model and the tumor task stays intact.
    double fraction = config.attr_fraction_init;
    for (;;) {
        const Dataset poisoned = poison_attribute(
            collab_train, attr_trigger, fraction, derive_seed(config.seed, {0xE5CA}));
        TrainConfig ptc = tc;
        ptc.seed = derive_seed(config.seed, {0xE5CB});
        const ClassifierModel model = train(poisoned, ptc);
        out.validation = validate_attribute_learning(model, collab_test, attr_trigger);
        const bool parity_ok =
            out.validation.attribute_accuracy >= out.independent_attr_accuracy - config.parity_slack;
        const bool tumor_ok =
            out.clean_baseline - out.validation.tumor_accuracy <= config.tumor_drop_slack;
        if ((parity_ok && tumor_ok) || fraction + config.attr_fraction_step > config.attr_fraction_max + 1e-12)
            break;
        fraction += config.attr_fraction_step;
    }

    const int secondary_target = choose_secondary_target(collab_train, attr_trigger.encoding);

    // Secondary-trigger candidates must avoid the attribute-trigger features
    // on top of the caller's exclusion list.
    ExclusionList exclusion = config.exclusion;
    for (std::size_t f : attr_trigger.features) exclusion.names.insert(collab_train.feature_names[f]);
    SearchConfig sc = config.search;
    sc.jobs = config.jobs;
    sc.seed = derive_seed(config.seed, {0x5EAC});
    sc.train = tc;
    double clean_base = 0.0;
    const auto evaluated =
        evaluate_candidates(collab_train, collab_test, secondary_target, sc, exclusion, &clean_base);
    if (evaluated.empty())
        throw DegenerateError("audit: secondary-trigger search evaluated no candidates");
    const TriggerCandidate* best = nullptr;
    for (const auto& c : evaluated) {
        if (best == nullptr) {
            best = &c;
            continue;
        }
        // prefer satisfying tuples, then attack accuracy, then clean accuracy
        auto key = [](const TriggerCandidate& t) {
            return std::make_tuple(t.satisfies ? 1 : 0, t.attack_acc, t.clean_acc);
        };
        if (key(c) > key(*best)) best = &c;
    }
    out.secondary_attack_acc = best->attack_acc;
    out.secondary_clean_acc = best->clean_acc;

    out.plan.attribute_trigger = std::move(attr_trigger);
    out.plan.secondary = best->trigger;
    out.plan.secondary_target = secondary_target;
    out.plan.attribute_poison_fraction = fraction;
    out.plan.seed = config.seed;
    out.plan.validate(collab_train);
    return out;
}

AuditResult run_audit(const Dataset& collab, const Dataset& cloud, const AuditConfig& config,
                      const AuditObserver& observer) {
    if (collab.feature_names != cloud.feature_names)
        throw ShapeError("audit: collaborator and cloud datasets must share the feature space");
    if (!cloud.has_attribute(config.attribute))
        throw LookupError("audit: cloud dataset lacks attribute '" + config.attribute + "'");

    const SplitPair parts = audit_split(collab, config.seed);

    AuditResult result;
    PlanDesign design = design_backdoor_plan(parts.train, parts.test, config);
    result.clean_baseline = design.clean_baseline;
    result.validation = design.validation;
    result.independent_attr_accuracy = design.independent_attr_accuracy;
    result.secondary_attack_acc = design.secondary_attack_acc;
    result.secondary_clean_acc = design.secondary_clean_acc;
    result.plan = design.plan;
    if (observer) observer("plan_design", result);

    SweepConfig sweep_cfg = config.sweep;
    sweep_cfg.jobs = config.jobs;
    result.library = build_reference_library(collab, config.attribute, config.group, config.s_grid,
                                             result.plan, sweep_cfg, config.seed);
    if (observer) observer("reference_library", result);

    result.cloud_curve = sweep(cloud, result.plan, sweep_cfg, parts.test,
                               derive_seed(config.seed, {0xC10D}));
    result.cloud_curve.attribute = config.attribute;
    result.cloud_curve.group = config.group;
    if (config.s_true) result.cloud_curve.sample_pct = *config.s_true;
    if (observer) observer("cloud_sweep", result);

    result.detection = detect(result.cloud_curve, result.library, config.bias_threshold);
    if (config.s_true) {
        result.detection.s_true = config.s_true;
        result.detection.estimation_error = std::abs(result.detection.s_hat - *config.s_true);
    }
    if (observer) observer("detection", result);
    return result;
}

std::string AuditResult::to_json(const Dataset& collab) const {
    nlohmann::json j;
    j["schema_version"] = "1";
    j["clean_baseline"] = clean_baseline;
    j["plan"] = nlohmann::json::parse(plan.to_json(collab));
    j["attribute_validation"] = {{"attribute_accuracy", validation.attribute_accuracy},
                                 {"tumor_accuracy", validation.tumor_accuracy},
                                 {"independent_attr_accuracy", independent_attr_accuracy}};
    j["secondary_trigger"] = {{"attack_acc", secondary_attack_acc},
                              {"clean_acc", secondary_clean_acc}};
    j["reference_library"] = nlohmann::json::parse(library.to_json());
    j["detection"] = nlohmann::json::parse(detection.to_json());
    return j.dump(2);
}

}  // namespace bdaudit
