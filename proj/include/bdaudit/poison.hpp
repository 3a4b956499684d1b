#ifndef BDAUDIT_POISON_HPP
#define BDAUDIT_POISON_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bdaudit/dataset.hpp"
#include "bdaudit/model.hpp"
#include "bdaudit/trigger.hpp"

namespace bdaudit {

// Ten-feature trigger whose single value marks a sample as attribute-encoded;
// each group is relabelled to its encoded class label.
struct AttributeTrigger {
    std::vector<std::size_t> features;
    double value = 0.0;
    std::string attribute;
    std::map<int, int> encoding;  // group index -> class label, injective

    void validate(const Dataset& dataset) const;
};

struct BackdoorPlan {
    AttributeTrigger attribute_trigger;
    Trigger secondary;
    int secondary_target = -1;
    double attribute_poison_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate(const Dataset& dataset) const;
    std::string to_json(const Dataset& dataset) const;
};

// x_p = int(p/100 * x_K)
std::size_t poison_count(double p_percent, std::size_t x_k);

// Each group maps to the class label holding the most of that group's samples;
// collisions go to the higher count, the loser takes its next-best label.
// Requires groups <= k-1 so one label stays free for the secondary target.
std::map<int, int> choose_encoded_labels(const Dataset& dataset, const std::string& attribute);

// Top-m chi2 features (scored against the label by default, or the attribute),
// a single value from the pooled low-density scan, and the encoded labels.
AttributeTrigger design_attribute_trigger(const Dataset& train_set, const std::string& attribute,
                                          std::size_t m = 10, bool score_against_attribute = false);

// Appends floor(fraction * n_g) triggered, relabelled copies per group.
// Originals are untouched; appended rows are tagged PoisonTag::attr.
Dataset poison_attribute(const Dataset& train_set, const AttributeTrigger& trigger,
                         double fraction, std::uint64_t seed);

// Size of the attribute-poisoned victim pool (rows tagged attr).
std::size_t attribute_pool_size(const Dataset& dataset);

struct AttributeValidation {
    double attribute_accuracy = 0.0;  // triggered test rows predicted as encoding[true group]
    double tumor_accuracy = 0.0;      // clean accuracy on untriggered test rows
};

AttributeValidation validate_attribute_learning(const ClassifierModel& model,
                                                const Dataset& test_set,
                                                const AttributeTrigger& trigger);

// Logistic model over the same features predicting the attribute; the
// comparison baseline for attribute-learning parity.
struct IndependentAttributeModel {
    ClassifierModel model;
    double test_accuracy = 0.0;
};

IndependentAttributeModel train_independent_attribute_model(const Dataset& train_set,
                                                            const Dataset& test_set,
                                                            const std::string& attribute,
                                                            const TrainConfig& config);

// Appends x_p copies of attribute-poisoned rows with the secondary trigger
// applied and the label set to the plan's secondary target (tag attr_bd).
Dataset inject_secondary(const Dataset& attribute_poisoned_train, const BackdoorPlan& plan,
                         std::size_t x_p, std::uint64_t seed);

// Plain backdoor injection used during secondary-trigger search: appends x_p
// copies of non-target rows with the trigger applied and the target label.
Dataset inject_backdoor(const Dataset& train_set, const Trigger& trigger, int target_label,
                        std::size_t x_p, std::uint64_t seed);

// Deterministic secondary-target rule: most-populated class among those not
// used as encoded labels.
int choose_secondary_target(const Dataset& dataset, const std::map<int, int>& encoding);

}  // namespace bdaudit

#endif  // BDAUDIT_POISON_HPP
