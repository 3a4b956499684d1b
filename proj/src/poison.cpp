#include "bdaudit/poison.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "bdaudit/errors.hpp"
#include "bdaudit/rng.hpp"
#include "bdaudit/stats.hpp"

namespace bdaudit {

namespace {

// Appends a modified copy of row `src`: trigger applied, label replaced.
void append_poisoned_copy(Dataset& ds, std::size_t src, const Trigger& trigger, int new_label,
                          PoisonTag tag, const char* id_suffix) {
    const std::size_t d = ds.n_features();
    std::vector<double> row(ds.values.begin() + src * d, ds.values.begin() + (src + 1) * d);
    apply_trigger(row, trigger);
    ds.values.insert(ds.values.end(), row.begin(), row.end());
    ds.sample_ids.push_back(ds.sample_ids[src] + id_suffix);
    ds.labels.push_back(new_label);
    ds.tags.push_back(tag);
    for (auto& a : ds.attributes) a.groups.push_back(a.groups[src]);
}

}  // namespace

void AttributeTrigger::validate(const Dataset& dataset) const {
    if (features.empty()) throw BoundsError("attribute trigger: feature set must not be empty");
    std::set<std::size_t> uniq(features.begin(), features.end());
    if (uniq.size() != features.size())
        throw BoundsError("attribute trigger: feature indices must be distinct");
    for (std::size_t f : features)
        if (f >= dataset.n_features())
            throw BoundsError("attribute trigger: feature index out of range");
    const auto& attr = dataset.attribute(attribute);
    std::set<int> labels_used;
    for (const auto& [group, label] : encoding) {
        if (group < 0 || static_cast<std::size_t>(group) >= attr.group_names.size())
            throw BoundsError("attribute trigger: encoded group out of range");
        if (label < 0 || static_cast<std::size_t>(label) >= dataset.n_classes())
            throw BoundsError("attribute trigger: encoded label out of range");
        if (!labels_used.insert(label).second)
            throw AssignmentError("attribute trigger: encoding must be injective");
    }
    if (encoding.size() != attr.group_names.size())
        throw AssignmentError("attribute trigger: every group needs an encoded label");
}

void BackdoorPlan::validate(const Dataset& dataset) const {
    attribute_trigger.validate(dataset);
    if (secondary.features.size() != 1)
        throw BoundsError("backdoor plan: secondary trigger must use a single feature");
    for (const auto& [group, label] : attribute_trigger.encoding)
        if (label == secondary_target)
            throw AssignmentError("backdoor plan: secondary target collides with an encoded label");
    if (secondary_target < 0 || static_cast<std::size_t>(secondary_target) >= dataset.n_classes())
        throw BoundsError("backdoor plan: secondary target out of range");
    for (std::size_t f : attribute_trigger.features)
        if (f == secondary.features[0])
            throw BoundsError("backdoor plan: secondary trigger feature overlaps the attribute trigger");
    if (!(attribute_poison_fraction > 0.0 && attribute_poison_fraction <= 1.0))
        throw ConfigError("backdoor plan: attribute poison fraction must lie in (0, 1]");
}

std::string BackdoorPlan::to_json(const Dataset& dataset) const {
    nlohmann::json j;
    j["schema_version"] = "1";
    nlohmann::json at;
    at["attribute"] = attribute_trigger.attribute;
    at["feature_indices"] = attribute_trigger.features;
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t f : attribute_trigger.features) names.push_back(dataset.feature_names[f]);
    at["features"] = names;
    at["value"] = attribute_trigger.value;
    nlohmann::json enc = nlohmann::json::object();
    const auto& attr = dataset.attribute(attribute_trigger.attribute);
    for (const auto& [group, label] : attribute_trigger.encoding)
        enc[attr.group_names[group]] = dataset.class_names[label];
    at["encoding"] = enc;
    j["attribute_trigger"] = at;
    j["secondary"] = {{"feature_index", secondary.features[0]},
                      {"feature", dataset.feature_names[secondary.features[0]]},
                      {"value", secondary.value},
                      {"target_label", dataset.class_names[secondary_target]}};
    j["attribute_poison_fraction"] = attribute_poison_fraction;
    j["seed"] = seed;
    return j.dump(2);
}

std::size_t poison_count(double p_percent, std::size_t x_k) {
    if (p_percent < 0.0) throw DomainError("poison_count: percentage must be non-negative");
    return static_cast<std::size_t>(p_percent / 100.0 * static_cast<double>(x_k));
}

std::map<int, int> choose_encoded_labels(const Dataset& dataset, const std::string& attribute) {
    const auto& attr = dataset.attribute(attribute);
    const std::size_t n_groups = attr.group_names.size();
    const std::size_t k = dataset.n_classes();
    if (n_groups > k - 1)
        throw CapacityError("choose_encoded_labels: need groups <= k-1 to keep a label free "
                            "for the secondary target");

    // counts[group][label]
    std::vector<std::vector<std::size_t>> counts(n_groups, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < dataset.n_samples(); ++i)
        counts[static_cast<std::size_t>(attr.groups[i])]
              [static_cast<std::size_t>(dataset.labels[i])]++;

    struct Claim {
        std::size_t count;
        std::size_t group;
        std::size_t label;
    };
    std::vector<Claim> claims;
    for (std::size_t g = 0; g < n_groups; ++g)
        for (std::size_t l = 0; l < k; ++l) claims.push_back({counts[g][l], g, l});
    std::sort(claims.begin(), claims.end(), [](const Claim& a, const Claim& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.group != b.group) return a.group < b.group;
        return a.label < b.label;
    });

    std::map<int, int> encoding;
    std::set<std::size_t> claimed_labels;
    for (const auto& c : claims) {
        if (encoding.count(static_cast<int>(c.group))) continue;
        if (claimed_labels.count(c.label)) continue;
        encoding[static_cast<int>(c.group)] = static_cast<int>(c.label);
        claimed_labels.insert(c.label);
    }
    if (encoding.size() != n_groups)
        throw AssignmentError("choose_encoded_labels: no collision-free assignment");
    return encoding;
}

AttributeTrigger design_attribute_trigger(const Dataset& train_set, const std::string& attribute,
                                          std::size_t m, bool score_against_attribute) {
    if (m < 1 || m > train_set.n_features())
        throw BoundsError("design_attribute_trigger: m must lie in [1, d]");
    const Chi2Report chi2 =
        chi2_scores(train_set, score_against_attribute ? attribute : std::string("label"));
    AttributeTrigger trigger;
    trigger.features = rank_features(chi2, m);
    trigger.attribute = attribute;

    // Pool all values of the selected features and take the lowest-density value.
    std::vector<double> pooled;
    pooled.reserve(m * train_set.n_samples());
    for (std::size_t f : trigger.features) {
        const auto col = train_set.feature_column(f);
        pooled.insert(pooled.end(), col.begin(), col.end());
    }
    const DensityModel kde = fit_kde(pooled);
    const auto candidates = lowest_density_candidates(kde, 1);
    if (candidates.empty())
        throw DegenerateError("design_attribute_trigger: no density candidate found");
    trigger.value = candidates.front();
    trigger.encoding = choose_encoded_labels(train_set, attribute);
    trigger.validate(train_set);
    return trigger;
}

Dataset poison_attribute(const Dataset& train_set, const AttributeTrigger& trigger,
                         double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("poison_attribute: fraction must lie in (0, 1]");
    trigger.validate(train_set);
    const auto& attr = train_set.attribute(trigger.attribute);
    const std::size_t n_groups = attr.group_names.size();

    std::vector<std::vector<std::size_t>> by_group(n_groups);
    for (std::size_t i = 0; i < train_set.n_samples(); ++i)
        by_group[static_cast<std::size_t>(attr.groups[i])].push_back(i);

    std::size_t total = 0;
    for (std::size_t g = 0; g < n_groups; ++g)
        total += static_cast<std::size_t>(fraction * static_cast<double>(by_group[g].size()));
    if (total == 0)
        throw EmptyPoisonError("poison_attribute: fraction selects zero samples in every group");

    Dataset out = train_set;
    if (out.tags.empty()) out.tags.assign(out.n_samples(), PoisonTag::clean);
    const Trigger t(trigger.features, trigger.value);
    for (std::size_t g = 0; g < n_groups; ++g) {
        const auto count =
            static_cast<std::size_t>(fraction * static_cast<double>(by_group[g].size()));
        if (count == 0) continue;
        Rng rng(derive_seed(seed, {0xA7712, g}));
        auto sel = rng.sample_indices(by_group[g].size(), count);
        std::sort(sel.begin(), sel.end());
        const int encoded = trigger.encoding.at(static_cast<int>(g));
        for (std::size_t s : sel)
            append_poisoned_copy(out, by_group[g][s], t, encoded, PoisonTag::attr, "#attr");
    }
    return out;
}

std::size_t attribute_pool_size(const Dataset& dataset) {
    std::size_t count = 0;
    for (PoisonTag t : dataset.tags)
        if (t == PoisonTag::attr) ++count;
    return count;
}

AttributeValidation validate_attribute_learning(const ClassifierModel& model,
                                                const Dataset& test_set,
                                                const AttributeTrigger& trigger) {
    if (test_set.n_samples() == 0) throw SizeError("validate_attribute_learning: empty test set");
    trigger.validate(test_set);
    const auto& attr = test_set.attribute(trigger.attribute);
    const Trigger t(trigger.features, trigger.value);
    std::size_t correct = 0;
    std::vector<double> row;
    for (std::size_t i = 0; i < test_set.n_samples(); ++i) {
        const auto src = test_set.row(i);
        row.assign(src.begin(), src.end());
        apply_trigger(row, t);
        if (model.predict(row) == trigger.encoding.at(attr.groups[i])) ++correct;
    }
    AttributeValidation v;
    v.attribute_accuracy = static_cast<double>(correct) / static_cast<double>(test_set.n_samples());
    v.tumor_accuracy = accuracy(model, test_set);
    return v;
}

IndependentAttributeModel train_independent_attribute_model(const Dataset& train_set,
                                                            const Dataset& test_set,
                                                            const std::string& attribute,
                                                            const TrainConfig& config) {
    const auto& attr = train_set.attribute(attribute);
    if (attr.group_names.size() < 2)
        throw DegenerateError("independent attribute model: attribute needs >= 2 groups");
    IndependentAttributeModel out;
    out.model = train(train_set, config, &attr.groups, attr.group_names.size());
    const auto& test_attr = test_set.attribute(attribute);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_set.n_samples(); ++i)
        if (out.model.predict(test_set.row(i)) == test_attr.groups[i]) ++correct;
    out.test_accuracy = static_cast<double>(correct) / static_cast<double>(test_set.n_samples());
    return out;
}

Dataset inject_secondary(const Dataset& attribute_poisoned_train, const BackdoorPlan& plan,
                         std::size_t x_p, std::uint64_t seed) {
    plan.validate(attribute_poisoned_train);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < attribute_poisoned_train.tags.size(); ++i)
        if (attribute_poisoned_train.tags[i] == PoisonTag::attr) pool.push_back(i);
    if (x_p > pool.size())
        throw PoolExhaustedError("inject_secondary: x_p exceeds the attribute-poisoned pool (" +
                                 std::to_string(x_p) + " > " + std::to_string(pool.size()) + ")");
    if (x_p == 0) return attribute_poisoned_train;

    Dataset out = attribute_poisoned_train;
    Rng rng(derive_seed(seed, {0x5EC0}));
    auto sel = rng.sample_indices(pool.size(), x_p);
    std::sort(sel.begin(), sel.end());
    for (std::size_t s : sel)
        append_poisoned_copy(out, pool[s], plan.secondary, plan.secondary_target,
                             PoisonTag::attr_bd, "#bd");
    return out;
}

Dataset inject_backdoor(const Dataset& train_set, const Trigger& trigger, int target_label,
                        std::size_t x_p, std::uint64_t seed) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < train_set.n_samples(); ++i)
        if (train_set.labels[i] != target_label) pool.push_back(i);
    if (x_p > pool.size())
        throw PoolExhaustedError("inject_backdoor: x_p exceeds the victim pool");
    if (x_p == 0) return train_set;

    Dataset out = train_set;
    if (out.tags.empty()) out.tags.assign(out.n_samples(), PoisonTag::clean);
    Rng rng(derive_seed(seed, {0xBD}));
    auto sel = rng.sample_indices(pool.size(), x_p);
    std::sort(sel.begin(), sel.end());
    for (std::size_t s : sel)
        append_poisoned_copy(out, pool[s], trigger, target_label, PoisonTag::attr_bd, "#bd");
    return out;
}

int choose_secondary_target(const Dataset& dataset, const std::map<int, int>& encoding) {
    std::set<int> used;
    for (const auto& [group, label] : encoding) used.insert(label);
    std::vector<std::size_t> counts(dataset.n_classes(), 0);
    for (int lab : dataset.labels) counts[static_cast<std::size_t>(lab)]++;
    int best = -1;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (used.count(static_cast<int>(c))) continue;
        if (best < 0 || counts[c] > counts[static_cast<std::size_t>(best)])
            best = static_cast<int>(c);
    }
    if (best < 0)
        throw CapacityError("choose_secondary_target: every label is used by the encoding");
    return best;
}

}  // namespace bdaudit
