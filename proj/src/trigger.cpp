#include "bdaudit/trigger.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "bdaudit/errors.hpp"
#include "bdaudit/parallel.hpp"
#include "bdaudit/poison.hpp"
#include "bdaudit/rng.hpp"
#include "bdaudit/stats.hpp"

namespace bdaudit {

Trigger::Trigger(std::vector<std::size_t> f, double v) : features(std::move(f)), value(v) {
    if (features.empty()) throw BoundsError("trigger: feature list must not be empty");
    std::set<std::size_t> uniq(features.begin(), features.end());
    if (uniq.size() != features.size()) throw BoundsError("trigger: feature indices must be distinct");
    if (!(value >= 0.0)) throw DomainError("trigger: value must be non-negative");
}

void apply_trigger(std::vector<double>& feature_row, const Trigger& trigger) {
    for (std::size_t f : trigger.features) {
        if (f >= feature_row.size()) throw BoundsError("apply_trigger: feature index out of range");
        feature_row[f] = trigger.value;
    }
}

ExclusionList ExclusionList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open exclusion list '" + path + "'");
    ExclusionList out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t");
        out.names.insert(line.substr(b, e - b + 1));
    }
    return out;
}

std::vector<std::size_t> filter_exclusion(const std::vector<std::size_t>& candidate_features,
                                          const ExclusionList& exclusion, const Dataset& dataset) {
    std::vector<std::size_t> out;
    out.reserve(candidate_features.size());
    for (std::size_t f : candidate_features)
        if (!exclusion.contains(dataset.feature_names[f])) out.push_back(f);
    return out;
}

int choose_aligned_target(const Dataset& train_set, std::size_t max_features,
                          const ExclusionList& exclusion) {
    train_set.validate();
    const Chi2Report chi2 = chi2_scores(train_set, "label");
    std::vector<std::size_t> scan = filter_exclusion(chi2.ranking, exclusion, train_set);
    if (scan.empty()) throw SizeError("choose_aligned_target: all features are excluded");
    if (scan.size() > max_features) scan.resize(max_features);
    double best_value = -std::numeric_limits<double>::infinity();
    std::size_t best_row = 0;
    for (std::size_t f : scan) {
        const auto col = train_set.feature_column(f);
        for (std::size_t i = 0; i < col.size(); ++i)
            if (col[i] > best_value) {
                best_value = col[i];
                best_row = i;
            }
    }
    return train_set.labels[best_row];
}

std::vector<TriggerCandidate> evaluate_candidates(const Dataset& train_set,
                                                  const Dataset& test_set, int target_label,
                                                  const SearchConfig& config,
                                                  const ExclusionList& exclusion,
                                                  double* clean_baseline_out) {
    if (target_label < 0 || static_cast<std::size_t>(target_label) >= train_set.n_classes())
        throw BoundsError("search: target label out of range");
    if (!(config.attack_floor > 0.0 && config.attack_floor <= 1.0))
        throw ConfigError("search: attack floor must lie in (0, 1]");
    if (config.clean_drop_ceiling < 0.0)
        throw ConfigError("search: clean-drop ceiling must be non-negative");

    const ClassifierModel baseline = train(train_set, config.train);
    const double clean_base = accuracy(baseline, test_set);
    if (clean_baseline_out) *clean_baseline_out = clean_base;

    const Chi2Report chi2 = chi2_scores(train_set, "label");
    std::vector<std::size_t> scan =
        filter_exclusion(chi2.ranking, exclusion, train_set);
    if (scan.size() > config.max_features) scan.resize(config.max_features);

    std::size_t pool = 0;
    for (int lab : train_set.labels)
        if (lab != target_label) ++pool;
    const std::size_t x_p = poison_count(config.eval_poison_percent, pool);

    std::vector<TriggerCandidate> evaluated;
    std::size_t satisfying = 0;
    for (std::size_t fi = 0; fi < scan.size(); ++fi) {
        const std::size_t feature = scan[fi];
        std::vector<double> values;
        try {
            const DensityModel kde = fit_kde(train_set.feature_column(feature));
            values = lowest_density_candidates(kde, config.candidates_per_feature);
        } catch (const DegenerateError&) {
            continue;  // constant feature, nothing to scan
        }

        std::vector<TriggerCandidate> batch(values.size());
        parallel_for(values.size(), config.jobs, [&](std::size_t vi) {
            TriggerCandidate cand;
            cand.trigger = Trigger({feature}, values[vi]);
            const std::uint64_t seed = derive_seed(config.seed, {feature, vi});
            const Dataset poisoned =
                inject_backdoor(train_set, cand.trigger, target_label, x_p, seed);
            const ClassifierModel m = train(poisoned, config.train);
            cand.attack_acc = attack_accuracy(m, test_set, cand.trigger, target_label);
            cand.clean_acc = accuracy(m, test_set);
            cand.satisfies = cand.attack_acc >= config.attack_floor &&
                             (clean_base - cand.clean_acc) <= config.clean_drop_ceiling;
            batch[vi] = std::move(cand);
        });
        for (auto& c : batch) {
            if (c.satisfies) ++satisfying;
            evaluated.push_back(std::move(c));
        }
        if (config.max_results > 0 && satisfying >= config.max_results) break;
    }
    return evaluated;
}

std::vector<TriggerCandidate> search_triggers(const Dataset& train_set, const Dataset& test_set,
                                              int target_label, const SearchConfig& config,
                                              const ExclusionList& exclusion) {
    auto evaluated = evaluate_candidates(train_set, test_set, target_label, config, exclusion);
    std::vector<TriggerCandidate> results;
    for (auto& c : evaluated)
        if (c.satisfies) results.push_back(std::move(c));
    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        if (a.attack_acc != b.attack_acc) return a.attack_acc > b.attack_acc;
        if (a.clean_acc != b.clean_acc) return a.clean_acc > b.clean_acc;
        if (a.trigger.features != b.trigger.features) return a.trigger.features < b.trigger.features;
        return a.trigger.value < b.trigger.value;
    });
    return results;
}

std::string search_report_json(const std::vector<TriggerCandidate>& results,
                               const std::vector<std::string>& feature_names) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json item;
        nlohmann::json feats = nlohmann::json::array();
        for (std::size_t f : r.trigger.features) feats.push_back(feature_names[f]);
        item["features"] = feats;
        item["feature_indices"] = r.trigger.features;
        item["value"] = r.trigger.value;
        item["attack_acc"] = r.attack_acc;
        item["clean_acc"] = r.clean_acc;
        arr.push_back(item);
    }
    nlohmann::json j;
    j["schema_version"] = "1";
    j["triggers"] = arr;
    j["count"] = results.size();
    return j.dump(2);
}

}  // namespace bdaudit
