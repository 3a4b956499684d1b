#ifndef BDAUDIT_TRIGGER_HPP
#define BDAUDIT_TRIGGER_HPP

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "bdaudit/dataset.hpp"
#include "bdaudit/model.hpp"

namespace bdaudit {

// A (feature set, value) imprint. Secondary triggers use a single feature;
// attribute triggers reuse this shape with ten features.
struct Trigger {
    std::vector<std::size_t> features;
    double value = 0.0;

    Trigger() = default;
    Trigger(std::vector<std::size_t> f, double v);
};

// Overwrites every trigger feature with the trigger value, in place.
void apply_trigger(std::vector<double>& feature_row, const Trigger& trigger);

// Feature names that must never be used as triggers (known-correlated genes).
struct ExclusionList {
    std::set<std::string> names;

    static ExclusionList load(const std::string& path);  // one name per line, '#' comments
    bool contains(const std::string& name) const { return names.count(name) > 0; }
};

struct SearchConfig {
    double attack_floor = 1.0;          // minimum attack accuracy to accept
    double clean_drop_ceiling = 0.01;   // maximum clean-accuracy drop vs baseline
    std::size_t max_features = 10;      // chi2-ranked features to scan
    std::size_t candidates_per_feature = 10;
    double eval_poison_percent = 5.0;   // poisoning percentage used during search
    std::size_t max_results = 0;        // stop early once this many satisfy (0 = scan all)
    TrainConfig train;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
};

struct TriggerCandidate {
    Trigger trigger;
    double attack_acc = 0.0;
    double clean_acc = 0.0;
    bool satisfies = false;
};

// Drops candidate features whose names appear in the exclusion list,
// preserving order.
std::vector<std::size_t> filter_exclusion(const std::vector<std::size_t>& candidate_features,
                                          const ExclusionList& exclusion, const Dataset& dataset);

// Attacker heuristic for picking the backdoor target: the label of the most
// extreme row among the top-m chi2-ranked (post-exclusion) features. Training
// rows above the trigger value cannot oppose the backdoor when they already
// carry the target label, so aligning the target with the extreme rows is
// what makes a 100%-attack trigger reachable.
int choose_aligned_target(const Dataset& train_set, std::size_t max_features,
                          const ExclusionList& exclusion = {});

// Evaluates every (feature, value) candidate from the chi2 ranking and the
// per-feature low-density values: poison, train, score. Returns all evaluated
// tuples with their metrics, in scan order.
std::vector<TriggerCandidate> evaluate_candidates(const Dataset& train_set,
                                                  const Dataset& test_set, int target_label,
                                                  const SearchConfig& config,
                                                  const ExclusionList& exclusion,
                                                  double* clean_baseline_out = nullptr);

// Candidates satisfying both constraints, sorted by attack accuracy then
// clean accuracy descending. An empty result is a valid outcome.
std::vector<TriggerCandidate> search_triggers(const Dataset& train_set, const Dataset& test_set,
                                              int target_label, const SearchConfig& config,
                                              const ExclusionList& exclusion = {});

std::string search_report_json(const std::vector<TriggerCandidate>& results,
                               const std::vector<std::string>& feature_names);

}  // namespace bdaudit

#endif  // BDAUDIT_TRIGGER_HPP
