#ifndef BDAUDIT_DATASET_HPP
#define BDAUDIT_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bdaudit {

// Provenance of a row: original data, attribute-trigger poison, or
// attribute + secondary backdoor poison.
enum class PoisonTag : std::uint8_t { clean = 0, attr = 1, attr_bd = 2 };

std::string poison_tag_name(PoisonTag tag);
PoisonTag poison_tag_from_name(const std::string& name);

struct AttributeColumn {
    std::string name;
    std::vector<std::string> group_names;
    std::vector<int> groups;  // per-sample group index
};

// Rectangular table of non-negative mutation-style features with class labels
// and per-sample hidden attributes. Treated as immutable after construction;
// all transformations return a new Dataset.
class Dataset {
public:
    std::vector<std::string> sample_ids;
    std::vector<std::string> feature_names;
    std::vector<double> values;  // row-major, n x d
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::vector<AttributeColumn> attributes;
    std::vector<double> min_shifts;   // per-feature shift applied at ingestion
    std::vector<PoisonTag> tags;      // per-row provenance

    std::size_t n_samples() const { return sample_ids.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    std::size_t n_classes() const { return class_names.size(); }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * n_features(), n_features()};
    }
    double at(std::size_t i, std::size_t j) const { return values[i * n_features() + j]; }

    std::vector<double> feature_column(std::size_t j) const;

    const AttributeColumn& attribute(const std::string& name) const;
    bool has_attribute(const std::string& name) const;
    int group_index(const std::string& attribute_name, const std::string& group) const;
    int class_index(const std::string& class_name) const;

    // Checks every structural invariant (rectangularity, non-negativity,
    // index validity); throws on violation.
    void validate() const;

    // FNV-1a over the numeric content; used in provenance records.
    std::uint64_t content_hash() const;
};

// Per-attribute specification for the synthetic generator.
struct AttributeSpec {
    std::string name;
    std::vector<std::string> group_names;
    std::vector<double> fractions;  // target sample percentage per group, sums to 1
    // Optional per-class weights (size n_classes) tilting group 0 toward some
    // classes, the way sex-linked disease prevalence ties a demographic group
    // to certain labels. Empty = group membership independent of the label.
    // Group counts still match `fractions` exactly; only which rows belong to
    // group 0 becomes label-dependent.
    std::vector<double> class_affinity;
};

struct SynthConfig {
    std::size_t n_samples = 1000;
    std::size_t n_features = 100;
    std::size_t n_classes = 4;
    std::vector<AttributeSpec> attributes;
    double class_signal = 2.0;      // mean separation between classes
    double attribute_signal = 2.0;  // mean offset carried by attribute-linked features
    double noise = 1.0;
    // One "spike gene" per class: a feature with no class-linked mean whose
    // rare extreme values (spike_rate of the samples) all occur in one class,
    // mimicking an overexpression marker. Widens value ranges so low-density
    // trigger values exist.
    double spike_rate = 0.02;
    double spike_lo = 5.0;
    double spike_hi = 14.0;
    std::uint64_t seed = 0;
};

struct SplitPair {
    Dataset train;
    Dataset test;
};

// Weight tables for turning (mutation type, impact) pairs into feature values.
enum class MutationType { deleterious, tolerated };
enum class MutationImpact { high, moderate, low, modifier };

struct SnvWeights {
    double deleterious = 1.0;
    double tolerated = 0.5;
    double high = 1.0;
    double moderate = 0.66;
    double low = 0.33;
    double modifier = 0.1;
};

double encode_snv(MutationType type, MutationImpact impact, const SnvWeights& weights = {});

// CSV schema: header `sample_id,<feature...>,label,attr:<name>...`, plus a
// sidecar JSON with class vocabulary, attribute vocabularies, and per-feature
// min-shifts. Feature values are min-shifted to non-negative on load; the
// shift is recorded for round-tripping.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& dataset, const std::string& path);

Dataset synthesize(const SynthConfig& config);

// Copies the listed rows (in the given order) into a new dataset.
Dataset take_rows(const Dataset& src, const std::vector<std::size_t>& rows);

SplitPair split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

double sample_percentage(const Dataset& dataset, const std::string& attribute,
                         const std::string& group);

// Removes non-group samples (uniformly, seeded) until the biasing group's
// sample percentage is within one-sample granularity of s_target. Group
// samples are never removed.
Dataset make_biased_subset(const Dataset& dataset, const std::string& attribute,
                           const std::string& biasing_group, double s_target,
                           std::uint64_t seed);

}  // namespace bdaudit

#endif  // BDAUDIT_DATASET_HPP
