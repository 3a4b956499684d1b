#include "bdaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bdaudit/errors.hpp"
#include "bdaudit/rng.hpp"

namespace bdaudit {

namespace {

constexpr const char* kSchemaVersion = "1";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Largest-remainder apportionment: counts sum to n, each within 1 of f*n.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions) {
    std::vector<std::size_t> counts(fractions.size());
    std::vector<std::pair<double, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        double exact = fractions[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        rema.emplace_back(exact - std::floor(exact), i);
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[rema[i % rema.size()].second]++;
    return counts;
}

int vocab_index(std::vector<std::string>& vocab, const std::string& name, bool frozen,
                const std::string& what) {
    auto it = std::find(vocab.begin(), vocab.end(), name);
    if (it != vocab.end()) return static_cast<int>(it - vocab.begin());
    if (frozen)
        throw VocabularyError("unknown " + what + " '" + name + "' not present in sidecar vocabulary");
    vocab.push_back(name);
    return static_cast<int>(vocab.size() - 1);
}

}  // namespace

std::string poison_tag_name(PoisonTag tag) {
    switch (tag) {
        case PoisonTag::clean: return "clean";
        case PoisonTag::attr: return "attr";
        case PoisonTag::attr_bd: return "attr+bd";
    }
    return "clean";
}

PoisonTag poison_tag_from_name(const std::string& name) {
    if (name == "clean") return PoisonTag::clean;
    if (name == "attr") return PoisonTag::attr;
    if (name == "attr+bd") return PoisonTag::attr_bd;
    throw VocabularyError("unknown poison tag '" + name + "'");
}

std::vector<double> Dataset::feature_column(std::size_t j) const {
    if (j >= n_features()) throw BoundsError("feature index out of range");
    std::vector<double> col(n_samples());
    for (std::size_t i = 0; i < n_samples(); ++i) col[i] = at(i, j);
    return col;
}

const AttributeColumn& Dataset::attribute(const std::string& name) const {
    for (const auto& a : attributes)
        if (a.name == name) return a;
    throw LookupError("unknown attribute '" + name + "'");
}

bool Dataset::has_attribute(const std::string& name) const {
    for (const auto& a : attributes)
        if (a.name == name) return true;
    return false;
}

int Dataset::group_index(const std::string& attribute_name, const std::string& group) const {
    const auto& attr = attribute(attribute_name);
    auto it = std::find(attr.group_names.begin(), attr.group_names.end(), group);
    if (it == attr.group_names.end())
        throw LookupError("unknown group '" + group + "' for attribute '" + attribute_name + "'");
    return static_cast<int>(it - attr.group_names.begin());
}

int Dataset::class_index(const std::string& class_name) const {
    auto it = std::find(class_names.begin(), class_names.end(), class_name);
    if (it == class_names.end()) throw LookupError("unknown class '" + class_name + "'");
    return static_cast<int>(it - class_names.begin());
}

void Dataset::validate() const {
    const std::size_t n = n_samples();
    const std::size_t d = n_features();
    const std::size_t k = n_classes();
    if (n < 1 || d < 1) throw ShapeError("dataset requires n >= 1 and d >= 1");
    if (k < 2) throw ShapeError("dataset requires at least 2 classes");
    if (values.size() != n * d) throw ShapeError("feature matrix is not rectangular n x d");
    if (labels.size() != n) throw ShapeError("label vector length mismatch");
    if (!tags.empty() && tags.size() != n) throw ShapeError("poison tag vector length mismatch");
    if (!min_shifts.empty() && min_shifts.size() != d)
        throw ShapeError("min-shift vector length mismatch");
    for (double v : values)
        if (!(v >= 0.0)) throw DomainError("feature values must be non-negative and finite");
    for (int lab : labels)
        if (lab < 0 || static_cast<std::size_t>(lab) >= k) throw BoundsError("label out of range");
    for (const auto& a : attributes) {
        if (a.groups.size() != n)
            throw ShapeError("attribute '" + a.name + "' does not cover every sample");
        for (int g : a.groups)
            if (g < 0 || static_cast<std::size_t>(g) >= a.group_names.size())
                throw BoundsError("group index out of range for attribute '" + a.name + "'");
    }
}

std::uint64_t Dataset::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (double v : values) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        mix(bits);
    }
    for (int lab : labels) mix(static_cast<std::uint64_t>(lab));
    for (const auto& a : attributes)
        for (int g : a.groups) mix(static_cast<std::uint64_t>(g));
    return h;
}

double encode_snv(MutationType type, MutationImpact impact, const SnvWeights& weights) {
    double tw = (type == MutationType::deleterious) ? weights.deleterious : weights.tolerated;
    double iw = 0.0;
    switch (impact) {
        case MutationImpact::high: iw = weights.high; break;
        case MutationImpact::moderate: iw = weights.moderate; break;
        case MutationImpact::low: iw = weights.low; break;
        case MutationImpact::modifier: iw = weights.modifier; break;
    }
    return tw * iw;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");

    // Sidecar vocabularies freeze the label/group string spaces when present.
    nlohmann::json sidecar;
    bool have_sidecar = false;
    {
        std::ifstream meta(path + ".meta.json");
        if (meta) {
            meta >> sidecar;
            have_sidecar = true;
        }
    }

    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty file '" + path + "'");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols = split_line(header);
    if (cols.size() < 3 || cols[0] != "sample_id")
        throw ParseError("header must start with 'sample_id' and contain features and 'label'");

    std::size_t label_col = 0;
    for (std::size_t i = 1; i < cols.size(); ++i)
        if (cols[i] == "label") {
            label_col = i;
            break;
        }
    if (label_col == 0) throw ParseError("header does not name a 'label' column");
    if (label_col == 1) throw ParseError("header declares no feature columns");

    Dataset ds;
    for (std::size_t i = 1; i < label_col; ++i) ds.feature_names.push_back(cols[i]);

    bool has_tag_col = false;
    for (std::size_t i = label_col + 1; i < cols.size(); ++i) {
        if (cols[i] == "poison_tag") {
            if (i + 1 != cols.size()) throw ParseError("'poison_tag' must be the last column");
            has_tag_col = true;
        } else if (cols[i].rfind("attr:", 0) == 0) {
            AttributeColumn attr;
            attr.name = cols[i].substr(5);
            ds.attributes.push_back(std::move(attr));
        } else {
            throw ParseError("unexpected column '" + cols[i] + "' after the label column");
        }
    }

    bool frozen = false;
    if (have_sidecar) {
        for (const auto& c : sidecar.at("classes")) ds.class_names.push_back(c.get<std::string>());
        for (auto& attr : ds.attributes) {
            auto it = sidecar.at("attributes").find(attr.name);
            if (it != sidecar.at("attributes").end())
                for (const auto& g : *it) attr.group_names.push_back(g.get<std::string>());
        }
        frozen = true;
    }

    const std::size_t d = ds.feature_names.size();
    const std::size_t expected_cols = cols.size();
    std::string line;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != expected_cols)
            throw ParseError("row " + std::to_string(row_no) + ": expected " +
                             std::to_string(expected_cols) + " fields, got " +
                             std::to_string(cells.size()));
        ds.sample_ids.push_back(cells[0]);
        for (std::size_t j = 0; j < d; ++j) {
            const std::string& cell = cells[1 + j];
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != cell.size() || cell.empty())
                throw ParseError("row " + std::to_string(row_no) + ", column '" +
                                 ds.feature_names[j] + "': non-numeric feature value '" + cell + "'");
            if (!std::isfinite(v))
                throw ParseError("row " + std::to_string(row_no) + ", column '" +
                                 ds.feature_names[j] + "': non-finite feature value");
            ds.values.push_back(v);
        }
        ds.labels.push_back(vocab_index(ds.class_names, cells[label_col], frozen, "label"));
        std::size_t attr_i = 0;
        for (std::size_t i = label_col + 1; i < cols.size(); ++i) {
            if (has_tag_col && i + 1 == cols.size()) {
                ds.tags.push_back(poison_tag_from_name(cells[i]));
            } else {
                auto& attr = ds.attributes[attr_i++];
                attr.groups.push_back(vocab_index(attr.group_names, cells[i], frozen, "group"));
            }
        }
    }
    if (ds.sample_ids.empty()) throw ParseError("dataset '" + path + "' has no data rows");
    if (!has_tag_col) ds.tags.assign(ds.n_samples(), PoisonTag::clean);

    // Min-shift every feature column to non-negative; record the shift.
    ds.min_shifts.assign(d, 0.0);
    if (have_sidecar && sidecar.contains("min_shifts"))
        for (std::size_t j = 0; j < d && j < sidecar["min_shifts"].size(); ++j)
            ds.min_shifts[j] = sidecar["min_shifts"][j].get<double>();
    for (std::size_t j = 0; j < d; ++j) {
        double mn = ds.at(0, j);
        for (std::size_t i = 1; i < ds.n_samples(); ++i) mn = std::min(mn, ds.at(i, j));
        if (mn < 0.0) {
            for (std::size_t i = 0; i < ds.n_samples(); ++i) ds.values[i * d + j] -= mn;
            ds.min_shifts[j] += -mn;
        }
    }
    ds.validate();
    return ds;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    dataset.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file '" + path + "'");
    bool write_tags = std::any_of(dataset.tags.begin(), dataset.tags.end(),
                                  [](PoisonTag t) { return t != PoisonTag::clean; });
    out << "sample_id";
    for (const auto& f : dataset.feature_names) out << ',' << f;
    out << ",label";
    for (const auto& a : dataset.attributes) out << ",attr:" << a.name;
    if (write_tags) out << ",poison_tag";
    out << '\n';
    const std::size_t d = dataset.n_features();
    for (std::size_t i = 0; i < dataset.n_samples(); ++i) {
        out << dataset.sample_ids[i];
        for (std::size_t j = 0; j < d; ++j) out << ',' << format_double(dataset.at(i, j));
        out << ',' << dataset.class_names[dataset.labels[i]];
        for (const auto& a : dataset.attributes) out << ',' << a.group_names[a.groups[i]];
        if (write_tags) out << ',' << poison_tag_name(dataset.tags[i]);
        out << '\n';
    }

    nlohmann::json sidecar;
    sidecar["schema_version"] = kSchemaVersion;
    sidecar["classes"] = dataset.class_names;
    nlohmann::json attrs = nlohmann::json::object();
    for (const auto& a : dataset.attributes) attrs[a.name] = a.group_names;
    sidecar["attributes"] = attrs;
    sidecar["min_shifts"] = dataset.min_shifts;
    std::ofstream meta(path + ".meta.json");
    if (!meta) throw IoError("cannot write sidecar for '" + path + "'");
    meta << sidecar.dump(2) << '\n';
}

Dataset synthesize(const SynthConfig& config) {
    const std::size_t n = config.n_samples;
    const std::size_t d = config.n_features;
    const std::size_t k = config.n_classes;
    if (n < 1 || d < 1) throw ConfigError("synthesize: n_samples and n_features must be positive");
    if (k < 2) throw ConfigError("synthesize: n_classes must be >= 2");
    for (const auto& spec : config.attributes) {
        if (spec.group_names.size() != spec.fractions.size() || spec.group_names.size() < 2)
            throw ConfigError("synthesize: attribute '" + spec.name +
                              "' needs matching group names and fractions (>= 2 groups)");
        double sum = 0.0;
        for (double f : spec.fractions) {
            if (f * static_cast<double>(n) < 1.0)
                throw ConfigError("synthesize: attribute '" + spec.name +
                                  "' has a group with fewer than one expected sample");
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("synthesize: attribute '" + spec.name +
                              "' group fractions must sum to 1");
        if (!spec.class_affinity.empty()) {
            if (spec.class_affinity.size() != k)
                throw ConfigError("synthesize: attribute '" + spec.name +
                                  "' class_affinity needs one weight per class");
            double total = 0.0;
            for (double w : spec.class_affinity) {
                if (w < 0.0)
                    throw ConfigError("synthesize: attribute '" + spec.name +
                                      "' class_affinity weights must be non-negative");
                total += w;
            }
            if (total <= 0.0)
                throw ConfigError("synthesize: attribute '" + spec.name +
                                  "' class_affinity weights must not all be zero");
        }
    }

    Dataset ds;
    ds.feature_names.resize(d);
    for (std::size_t j = 0; j < d; ++j) ds.feature_names[j] = "G" + std::to_string(j);
    ds.class_names.resize(k);
    for (std::size_t c = 0; c < k; ++c) ds.class_names[c] = "class_" + std::to_string(c);
    ds.sample_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "S%06zu", i);
        ds.sample_ids[i] = buf;
    }

    // Balanced class assignment, seeded shuffle.
    {
        std::vector<double> even(k, 1.0 / static_cast<double>(k));
        auto counts = apportion(n, even);
        for (std::size_t c = 0; c < k; ++c)
            ds.labels.insert(ds.labels.end(), counts[c], static_cast<int>(c));
        Rng rng(derive_seed(config.seed, {0xA11}));
        rng.shuffle(ds.labels);
    }

    // Attribute group assignment within one sample of the requested fractions.
    for (std::size_t ai = 0; ai < config.attributes.size(); ++ai) {
        const auto& spec = config.attributes[ai];
        AttributeColumn col;
        col.name = spec.name;
        col.group_names = spec.group_names;
        auto counts = apportion(n, spec.fractions);
        Rng rng(derive_seed(config.seed, {0xA77, ai}));
        if (spec.class_affinity.empty()) {
            for (std::size_t g = 0; g < counts.size(); ++g)
                col.groups.insert(col.groups.end(), counts[g], static_cast<int>(g));
            rng.shuffle(col.groups);
        } else {
            // Weighted sampling without replacement (Efraimidis-Spirakis keys):
            // rows whose class has a larger affinity weight are more likely to
            // land in group 0; the remaining rows are shuffled over the other
            // groups so every group count still matches `fractions`.
            std::vector<std::pair<double, std::size_t>> keyed(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = spec.class_affinity[static_cast<std::size_t>(ds.labels[i])];
                const double u = rng.uniform(1e-12, 1.0);
                const double key = w > 0.0 ? std::pow(u, 1.0 / w)
                                           : -1.0;  // zero weight: only if group 0 needs filling
                keyed[i] = {key, i};
            }
            std::sort(keyed.begin(), keyed.end(), std::greater<>());
            col.groups.assign(n, 0);
            std::vector<int> rest;
            for (std::size_t g = 1; g < counts.size(); ++g)
                rest.insert(rest.end(), counts[g], static_cast<int>(g));
            rng.shuffle(rest);
            for (std::size_t r = counts[0]; r < n; ++r)
                col.groups[keyed[r].second] = rest[r - counts[0]];
        }
        ds.attributes.push_back(std::move(col));
    }

    // Feature layout: a class-informative block at the front, one block per
    // attribute at the tail (so the attribute stays learnable from genuine
    // features), noise in between.
    const std::size_t attr_block = std::max<std::size_t>(1, d / 10);
    const std::size_t n_attr_blocks = config.attributes.size();
    if (attr_block * n_attr_blocks >= d)
        throw ConfigError("synthesize: too many attributes for the feature count");
    const std::size_t class_block = std::min(d - attr_block * n_attr_blocks,
                                             std::max<std::size_t>(1, (d * 2) / 5));

    std::vector<double> class_mean(k * d, 1.0);
    {
        Rng rng(derive_seed(config.seed, {0xC1A}));
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < class_block; ++j)
                class_mean[c * d + j] += config.class_signal * rng.uniform();
    }
    // attr_offset[attribute][group][feature within block]
    std::vector<std::vector<std::vector<double>>> attr_offset(n_attr_blocks);
    for (std::size_t ai = 0; ai < n_attr_blocks; ++ai) {
        Rng rng(derive_seed(config.seed, {0xAFF, ai}));
        const std::size_t n_groups = config.attributes[ai].group_names.size();
        attr_offset[ai].assign(n_groups, std::vector<double>(attr_block, 0.0));
        // each group owns an exclusive slice of the block (round-robin) so the
        // groups are separable from genuine features
        for (std::size_t j = 0; j < attr_block; ++j) {
            const std::size_t owner = j % n_groups;
            attr_offset[ai][owner][j] = config.attribute_signal * rng.uniform(0.5, 1.0);
        }
    }

    ds.values.resize(n * d);
    Rng rng(derive_seed(config.seed, {0xDA7A}));
    for (std::size_t i = 0; i < n; ++i) {
        const int c = ds.labels[i];
        for (std::size_t j = 0; j < d; ++j) {
            double mu = class_mean[static_cast<std::size_t>(c) * d + j];
            for (std::size_t ai = 0; ai < n_attr_blocks; ++ai) {
                std::size_t start = d - attr_block * (ai + 1);
                if (j >= start && j < start + attr_block)
                    mu += attr_offset[ai][ds.attributes[ai].groups[i]][j - start];
            }
            ds.values[i * d + j] = std::max(0.0, rng.normal(mu, config.noise));
        }
    }

    // Spike genes: one feature per class, placed right after the class block,
    // with no class-linked mean but rare extreme values that all occur in the
    // host class. They widen the observed value range so that a sparse
    // low-density region exists between the bulk and the spikes.
    if (config.spike_rate > 0.0) {
        if (class_block + k > d - attr_block * n_attr_blocks)
            throw ConfigError("synthesize: not enough features for one spike gene per class");
        const std::size_t spike_count = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(config.spike_rate * static_cast<double>(n))));
        std::vector<std::vector<std::size_t>> by_class(k);
        for (std::size_t i = 0; i < n; ++i)
            by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t j = class_block + c;
            const auto& host = by_class[c];
            if (host.empty()) continue;
            Rng srng(derive_seed(config.seed, {0x5B1C, j}));
            const auto picks = srng.sample_indices(host.size(), std::min(spike_count, host.size()));
            for (std::size_t p : picks)
                ds.values[host[p] * d + j] = srng.uniform(config.spike_lo, config.spike_hi);
        }
    }
    ds.min_shifts.assign(d, 0.0);
    ds.tags.assign(n, PoisonTag::clean);
    ds.validate();
    return ds;
}

Dataset take_rows(const Dataset& src, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = src.feature_names;
    out.class_names = src.class_names;
    out.min_shifts = src.min_shifts;
    const std::size_t d = src.n_features();
    out.values.reserve(rows.size() * d);
    for (std::size_t i : rows) {
        out.sample_ids.push_back(src.sample_ids[i]);
        const auto r = src.row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.labels.push_back(src.labels[i]);
        out.tags.push_back(src.tags.empty() ? PoisonTag::clean : src.tags[i]);
    }
    for (const auto& a : src.attributes) {
        AttributeColumn col;
        col.name = a.name;
        col.group_names = a.group_names;
        for (std::size_t i : rows) col.groups.push_back(a.groups[i]);
        out.attributes.push_back(std::move(col));
    }
    return out;
}

SplitPair split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    const std::size_t n = dataset.n_samples();
    if (n < 2) throw SizeError("split: need at least 2 samples");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw SizeError("split: train_fraction must lie strictly between 0 and 1");
    std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(seed, {0x5B117}));
    rng.shuffle(idx);
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> test_idx(idx.begin() + n_train, idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {take_rows(dataset, train_idx), take_rows(dataset, test_idx)};
}

double sample_percentage(const Dataset& dataset, const std::string& attribute,
                         const std::string& group) {
    const auto& attr = dataset.attribute(attribute);
    const int g = dataset.group_index(attribute, group);
    std::size_t count = 0;
    for (int gi : attr.groups)
        if (gi == g) ++count;
    return static_cast<double>(count) / static_cast<double>(dataset.n_samples());
}

Dataset make_biased_subset(const Dataset& dataset, const std::string& attribute,
                           const std::string& biasing_group, double s_target,
                           std::uint64_t seed) {
    const auto& attr = dataset.attribute(attribute);
    const int g = dataset.group_index(attribute, biasing_group);
    std::vector<std::size_t> group_rows, other_rows;
    for (std::size_t i = 0; i < dataset.n_samples(); ++i)
        (attr.groups[i] == g ? group_rows : other_rows).push_back(i);
    const double n_g = static_cast<double>(group_rows.size());
    const double n = static_cast<double>(dataset.n_samples());
    const double current = n_g / n;
    if (s_target < current - 1e-12)
        throw InfeasibilityError("make_biased_subset: s_target below the current sample "
                                 "percentage; bias is created only by removing non-group samples");
    if (s_target <= current) return dataset;  // already there, zero removals

    // n_g / (n - t) = s  =>  t = n - n_g / s
    const double exact_t = n - n_g / s_target;
    const auto n_other = static_cast<double>(other_rows.size());
    double best_t = -1.0, best_err = 0.0;
    for (double t : {std::floor(exact_t), std::ceil(exact_t)}) {
        if (t < 0.0 || t > n_other) continue;
        double s = n_g / (n - t);
        double err = std::abs(s - s_target);
        if (best_t < 0.0 || err < best_err) {
            best_t = t;
            best_err = err;
        }
    }
    if (best_t < 0.0)
        throw InfeasibilityError("make_biased_subset: removable pool exhausted before reaching "
                                 "s_target");
    const auto t = static_cast<std::size_t>(best_t);
    if (t == 0) return dataset;

    Rng rng(derive_seed(seed, {0xB1A5}));
    auto remove_sel = rng.sample_indices(other_rows.size(), t);
    std::vector<bool> removed(dataset.n_samples(), false);
    for (std::size_t sel : remove_sel) removed[other_rows[sel]] = true;
    std::vector<std::size_t> keep;
    keep.reserve(dataset.n_samples() - t);
    for (std::size_t i = 0; i < dataset.n_samples(); ++i)
        if (!removed[i]) keep.push_back(i);
    return take_rows(dataset, keep);
}

}  // namespace bdaudit
