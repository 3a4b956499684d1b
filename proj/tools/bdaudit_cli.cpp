// Command-line front end for the bias-audit library: dataset synthesis and
// ingestion, feature scoring, trigger search, poisoning sweeps, curve fitting,
// reference libraries, bias detection, and the end-to-end audit pipeline.
//
// Exit codes: 0 success, 2 config/I-O error, 3 training divergence,
// 4 pipeline-stage failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdaudit/audit.hpp"
#include "bdaudit/dataset.hpp"
#include "bdaudit/errors.hpp"
#include "bdaudit/leak.hpp"
#include "bdaudit/model.hpp"
#include "bdaudit/poison.hpp"
#include "bdaudit/rng.hpp"
#include "bdaudit/stats.hpp"
#include "bdaudit/svg.hpp"
#include "bdaudit/trigger.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bdaudit;

namespace {

constexpr const char* kSchemaVersion = "1";

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Shared state for one CLI invocation: effective config, output directory,
// and the artifact ledger feeding manifest.json.
struct RunContext {
    std::string command;
    json config;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    bool quiet = false;
    std::map<std::string, std::string> artifacts;  // file name -> checksum

    std::string out_path(const std::string& name) const {
        return (fs::path(out_dir) / name).string();
    }

    void say(const std::string& line) const {
        if (!quiet) std::cout << line << '\n';
    }

    // Register a file that was just written into the output directory.
    void record(const std::string& name) {
        artifacts[name] = hex64(fnv1a(read_file(out_path(name))));
    }

    void write_artifact(const std::string& name, const std::string& content) {
        const std::string path = out_path(name);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write artifact '" + path + "'");
        out << content;
        out.close();
        record(name);
    }

    void write_manifest() {
        json m;
        m["schema_version"] = kSchemaVersion;
        m["command"] = command;
        m["seed"] = seed;
        m["jobs"] = jobs;
        m["config_hash"] = hex64(fnv1a(config.dump()));
        json arts = json::object();
        for (const auto& [name, sum] : artifacts) arts[name] = sum;
        m["artifacts"] = arts;
        const std::string path = out_path("manifest.json");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write manifest '" + path + "'");
        out << m.dump(2) << '\n';
    }
};

// Rejects unknown keys so config typos fail loudly instead of silently
// falling back to defaults.
void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
    if (!j.is_object()) throw ConfigError("config section '" + context + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const auto& a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + key + "' in config section '" + context + "'");
    }
}

std::string require_string(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key))
        throw ConfigError("config section '" + context + "' is missing required key '" + key + "'");
    return j.at(key).get<std::string>();
}

TrainConfig parse_train(const json& j, const std::string& context) {
    check_keys(j, {"learning_rate", "epochs", "l2_penalty", "tolerance"}, context);
    TrainConfig tc;
    tc.learning_rate = j.value("learning_rate", tc.learning_rate);
    tc.epochs = j.value("epochs", tc.epochs);
    tc.l2_penalty = j.value("l2_penalty", tc.l2_penalty);
    tc.tolerance = j.value("tolerance", tc.tolerance);
    return tc;
}

SearchConfig parse_search(const json& j, const RunContext& ctx, const std::string& context) {
    check_keys(j,
               {"attack_floor", "clean_drop_ceiling", "max_features", "candidates_per_feature",
                "eval_poison_percent", "max_results", "train"},
               context);
    SearchConfig sc;
    sc.attack_floor = j.value("attack_floor", sc.attack_floor);
    sc.clean_drop_ceiling = j.value("clean_drop_ceiling", sc.clean_drop_ceiling);
    sc.max_features = j.value("max_features", sc.max_features);
    sc.candidates_per_feature = j.value("candidates_per_feature", sc.candidates_per_feature);
    sc.eval_poison_percent = j.value("eval_poison_percent", sc.eval_poison_percent);
    sc.max_results = j.value("max_results", sc.max_results);
    if (j.contains("train")) sc.train = parse_train(j.at("train"), context + ".train");
    sc.jobs = ctx.jobs;
    sc.seed = ctx.seed;
    return sc;
}

SweepConfig parse_sweep(const json& j, const RunContext& ctx, const std::string& context) {
    check_keys(j, {"p_grid", "repeats", "train"}, context);
    SweepConfig sc;
    if (j.contains("p_grid")) sc.p_grid = j.at("p_grid").get<std::vector<double>>();
    sc.repeats = j.value("repeats", sc.repeats);
    if (j.contains("train")) sc.train = parse_train(j.at("train"), context + ".train");
    sc.jobs = ctx.jobs;
    return sc;
}

SynthConfig parse_synth(const json& j, const RunContext& ctx) {
    check_keys(j,
               {"n_samples", "n_features", "n_classes", "attributes", "class_signal",
                "attribute_signal", "noise", "spike_rate", "spike_lo", "spike_hi"},
               "synth");
    SynthConfig sc;
    sc.n_samples = j.value("n_samples", sc.n_samples);
    sc.n_features = j.value("n_features", sc.n_features);
    sc.n_classes = j.value("n_classes", sc.n_classes);
    sc.class_signal = j.value("class_signal", sc.class_signal);
    sc.attribute_signal = j.value("attribute_signal", sc.attribute_signal);
    sc.noise = j.value("noise", sc.noise);
    sc.spike_rate = j.value("spike_rate", sc.spike_rate);
    sc.spike_lo = j.value("spike_lo", sc.spike_lo);
    sc.spike_hi = j.value("spike_hi", sc.spike_hi);
    if (j.contains("attributes")) {
        for (const auto& aj : j.at("attributes")) {
            check_keys(aj, {"name", "groups", "fractions", "class_affinity"},
                       "synth.attributes[]");
            AttributeSpec spec;
            spec.name = require_string(aj, "name", "synth.attributes[]");
            spec.group_names = aj.at("groups").get<std::vector<std::string>>();
            spec.fractions = aj.at("fractions").get<std::vector<double>>();
            if (aj.contains("class_affinity"))
                spec.class_affinity = aj.at("class_affinity").get<std::vector<double>>();
            sc.attributes.push_back(std::move(spec));
        }
    }
    sc.seed = ctx.seed;
    return sc;
}

AuditConfig parse_audit(const json& j, const RunContext& ctx) {
    check_keys(j,
               {"attribute", "group", "s_grid", "sweep", "search", "attr_trigger_features",
                "score_attr_against_attribute", "attr_fraction_init", "attr_fraction_step",
                "attr_fraction_max", "parity_slack", "tumor_drop_slack", "bias_threshold",
                "exclusion", "s_true"},
               "audit");
    AuditConfig ac;
    ac.attribute = require_string(j, "attribute", "audit");
    ac.group = require_string(j, "group", "audit");
    if (j.contains("s_grid")) ac.s_grid = j.at("s_grid").get<std::vector<double>>();
    if (j.contains("sweep")) ac.sweep = parse_sweep(j.at("sweep"), ctx, "audit.sweep");
    if (j.contains("search")) ac.search = parse_search(j.at("search"), ctx, "audit.search");
    ac.attr_trigger_features = j.value("attr_trigger_features", ac.attr_trigger_features);
    ac.score_attr_against_attribute =
        j.value("score_attr_against_attribute", ac.score_attr_against_attribute);
    ac.attr_fraction_init = j.value("attr_fraction_init", ac.attr_fraction_init);
    ac.attr_fraction_step = j.value("attr_fraction_step", ac.attr_fraction_step);
    ac.attr_fraction_max = j.value("attr_fraction_max", ac.attr_fraction_max);
    ac.parity_slack = j.value("parity_slack", ac.parity_slack);
    ac.tumor_drop_slack = j.value("tumor_drop_slack", ac.tumor_drop_slack);
    ac.bias_threshold = j.value("bias_threshold", ac.bias_threshold);
    if (j.contains("exclusion"))
        ac.exclusion = ExclusionList::load(j.at("exclusion").get<std::string>());
    if (j.contains("s_true")) ac.s_true = j.at("s_true").get<double>();
    ac.seed = ctx.seed;
    ac.jobs = ctx.jobs;
    return ac;
}

// Inverse of BackdoorPlan::to_json: resolve feature/group/class names against
// the dataset the plan will be applied to.
BackdoorPlan plan_from_json(const json& j, const Dataset& ds) {
    check_keys(j, {"schema_version", "attribute_trigger", "secondary", "attribute_poison_fraction",
                   "seed"},
               "plan");
    BackdoorPlan plan;
    const json& at = j.at("attribute_trigger");
    plan.attribute_trigger.attribute = require_string(at, "attribute", "plan.attribute_trigger");
    for (const auto& name : at.at("features")) {
        const std::string fname = name.get<std::string>();
        bool found = false;
        for (std::size_t f = 0; f < ds.feature_names.size(); ++f)
            if (ds.feature_names[f] == fname) {
                plan.attribute_trigger.features.push_back(f);
                found = true;
                break;
            }
        if (!found) throw LookupError("plan references unknown feature '" + fname + "'");
    }
    plan.attribute_trigger.value = at.at("value").get<double>();
    const auto& attr = ds.attribute(plan.attribute_trigger.attribute);
    for (const auto& [group_name, class_name] : at.at("encoding").items()) {
        const int g = ds.group_index(plan.attribute_trigger.attribute, group_name);
        const int c = ds.class_index(class_name.get<std::string>());
        plan.attribute_trigger.encoding[g] = c;
    }
    (void)attr;
    const json& sec = j.at("secondary");
    const std::string sec_name = require_string(sec, "feature", "plan.secondary");
    std::optional<std::size_t> sec_idx;
    for (std::size_t f = 0; f < ds.feature_names.size(); ++f)
        if (ds.feature_names[f] == sec_name) sec_idx = f;
    if (!sec_idx) throw LookupError("plan references unknown feature '" + sec_name + "'");
    plan.secondary = Trigger({*sec_idx}, sec.at("value").get<double>());
    plan.secondary_target = ds.class_index(require_string(sec, "target_label", "plan.secondary"));
    plan.attribute_poison_fraction =
        j.value("attribute_poison_fraction", plan.attribute_poison_fraction);
    plan.seed = j.value("seed", plan.seed);
    plan.validate(ds);
    return plan;
}

AccuracyCurve load_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read curve file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "x,y_mean,y_std,repeats")
        throw ParseError("curve file '" + path + "': bad header");
    AccuracyCurve curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        CurvePoint pt;
        try {
            std::getline(row, cell, ',');
            pt.x = std::stoull(cell);
            std::getline(row, cell, ',');
            pt.y_mean = std::stod(cell);
            std::getline(row, cell, ',');
            pt.y_std = std::stod(cell);
            std::getline(row, cell, ',');
            std::istringstream raw(cell);
            std::string one;
            while (std::getline(raw, one, ';'))
                if (!one.empty()) pt.repeats.push_back(std::stod(one));
        } catch (const std::exception&) {
            throw ParseError("curve file '" + path + "': malformed row '" + line + "'");
        }
        curve.repeats = std::max(curve.repeats, pt.repeats.size());
        curve.points.push_back(std::move(pt));
    }
    curve.validate();
    return curve;
}

json attribute_trigger_json(const AttributeTrigger& trig, const Dataset& ds) {
    json at;
    at["attribute"] = trig.attribute;
    at["feature_indices"] = trig.features;
    json names = json::array();
    for (std::size_t f : trig.features) names.push_back(ds.feature_names[f]);
    at["features"] = names;
    at["value"] = trig.value;
    json enc = json::object();
    const auto& attr = ds.attribute(trig.attribute);
    for (const auto& [group, label] : trig.encoding)
        enc[attr.group_names[group]] = ds.class_names[label];
    at["encoding"] = enc;
    return at;
}

void print_dataset_summary(const RunContext& ctx, const Dataset& ds, const std::string& what) {
    std::ostringstream s;
    s << what << ": n=" << ds.n_samples() << " d=" << ds.n_features() << " k=" << ds.n_classes();
    ctx.say(s.str());
    for (const auto& attr : ds.attributes) {
        std::ostringstream a;
        a << "  attribute " << attr.name << ":";
        for (const auto& g : attr.group_names) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " %s=%.3f", g.c_str(),
                          sample_percentage(ds, attr.name, g));
            a << buf;
        }
        ctx.say(a.str());
    }
}

// ---------------------------------------------------------------- commands

void cmd_synth(RunContext& ctx) {
    check_keys(ctx.config, {"schema_version", "seed", "jobs", "synth"}, "config");
    if (!ctx.config.contains("synth")) throw ConfigError("synth: missing 'synth' config section");
    const SynthConfig sc = parse_synth(ctx.config.at("synth"), ctx);
    const Dataset ds = synthesize(sc);
    save_csv(ds, ctx.out_path("data.csv"));
    ctx.record("data.csv");
    ctx.record("data.csv.meta.json");
    print_dataset_summary(ctx, ds, "synthesized dataset");
}

void cmd_ingest(RunContext& ctx) {
    check_keys(ctx.config, {"schema_version", "seed", "jobs", "dataset"}, "config");
    const Dataset ds = load_csv(require_string(ctx.config, "dataset", "config"));
    ds.validate();
    save_csv(ds, ctx.out_path("ingested.csv"));
    ctx.record("ingested.csv");
    ctx.record("ingested.csv.meta.json");
    print_dataset_summary(ctx, ds, "ingested dataset");
}

void cmd_chi2(RunContext& ctx) {
    check_keys(ctx.config, {"schema_version", "seed", "jobs", "dataset", "target"}, "config");
    const Dataset ds = load_csv(require_string(ctx.config, "dataset", "config"));
    const std::string target = ctx.config.value("target", std::string("label"));
    const Chi2Report report = chi2_scores(ds, target);
    save_chi2_csv(report, ds.feature_names, ctx.out_path("chi2.csv"));
    ctx.record("chi2.csv");
    ctx.say("chi2 scores for " + std::to_string(ds.n_features()) + " features written (target: " +
            target + ")");
}

void cmd_trigger_search(RunContext& ctx) {
    check_keys(ctx.config,
               {"schema_version", "seed", "jobs", "dataset", "train_fraction", "target_class",
                "exclusion", "search"},
               "config");
    const Dataset ds = load_csv(require_string(ctx.config, "dataset", "config"));
    const double frac = ctx.config.value("train_fraction", 0.6);
    const SplitPair parts = split(ds, frac, derive_seed(ctx.seed, {0x5B117}));
    const int target = ds.class_index(require_string(ctx.config, "target_class", "config"));
    SearchConfig sc;
    if (ctx.config.contains("search")) sc = parse_search(ctx.config.at("search"), ctx, "search");
    sc.jobs = ctx.jobs;
    sc.seed = ctx.seed;
    ExclusionList exclusion;
    if (ctx.config.contains("exclusion"))
        exclusion = ExclusionList::load(ctx.config.at("exclusion").get<std::string>());

    const auto results = search_triggers(parts.train, parts.test, target, sc, exclusion);
    ctx.write_artifact("triggers.json", search_report_json(results, ds.feature_names));
    ctx.say("trigger search: " + std::to_string(results.size()) + " trigger(s) satisfy the "
            "constraints");
    if (results.empty()) ctx.say("no triggers found; report written with count 0");
}

void cmd_attr_design(RunContext& ctx) {
    check_keys(ctx.config,
               {"schema_version", "seed", "jobs", "dataset", "attribute", "features",
                "score_against_attribute"},
               "config");
    const Dataset ds = load_csv(require_string(ctx.config, "dataset", "config"));
    const std::string attribute = require_string(ctx.config, "attribute", "config");
    const std::size_t m = ctx.config.value("features", std::size_t{10});
    const bool vs_attr = ctx.config.value("score_against_attribute", false);
    const AttributeTrigger trig = design_attribute_trigger(ds, attribute, m, vs_attr);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["attribute_trigger"] = attribute_trigger_json(trig, ds);
    ctx.write_artifact("attr_trigger.json", j.dump(2));
    ctx.say("attribute trigger designed: " + std::to_string(trig.features.size()) +
            " features, value " + std::to_string(trig.value));
}

void cmd_sweep(RunContext& ctx) {
    check_keys(ctx.config,
               {"schema_version", "seed", "jobs", "train_dataset", "test_dataset", "plan",
                "sweep"},
               "config");
    const Dataset train_set = load_csv(require_string(ctx.config, "train_dataset", "config"));
    const Dataset test_set = load_csv(require_string(ctx.config, "test_dataset", "config"));
    const json plan_json = json::parse(read_file(require_string(ctx.config, "plan", "config")));
    const BackdoorPlan plan = plan_from_json(plan_json, train_set);
    SweepConfig sc;
    if (ctx.config.contains("sweep")) sc = parse_sweep(ctx.config.at("sweep"), ctx, "sweep");
    sc.jobs = ctx.jobs;
    const AccuracyCurve curve = sweep(train_set, plan, sc, test_set, ctx.seed);
    save_curve_csv(curve, ctx.out_path("curve.csv"));
    ctx.record("curve.csv");
    ctx.say("sweep complete: " + std::to_string(curve.points.size()) + " curve points");
}

void cmd_fit(RunContext& ctx) {
    check_keys(ctx.config, {"schema_version", "seed", "jobs", "curve"}, "config");
    const AccuracyCurve curve = load_curve_csv(require_string(ctx.config, "curve", "config"));
    const FittedCurve fit = fit_curve(remove_outliers(curve));
    json j;
    j["schema_version"] = kSchemaVersion;
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["c"] = fit.c;
    j["rmse"] = fit.rmse;
    j["x_lo"] = fit.x_lo;
    j["x_hi"] = fit.x_hi;
    j["iterations"] = fit.iterations;
    ctx.write_artifact("fit.json", j.dump(2));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "fit: a=%.4f b=%.6f c=%.4f rmse=%.4g", fit.a, fit.b, fit.c,
                  fit.rmse);
    ctx.say(buf);
}

void cmd_reflib(RunContext& ctx) {
    check_keys(ctx.config,
               {"schema_version", "seed", "jobs", "dataset", "attribute", "group", "s_grid",
                "plan", "sweep"},
               "config");
    const Dataset ds = load_csv(require_string(ctx.config, "dataset", "config"));
    const std::string attribute = require_string(ctx.config, "attribute", "config");
    const std::string group = require_string(ctx.config, "group", "config");
    std::vector<double> s_grid = {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80};
    if (ctx.config.contains("s_grid")) s_grid = ctx.config.at("s_grid").get<std::vector<double>>();
    const json plan_json = json::parse(read_file(require_string(ctx.config, "plan", "config")));
    const BackdoorPlan plan = plan_from_json(plan_json, ds);
    SweepConfig sc;
    if (ctx.config.contains("sweep")) sc = parse_sweep(ctx.config.at("sweep"), ctx, "sweep");
    sc.jobs = ctx.jobs;
    const ReferenceLibrary lib =
        build_reference_library(ds, attribute, group, s_grid, plan, sc, ctx.seed);
    ctx.write_artifact("reflib.json", lib.to_json());
    ctx.say("reference library: " + std::to_string(lib.entries.size()) + " entries, " +
            std::to_string(lib.failures.size()) + " failures");
}

void cmd_detect(RunContext& ctx) {
    check_keys(ctx.config, {"schema_version", "seed", "jobs", "curve", "library",
                            "bias_threshold", "s_true"},
               "config");
    const AccuracyCurve cloud = load_curve_csv(require_string(ctx.config, "curve", "config"));
    const ReferenceLibrary lib =
        ReferenceLibrary::from_json(read_file(require_string(ctx.config, "library", "config")));
    const double threshold = ctx.config.value("bias_threshold", 0.55);
    DetectionReport report = detect(cloud, lib, threshold);
    if (ctx.config.contains("s_true")) {
        report.s_true = ctx.config.at("s_true").get<double>();
        report.estimation_error = std::abs(report.s_hat - *report.s_true);
    }
    ctx.write_artifact("detection.json", report.to_json());
    ctx.write_artifact("detection.txt", report.to_text());
    ctx.say(report.to_text());
}

void cmd_audit(RunContext& ctx, std::string& failed_stage) {
    check_keys(ctx.config,
               {"schema_version", "seed", "jobs", "collab_dataset", "cloud_dataset", "audit"},
               "config");
    const Dataset collab = load_csv(require_string(ctx.config, "collab_dataset", "config"));
    const Dataset cloud = load_csv(require_string(ctx.config, "cloud_dataset", "config"));
    if (!ctx.config.contains("audit")) throw ConfigError("audit: missing 'audit' config section");
    const AuditConfig ac = parse_audit(ctx.config.at("audit"), ctx);

    // Persist partial artifacts after every stage so a late failure still
    // leaves the earlier stages' outputs on disk.
    failed_stage = "plan_design";
    const AuditObserver observer = [&](const std::string& stage, const AuditResult& partial) {
        if (stage == "plan_design") {
            ctx.write_artifact("plan.json", partial.plan.to_json(collab));
            failed_stage = "reference_library";
        } else if (stage == "reference_library") {
            ctx.write_artifact("reflib.json", partial.library.to_json());
            failed_stage = "cloud_sweep";
        } else if (stage == "cloud_sweep") {
            save_curve_csv(partial.cloud_curve, ctx.out_path("curves.csv"));
            ctx.record("curves.csv");
            failed_stage = "detection";
        }
    };

    const AuditResult result = run_audit(collab, cloud, ac, observer);
    failed_stage.clear();

    ctx.write_artifact("audit.json", result.to_json(collab));
    ctx.write_artifact("detection.txt", result.detection.to_text());
    ctx.write_artifact("curves.svg",
                       render_curves_svg(result.library, result.cloud_curve,
                                         result.detection.cloud_fit));
    ctx.say(result.detection.to_text());
}

void cmd_report(RunContext& ctx) {
    check_keys(ctx.config, {"schema_version", "seed", "jobs", "audit"}, "config");
    const json a = json::parse(read_file(require_string(ctx.config, "audit", "config")));
    std::ostringstream out;
    char buf[160];
    out << "audit report\n============\n";
    std::snprintf(buf, sizeof(buf), "clean baseline accuracy: %.4f\n",
                  a.at("clean_baseline").get<double>());
    out << buf;
    const json& val = a.at("attribute_validation");
    std::snprintf(buf, sizeof(buf),
                  "attribute accuracy: %.4f (independent model: %.4f), tumor accuracy: %.4f\n",
                  val.at("attribute_accuracy").get<double>(),
                  val.at("independent_attr_accuracy").get<double>(),
                  val.at("tumor_accuracy").get<double>());
    out << buf;
    const json& sec = a.at("secondary_trigger");
    std::snprintf(buf, sizeof(buf), "secondary trigger: attack %.4f, clean %.4f\n",
                  sec.at("attack_acc").get<double>(), sec.at("clean_acc").get<double>());
    out << buf;
    const json& lib = a.at("reference_library");
    out << "reference curves:\n";
    for (const auto& e : lib.at("entries")) {
        const json& f = e.at("fit");
        std::snprintf(buf, sizeof(buf), "  s=%.2f  a=%.4f b=%.6f c=%.4f rmse=%.4g\n",
                      e.at("s").get<double>(), f.at("a").get<double>(), f.at("b").get<double>(),
                      f.at("c").get<double>(), f.at("rmse").get<double>());
        out << buf;
    }
    const json& det = a.at("detection");
    std::snprintf(buf, sizeof(buf), "estimated sample percentage: %.2f\nbiased: %s\n",
                  det.at("s_hat").get<double>(), det.at("biased").get<bool>() ? "yes" : "no");
    out << buf;
    ctx.write_artifact("report.txt", out.str());
    ctx.say(out.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"backdoor-based dataset bias auditor"};
    app.require_subcommand(1);

    std::string config_path;
    RunContext ctx;
    app.add_option("--config", config_path, "JSON configuration file")->required();
    auto* seed_opt = app.add_option("--seed", ctx.seed, "master seed");
    auto* jobs_opt = app.add_option("--jobs", ctx.jobs, "worker threads");
    app.add_option("--out", ctx.out_dir, "output directory (must exist)");
    app.add_flag("--quiet", ctx.quiet, "suppress progress output");

    const std::vector<std::string> commands = {"synth",  "ingest", "chi2",   "trigger-search",
                                               "attr-design", "sweep", "fit", "reflib",
                                               "detect", "audit",  "report"};
    // global options may appear after the subcommand name
    for (const auto& name : commands) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    ctx.command = app.get_subcommands().front()->get_name();
    std::string failed_stage;
    try {
        if (!fs::is_directory(ctx.out_dir))
            throw IoError("output directory '" + ctx.out_dir + "' does not exist");
        ctx.config = json::parse(read_file(config_path));
        if (!ctx.config.is_object()) throw ConfigError("config root must be a JSON object");
        if (ctx.config.contains("seed") && seed_opt->count() == 0)
            ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
        if (ctx.config.contains("jobs") && jobs_opt->count() == 0)
            ctx.jobs = ctx.config.at("jobs").get<std::size_t>();
        if (ctx.jobs == 0) throw ConfigError("--jobs must be at least 1");

        if (ctx.command == "synth") cmd_synth(ctx);
        else if (ctx.command == "ingest") cmd_ingest(ctx);
        else if (ctx.command == "chi2") cmd_chi2(ctx);
        else if (ctx.command == "trigger-search") cmd_trigger_search(ctx);
        else if (ctx.command == "attr-design") cmd_attr_design(ctx);
        else if (ctx.command == "sweep") cmd_sweep(ctx);
        else if (ctx.command == "fit") cmd_fit(ctx);
        else if (ctx.command == "reflib") cmd_reflib(ctx);
        else if (ctx.command == "detect") cmd_detect(ctx);
        else if (ctx.command == "audit") cmd_audit(ctx, failed_stage);
        else if (ctx.command == "report") cmd_report(ctx);

        ctx.write_manifest();
        return 0;
    } catch (const TrainingDivergenceError& e) {
        std::cerr << "error (training): " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error (io): " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error (parse): " << e.what() << '\n';
        return 2;
    } catch (const LookupError& e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        if (!failed_stage.empty())
            std::cerr << "error (pipeline, stage '" << failed_stage << "'): " << e.what() << '\n';
        else
            std::cerr << "error (pipeline): " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
