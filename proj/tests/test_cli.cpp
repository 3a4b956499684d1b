#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bdaudit/dataset.hpp"
#include "bdaudit/poison.hpp"
#include "bdaudit/trigger.hpp"

using namespace bdaudit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BDAUDIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string synth_config(std::size_t n, std::size_t d, std::size_t k) {
    std::ostringstream s;
    s << "{\n  \"synth\": {\n    \"n_samples\": " << n << ",\n    \"n_features\": " << d
      << ",\n    \"n_classes\": " << k
      << ",\n    \"attributes\": [{\"name\": \"gender\", \"groups\": [\"male\", \"female\"],"
         " \"fractions\": [0.5, 0.5]}]\n  }\n}\n";
    return s.str();
}

}  // namespace

TEST_CASE("synth writes deterministic artifacts plus a manifest") {
    const fs::path dir_a = fresh_dir("bdcli_synth_a");
    const fs::path dir_b = fresh_dir("bdcli_synth_b");
    write_file(dir_a / "c.json", synth_config(120, 20, 3));
    write_file(dir_b / "c.json", synth_config(120, 20, 3));

    CHECK(run_cli("synth --config " + (dir_a / "c.json").string() + " --out " + dir_a.string() +
                  " --seed 7 --quiet") == 0);
    CHECK(run_cli("synth --config " + (dir_b / "c.json").string() + " --out " + dir_b.string() +
                  " --seed 7 --quiet") == 0);

    CHECK(fs::exists(dir_a / "data.csv"));
    CHECK(fs::exists(dir_a / "data.csv.meta.json"));
    CHECK(fs::exists(dir_a / "manifest.json"));
    CHECK(read_file(dir_a / "data.csv") == read_file(dir_b / "data.csv"));
    CHECK(read_file(dir_a / "manifest.json") == read_file(dir_b / "manifest.json"));

    const std::string manifest = read_file(dir_a / "manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("data.csv") != std::string::npos);
}

TEST_CASE("config and I/O failures exit with code 2") {
    const fs::path dir = fresh_dir("bdcli_errors");
    write_file(dir / "c.json", synth_config(100, 10, 2));

    // missing output directory
    CHECK(run_cli("synth --config " + (dir / "c.json").string() + " --out " +
                  (dir / "missing_subdir").string()) == 2);
    // missing config file
    CHECK(run_cli("synth --config " + (dir / "nope.json").string() + " --out " + dir.string()) ==
          2);
    // unknown config key is rejected
    write_file(dir / "bad.json", "{\"synth\": {\"n_sample\": 100}}");
    CHECK(run_cli("synth --config " + (dir / "bad.json").string() + " --out " + dir.string()) ==
          2);
    // malformed JSON
    write_file(dir / "broken.json", "{not json");
    CHECK(run_cli("synth --config " + (dir / "broken.json").string() + " --out " + dir.string()) ==
          2);
    // missing required flag
    CHECK(run_cli("synth") == 2);
    // unknown subcommand
    CHECK(run_cli("frobnicate --config " + (dir / "c.json").string()) == 2);
}

TEST_CASE("chi2 writes a ranked score table") {
    const fs::path dir = fresh_dir("bdcli_chi2");
    write_file(dir / "c.json", synth_config(150, 15, 3));
    REQUIRE(run_cli("synth --config " + (dir / "c.json").string() + " --out " + dir.string() +
                    " --seed 3 --quiet") == 0);
    write_file(dir / "chi2.json", "{\"dataset\": \"" + (dir / "data.csv").string() + "\"}");
    CHECK(run_cli("chi2 --config " + (dir / "chi2.json").string() + " --out " + dir.string() +
                  " --quiet") == 0);
    const std::string table = read_file(dir / "chi2.csv");
    CHECK(table.rfind("feature,score,rank", 0) == 0);
    // one line per feature plus the header
    CHECK(std::count(table.begin(), table.end(), '\n') == 16);
}

TEST_CASE("trigger-search writes a deterministic report honoring exclusions") {
    const fs::path dir = fresh_dir("bdcli_search");
    write_file(dir / "c.json", synth_config(500, 30, 3));
    REQUIRE(run_cli("synth --config " + (dir / "c.json").string() + " --out " + dir.string() +
                    " --seed 5 --quiet") == 0);

    const Dataset ds = load_csv((dir / "data.csv").string());
    std::string excl_body;
    for (std::size_t j = 0; j < ds.n_features(); j += 3) excl_body += ds.feature_names[j] + "\n";
    write_file(dir / "excl.txt", excl_body);

    const std::string search_cfg =
        "{\"dataset\": \"" + (dir / "data.csv").string() +
        "\", \"target_class\": \"" + ds.class_names[0] +
        "\", \"exclusion\": \"" + (dir / "excl.txt").string() +
        "\", \"search\": {\"max_features\": 4, \"candidates_per_feature\": 3, "
        "\"train\": {\"epochs\": 120}}}";
    write_file(dir / "s.json", search_cfg);

    const fs::path out_a = fresh_dir("bdcli_search_a");
    const fs::path out_b = fresh_dir("bdcli_search_b");
    CHECK(run_cli("trigger-search --config " + (dir / "s.json").string() + " --out " +
                  out_a.string() + " --seed 9 --jobs 4 --quiet") == 0);
    CHECK(run_cli("trigger-search --config " + (dir / "s.json").string() + " --out " +
                  out_b.string() + " --seed 9 --jobs 2 --quiet") == 0);

    const std::string report = read_file(out_a / "triggers.json");
    CHECK(report == read_file(out_b / "triggers.json"));
    CHECK(report.find("\"count\"") != std::string::npos);
    // no excluded feature name appears in the report
    ExclusionList excl = ExclusionList::load((dir / "excl.txt").string());
    for (const auto& name : excl.names) CHECK(report.find("\"" + name + "\"") == std::string::npos);
}

TEST_CASE("sweep and fit chain through plan and curve files") {
    const fs::path dir = fresh_dir("bdcli_sweep");
    write_file(dir / "c.json", synth_config(500, 30, 4));
    REQUIRE(run_cli("synth --config " + (dir / "c.json").string() + " --out " + dir.string() +
                    " --seed 13 --quiet") == 0);
    const Dataset ds = load_csv((dir / "data.csv").string());
    const SplitPair parts = split(ds, 0.6, 1);
    save_csv(parts.train, (dir / "train.csv").string());
    save_csv(parts.test, (dir / "test.csv").string());

    // assemble a plan from library primitives and feed it to the CLI
    BackdoorPlan plan;
    plan.attribute_trigger = design_attribute_trigger(parts.train, "gender");
    plan.secondary_target = choose_secondary_target(parts.train, plan.attribute_trigger.encoding);
    std::size_t sec = 0;
    while (std::find(plan.attribute_trigger.features.begin(),
                     plan.attribute_trigger.features.end(),
                     sec) != plan.attribute_trigger.features.end())
        ++sec;
    const auto col = parts.train.feature_column(sec);
    plan.secondary = Trigger({sec}, *std::max_element(col.begin(), col.end()));
    plan.attribute_poison_fraction = 0.3;
    write_file(dir / "plan.json", plan.to_json(parts.train));

    const std::string sweep_cfg =
        "{\"train_dataset\": \"" + (dir / "train.csv").string() +
        "\", \"test_dataset\": \"" + (dir / "test.csv").string() +
        "\", \"plan\": \"" + (dir / "plan.json").string() +
        "\", \"sweep\": {\"p_grid\": [5, 20, 40, 80], \"repeats\": 2, "
        "\"train\": {\"epochs\": 120}}}";
    write_file(dir / "sw.json", sweep_cfg);
    CHECK(run_cli("sweep --config " + (dir / "sw.json").string() + " --out " + dir.string() +
                  " --seed 2 --jobs 4 --quiet") == 0);
    CHECK(fs::exists(dir / "curve.csv"));
    CHECK(read_file(dir / "curve.csv").rfind("x,y_mean,y_std,repeats", 0) == 0);

    write_file(dir / "fit.json.cfg",
               "{\"curve\": \"" + (dir / "curve.csv").string() + "\"}");
    CHECK(run_cli("fit --config " + (dir / "fit.json.cfg").string() + " --out " + dir.string() +
                  " --quiet") == 0);
    const std::string fit = read_file(dir / "fit.json");
    CHECK(fit.find("\"a\"") != std::string::npos);
    CHECK(fit.find("\"rmse\"") != std::string::npos);
}

TEST_CASE("audit emits the full artifact set and a verdict") {
    const fs::path dir = fresh_dir("bdcli_audit");
    write_file(dir / "c.json", synth_config(700, 40, 4));
    REQUIRE(run_cli("synth --config " + (dir / "c.json").string() + " --out " + dir.string() +
                    " --seed 19 --quiet") == 0);
    const Dataset collab = load_csv((dir / "data.csv").string());
    const Dataset cloud = make_biased_subset(collab, "gender", "male", 0.8, 3);
    save_csv(cloud, (dir / "cloud.csv").string());

    const std::string audit_cfg =
        "{\"collab_dataset\": \"" + (dir / "data.csv").string() +
        "\", \"cloud_dataset\": \"" + (dir / "cloud.csv").string() +
        "\", \"audit\": {\"attribute\": \"gender\", \"group\": \"male\", "
        "\"s_grid\": [0.5, 0.65, 0.8], \"s_true\": 0.8, \"attr_fraction_init\": 0.3, "
        "\"sweep\": {\"p_grid\": [5, 20, 40, 80], \"repeats\": 2, \"train\": {\"epochs\": 120}}, "
        "\"search\": {\"max_features\": 4, \"candidates_per_feature\": 3}}}";
    write_file(dir / "a.json", audit_cfg);

    CHECK(run_cli("audit --config " + (dir / "a.json").string() + " --out " + dir.string() +
                  " --seed 23 --jobs 4 --quiet") == 0);
    for (const char* name :
         {"plan.json", "reflib.json", "curves.csv", "audit.json", "detection.txt", "curves.svg",
          "manifest.json"})
        CHECK(fs::exists(dir / name));

    const std::string verdict = read_file(dir / "detection.txt");
    CHECK(verdict.find("biased: yes") != std::string::npos);
    const std::string svg = read_file(dir / "curves.svg");
    // one path per reference entry plus one for the cloud
    const std::string audit_json = read_file(dir / "audit.json");
    std::size_t entries = 0;
    for (std::size_t pos = 0; (pos = audit_json.find("\"s\":", pos)) != std::string::npos; ++pos)
        ++entries;
    std::size_t paths = 0;
    for (std::size_t pos = 0; (pos = svg.find("<path", pos)) != std::string::npos; ++pos) ++paths;
    CHECK(paths >= 2);
    CHECK(svg.find("attack accuracy") != std::string::npos);
}
