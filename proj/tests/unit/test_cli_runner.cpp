#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpusched/errors.hpp"
#include "gpusched/presets.hpp"
#include "gpusched/report.hpp"
#include "gpusched/scenario.hpp"
#include "gpusched/sweep.hpp"

using namespace gpusched;
using nlohmann::json;

namespace {

const std::string kTimes = " \xC3\x97 ";

std::string scenario_path(const std::string& name) { return std::string(GPUSCHED_SCENARIO_DIR) + "/" + name; }

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST_CASE("preset scenarios") {
    const ScenarioConfig r = load_scenario(scenario_path("resnet18_main.json"));
    const TaskSet rs = build_workload(r);
    CHECK(rs.hp_count() == 17);
    CHECK(rs.lp_count() == 34);
    CHECK(1.0 / rs.task(1).period() == doctest::Approx(30));

    const ScenarioConfig u = load_scenario(scenario_path("unet_main.json"));
    const TaskSet us = build_workload(u);
    CHECK(us.hp_count() == 5);
    CHECK(us.lp_count() == 10);
    CHECK(1.0 / us.task(1).period() == doctest::Approx(24));

    for (const char* name : {"inceptionv3_main.json", "mixed_main.json"}) {
        const ScenarioConfig c = load_scenario(scenario_path(name));
        const TaskSet set = build_workload(c);
        CHECK(set.hp_count() * 2 == set.lp_count());
    }
}

TEST_CASE("scenario schema is closed") {
    CHECK_THROWS_AS(parse_scenario(json{{"workload", "resnet18_main"}, {"colour", "red"}}), SchemaError);
    CHECK_THROWS_AS(parse_scenario(json{{"gpu", {{"sms", 68}}}}), SchemaError);
    CHECK_THROWS_AS(parse_scenario(json{{"duration", "long"}}), SchemaError);
    CHECK_THROWS_AS(parse_scenario(json{{"seed", -3}}), SchemaError);
    CHECK_THROWS_AS(parse_scenario(json{{"ablations", {"no-sleep"}}}), SchemaError);
    CHECK_THROWS_AS(parse_scenario(json{{"workload", "vgg_main"}}), UnknownPreset);
    CHECK_THROWS_AS(parse_scenario(json{{"workload", {{"tasks", {{{"priority", "hp"}, {"jps", 10}}}}}}}), SchemaError);
    CHECK_THROWS_AS(parse_scenario(json{{"gpu", {{"n_contexts", 2}, {"oversubscription", 3}}}}), InvalidScenario);
    CHECK_THROWS_AS(parse_scenario(json{{"hp_count", 3}}), InvalidScenario);
}

TEST_CASE("scenario file errors") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
    const auto bad = temp_file("gpusched_bad.json", "{ not json");
    CHECK_THROWS_AS(load_scenario(bad.string()), ParseError);
    const auto unknown = temp_file("gpusched_unknown.json", R"({"workload": "resnet18_main", "extra": 1})");
    CHECK_THROWS_AS(load_scenario(unknown.string()), SchemaError);
}

TEST_CASE("explicit task lists") {
    const json doc = {
        {"gpu", {{"policy", "str"}, {"n_contexts", 1}, {"n_streams", 2}, {"oversubscription", 1}}},
        {"workload",
         {{"tasks",
           {{{"priority", "hp"}, {"dnn", "resnet18"}, {"jps", 20}, {"count", 2}},
            {{"priority", "lp"}, {"stages", {{{"nominal_time", 0.002}, {"width", 30}}}}, {"jps", 10}}}}}},
        {"batch_sizes", {{"resnet18", 4}}},
    };
    const ScenarioConfig c = parse_scenario(doc);
    const TaskSet set = build_workload(c);
    REQUIRE(set.size() == 3);
    CHECK(set.task(1).batch_size() == 4);
    CHECK(set.task(1).stage_count() == 4);
    CHECK(set.task(3).stages()[0].width == 30);
    CHECK(set.task(3).batch_size() == 1);
    CHECK(c.resolved_gpu().label() == "1" + kTimes + "2_1");
}

TEST_CASE("no-staging collapses preset tasks") {
    ScenarioConfig c = parse_scenario(json{{"workload", "resnet18_main"}, {"ablations", {"no-staging"}}});
    for (const auto& t : build_workload(c).tasks()) CHECK(t.stage_count() == 1);
}

TEST_CASE("sweep cells for the peak MPS configuration") {
    SweepSpec s;
    s.policies = {Policy::MPS};
    s.parallel_counts = {6};
    s.oversubscription = {{true, 0.0}};
    s.seeds = {1};
    const auto plan = expand_sweep(s, 68);
    REQUIRE(plan.cells.size() == 1);
    CHECK(plan.cells[0].label() == "6" + kTimes + "1_6");
}

TEST_CASE("STR sweeps only have single-context cells") {
    SweepSpec s = default_sweep();
    s.policies = {Policy::STR};
    const auto plan = expand_sweep(s, 68);
    CHECK(plan.cells.size() == 9);
    for (const auto& c : plan.cells) {
        CHECK(c.gpu.n_contexts == 1);
        CHECK(c.label().rfind("1" + kTimes, 0) == 0);
    }
    bool skipped_os2 = false;
    for (const auto& k : plan.skipped) skipped_os2 = skipped_os2 || (k.n_contexts == 1 && k.oversubscription == 2.0);
    CHECK(skipped_os2);
}

TEST_CASE("sweep pairs and labels") {
    CHECK(policy_pairs(Policy::MPS_STR, 8) == std::vector<std::pair<int, int>>{{2, 4}, {4, 2}});
    CHECK(policy_pairs(Policy::MPS_STR, 7).empty());
    CHECK(policy_pairs(Policy::STR, 5) == std::vector<std::pair<int, int>>{{1, 5}});

    const auto plan = expand_sweep(default_sweep(), 68);
    std::set<std::string> labels;
    for (const auto& c : plan.cells) {
        const auto t = parse_config_label(c.label());
        CHECK(t == ConfigTriple{c.gpu.n_contexts, c.gpu.n_streams, c.gpu.oversubscription});
        CHECK(c.gpu.oversubscription <= c.gpu.n_contexts);
        labels.insert(std::string(to_string(c.gpu.policy)) + c.label());
    }
    CHECK(labels.size() == plan.cells.size());
}

TEST_CASE("sweep documents") {
    const SweepSpec s = parse_sweep(json{{"policies", {"mps"}}, {"pairs", {{3, 1}, {2, 2}}}, {"oversubscription", {1, "nc"}}, {"seeds", {4, 5}}});
    const auto plan = expand_sweep(s, 68);
    // (2,2) does not fit MPS
    CHECK(plan.cells.size() == 4);
    CHECK(plan.cells[0].seed == 4);
    CHECK_THROWS_AS(parse_sweep(json{{"policy", {"mps"}}}), SchemaError);
    CHECK_THROWS_AS(parse_sweep(json{{"oversubscription", {"max"}}}), SchemaError);
    CHECK_THROWS_AS(parse_sweep(json{{"seeds", json::array()}}), SchemaError);
    CHECK_THROWS_AS(load_sweep("/nonexistent/sweep.json"), IoError);
    CHECK_NOTHROW(load_sweep(scenario_path("sweep_mps.json")));
}

TEST_CASE("sweep reports are independent of the thread count") {
    ScenarioConfig base = load_scenario(scenario_path("resnet18_main.json"));
    base.duration = 1.0;
    SweepSpec s;
    s.policies = {Policy::MPS, Policy::MPS_STR};
    s.parallel_counts = {4};
    s.oversubscription = {{false, 1.0}, {true, 0.0}};
    s.seeds = {1, 2};
    const auto one = run_sweep(s, base, 1);
    const auto many = run_sweep(s, base, 3);
    CHECK(one.reports == many.reports);
    CHECK(one.reports.size() == 8);
}

TEST_CASE("CSV report layout") {
    std::ostringstream empty;
    write_csv(empty, {});
    CHECK(empty.str() ==
          "config_label,policy,n_contexts,n_streams,oversubscription,seed,jps,dmr_hp,dmr_lp,resp_hp_mean,resp_hp_p95,"
          "resp_lp_mean,resp_lp_p95,accepted_hp,accepted_lp,rejected_hp,rejected_lp\n");

    MetricsReport r;
    r.config_label = "6" + kTimes + "1_1.5";
    r.policy = Policy::MPS;
    r.n_contexts = 6;
    r.oversubscription = 1.5;
    r.jps = 1200.5;
    r.lp.accepted = 3;
    std::ostringstream one;
    const std::vector<MetricsReport> rows{r};
    write_csv(one, rows);
    std::istringstream lines(one.str());
    std::string header, row, extra;
    std::getline(lines, header);
    std::getline(lines, row);
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(row == r.config_label + ",mps,6,1,1.5,0,1200.5,0,0,0,0,0,0,0,3,0,0");
}

TEST_CASE("JSON report round trip") {
    ScenarioConfig c = load_scenario(scenario_path("unet_main.json"));
    c.duration = 1.0;
    const auto report = run(c).report;
    std::stringstream buf;
    const std::vector<MetricsReport> rows{report};
    write_json(buf, rows);
    const auto back = read_json_reports(buf);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == report);

    std::stringstream broken("[{\"policy\": \"mps\"}]");
    CHECK_THROWS_AS(read_json_reports(broken), ParseError);
}

TEST_CASE("report output errors") {
    CHECK_THROWS_AS(emit_report({}, ReportFormat::Csv, "/nonexistent/dir/out.csv"), IoError);
    CHECK(report_format_from_string("json") == ReportFormat::Json);
    CHECK_THROWS_AS(report_format_from_string("xml"), SchemaError);
}
