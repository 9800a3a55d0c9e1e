#include "gpusched/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include "gpusched/errors.hpp"
#include "gpusched/presets.hpp"

namespace gpusched {

using nlohmann::json;

std::string_view to_string(ReportFormat f) { return f == ReportFormat::Csv ? "csv" : "json"; }

ReportFormat report_format_from_string(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw SchemaError("unknown report format '" + std::string(s) + "'");
}

GpuConfig ScenarioConfig::resolved_gpu() const {
    GpuConfig g = gpu;
    if (oversubscription_is_nc) g.oversubscription = static_cast<double>(g.n_contexts);
    return g;
}

SchedulerOptions ScenarioConfig::scheduler_options() const {
    SchedulerOptions o;
    o.ablations = ablations;
    o.mode.hpa_enabled = hpa;
    o.populate_order = populate_order;
    o.edf_key = edf_key;
    o.window_size = window_size;
    return o;
}

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw SchemaError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get_as(const json& v, const std::string& what) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw SchemaError(what + " must be a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw SchemaError(what + " must be an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw SchemaError(what + " must be non-negative");
                }
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw SchemaError(what + " must be a number");
        } else {
            if (!v.is_string()) throw SchemaError(what + " must be a string");
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(what + ": " + e.what());
    }
}

AblationFlags parse_ablations(const json& v) {
    if (!v.is_array()) throw SchemaError("ablations must be an array");
    AblationFlags flags;
    for (const auto& item : v) {
        const auto name = get_as<std::string>(item, "ablation");
        if (name == "no-staging" || name == "no_staging") flags.no_staging = true;
        else if (name == "no-last" || name == "no_last") flags.no_last = true;
        else if (name == "no-prior" || name == "no_prior") flags.no_prior = true;
        else if (name == "no-fixed" || name == "no_fixed") flags.no_fixed = true;
        else throw SchemaError("unknown ablation '" + name + "'");
    }
    return flags;
}

void parse_gpu(const json& g, ScenarioConfig& out) {
    check_keys(g, {"total_sms", "n_contexts", "n_streams", "oversubscription", "policy", "kappa"}, "gpu");
    if (g.contains("total_sms")) out.gpu.total_sms = get_as<int>(g["total_sms"], "gpu.total_sms");
    if (g.contains("n_contexts")) out.gpu.n_contexts = get_as<int>(g["n_contexts"], "gpu.n_contexts");
    if (g.contains("n_streams")) out.gpu.n_streams = get_as<int>(g["n_streams"], "gpu.n_streams");
    if (g.contains("policy")) out.gpu.policy = policy_from_string(get_as<std::string>(g["policy"], "gpu.policy"));
    if (g.contains("kappa")) out.gpu.interference_kappa = get_as<double>(g["kappa"], "gpu.kappa");
    if (g.contains("oversubscription")) {
        const auto& os = g["oversubscription"];
        if (os.is_string()) {
            if (os.get<std::string>() != "nc") throw SchemaError("gpu.oversubscription must be a number or \"nc\"");
            out.oversubscription_is_nc = true;
        } else {
            out.gpu.oversubscription = get_as<double>(os, "gpu.oversubscription");
            out.oversubscription_is_nc = false;
        }
    }
}

TaskEntry parse_task(const json& t, std::size_t index, int& count) {
    const std::string where = "workload.tasks[" + std::to_string(index) + "]";
    check_keys(t, {"priority", "dnn", "stages", "jps", "batch_size", "count"}, where);
    TaskEntry e;
    if (!t.contains("priority")) throw SchemaError(where + ".priority is required");
    e.priority = priority_from_string(get_as<std::string>(t["priority"], where + ".priority"));
    if (!t.contains("jps")) throw SchemaError(where + ".jps is required");
    e.jps = get_as<double>(t["jps"], where + ".jps");
    if (t.contains("dnn")) {
        e.dnn = get_as<std::string>(t["dnn"], where + ".dnn");
        dnn_profile(e.dnn);
    }
    if (t.contains("stages")) {
        if (!t["stages"].is_array()) throw SchemaError(where + ".stages must be an array");
        for (const auto& s : t["stages"]) {
            check_keys(s, {"nominal_time", "width"}, where + ".stages[]");
            if (!s.contains("nominal_time") || !s.contains("width")) {
                throw SchemaError(where + ".stages[] needs nominal_time and width");
            }
            e.stages.push_back({get_as<double>(s["nominal_time"], "nominal_time"), get_as<int>(s["width"], "width")});
        }
    }
    if (e.dnn.empty() == e.stages.empty()) throw SchemaError(where + " needs exactly one of dnn or stages");
    if (t.contains("batch_size")) e.batch_size = get_as<int>(t["batch_size"], where + ".batch_size");
    count = t.contains("count") ? get_as<int>(t["count"], where + ".count") : 1;
    if (count < 0) throw SchemaError(where + ".count must be >= 0");
    return e;
}

void parse_workload(const json& w, ScenarioConfig& out) {
    if (w.is_string()) {
        out.preset = w.get<std::string>();
        workload_preset(*out.preset);
        return;
    }
    check_keys(w, {"preset", "tasks"}, "workload");
    if (w.contains("preset") == w.contains("tasks")) throw SchemaError("workload needs exactly one of preset or tasks");
    if (w.contains("preset")) {
        out.preset = get_as<std::string>(w["preset"], "workload.preset");
        workload_preset(*out.preset);
        return;
    }
    if (!w["tasks"].is_array()) throw SchemaError("workload.tasks must be an array");
    std::size_t index = 0;
    for (const auto& t : w["tasks"]) {
        int count = 1;
        TaskEntry e = parse_task(t, index++, count);
        for (int c = 0; c < count; ++c) out.tasks.push_back(e);
    }
}

void parse_output(const json& o, ScenarioConfig& out) {
    check_keys(o, {"report", "event_log", "format"}, "output");
    if (o.contains("report")) out.output.report = get_as<std::string>(o["report"], "output.report");
    if (o.contains("event_log")) out.output.event_log = get_as<std::string>(o["event_log"], "output.event_log");
    if (o.contains("format")) out.output.format = report_format_from_string(get_as<std::string>(o["format"], "output.format"));
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc) {
    check_keys(doc,
               {"name", "gpu", "workload", "hp_count", "lp_count", "task_jps", "overload", "seed", "duration",
                "warmup_fraction", "ws", "afet_repetitions", "ablations", "hpa", "batch_sizes", "populate_order",
                "edf_key", "release_phase", "output"},
               "scenario");
    ScenarioConfig c;
    if (doc.contains("name")) c.name = get_as<std::string>(doc["name"], "name");
    if (doc.contains("gpu")) parse_gpu(doc["gpu"], c);
    if (doc.contains("workload")) parse_workload(doc["workload"], c);
    if (doc.contains("hp_count")) c.hp_count = get_as<int>(doc["hp_count"], "hp_count");
    if (doc.contains("lp_count")) c.lp_count = get_as<int>(doc["lp_count"], "lp_count");
    if (doc.contains("task_jps")) c.task_jps = get_as<double>(doc["task_jps"], "task_jps");
    if (doc.contains("overload")) c.overload = get_as<double>(doc["overload"], "overload");
    if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc["seed"], "seed");
    if (doc.contains("duration")) c.duration = get_as<double>(doc["duration"], "duration");
    if (doc.contains("warmup_fraction")) c.warmup_fraction = get_as<double>(doc["warmup_fraction"], "warmup_fraction");
    if (doc.contains("ws")) c.window_size = get_as<std::size_t>(doc["ws"], "ws");
    if (doc.contains("afet_repetitions")) c.afet_repetitions = get_as<int>(doc["afet_repetitions"], "afet_repetitions");
    if (doc.contains("ablations")) c.ablations = parse_ablations(doc["ablations"]);
    if (doc.contains("hpa")) c.hpa = get_as<bool>(doc["hpa"], "hpa");
    if (doc.contains("batch_sizes")) {
        const auto& b = doc["batch_sizes"];
        if (!b.is_object()) throw SchemaError("batch_sizes must be an object");
        for (const auto& [dnn, size] : b.items()) {
            dnn_profile(dnn);
            c.batch_sizes[dnn] = get_as<int>(size, "batch_sizes." + dnn);
        }
    }
    if (doc.contains("populate_order")) {
        const auto v = get_as<std::string>(doc["populate_order"], "populate_order");
        if (v == "utilization") c.populate_order = PopulateOrder::DescendingUtilization;
        else if (v == "insertion") c.populate_order = PopulateOrder::Insertion;
        else throw SchemaError("populate_order must be \"utilization\" or \"insertion\"");
    }
    if (doc.contains("edf_key")) {
        const auto v = get_as<std::string>(doc["edf_key"], "edf_key");
        if (v == "stage") c.edf_key = EdfKey::StageVirtualDeadline;
        else if (v == "job") c.edf_key = EdfKey::JobDeadline;
        else throw SchemaError("edf_key must be \"stage\" or \"job\"");
    }
    if (doc.contains("release_phase")) {
        const auto v = get_as<std::string>(doc["release_phase"], "release_phase");
        if (v == "random") c.phase_mode = PhaseMode::Random;
        else if (v == "zero") c.phase_mode = PhaseMode::Zero;
        else throw SchemaError("release_phase must be \"random\" or \"zero\"");
    }
    if (doc.contains("output")) parse_output(doc["output"], c);
    validate(c);
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_scenario(doc);
}

void validate(const ScenarioConfig& c) {
    try {
        c.resolved_gpu().validate();
    } catch (const Error& e) {
        throw InvalidScenario(e.what());
    }
    if (c.preset && !c.tasks.empty()) throw InvalidScenario("workload has both a preset and explicit tasks");
    if (c.preset) {
        const auto& preset = workload_preset(*c.preset);
        if ((c.hp_count || c.lp_count) && preset.groups.size() != 1) {
            throw InvalidScenario("hp_count/lp_count need a single-DNN preset");
        }
    } else if (c.hp_count || c.lp_count || c.task_jps) {
        throw InvalidScenario("hp_count, lp_count and task_jps apply to presets only");
    }
    if (c.hp_count && *c.hp_count < 0) throw InvalidScenario("hp_count must be >= 0");
    if (c.lp_count && *c.lp_count < 0) throw InvalidScenario("lp_count must be >= 0");
    if (c.task_jps && !(*c.task_jps > 0.0)) throw InvalidScenario("task_jps must be > 0");
    if (c.overload && !(*c.overload > 0.0)) throw InvalidScenario("overload must be > 0");
    if (!(c.duration > 0.0)) throw InvalidScenario("duration must be > 0");
    if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0)) throw InvalidScenario("warmup_fraction must be in [0, 1)");
    if (c.window_size < 1) throw InvalidScenario("ws must be >= 1");
    if (c.afet_repetitions < 1) throw InvalidScenario("afet_repetitions must be >= 1");
    for (const auto& [dnn, b] : c.batch_sizes) {
        dnn_profile(dnn);
        if (b < 1) throw InvalidScenario("batch size of " + dnn + " must be >= 1");
    }
    for (const auto& t : c.tasks) {
        if (!(t.jps > 0.0)) throw InvalidScenario("task jps must be > 0");
        if (t.batch_size < 0) throw InvalidScenario("task batch_size must be >= 1");
        for (const auto& s : t.stages) {
            if (!(s.nominal_time > 0.0) || s.width < 1) throw InvalidScenario("stage needs nominal_time > 0 and width >= 1");
            if (s.width > c.gpu.total_sms) throw InvalidScenario("stage width exceeds total_sms");
        }
        if (!t.dnn.empty()) dnn_profile(t.dnn);
    }
}

TaskSet build_workload(const ScenarioConfig& c) {
    std::vector<TaskSpec> specs;
    int id = 1;
    auto batch_for = [&](const std::string& dnn) {
        auto it = c.batch_sizes.find(dnn);
        return it == c.batch_sizes.end() ? 1 : it->second;
    };

    if (c.preset) {
        for (const auto& group : workload_preset(*c.preset).groups) {
            const DnnProfile& profile = dnn_profile(group.dnn);
            const auto stages = stage_profiles(profile, c.gpu.total_sms);
            const double jps = c.task_jps.value_or(group.jps);
            const int batch = batch_for(group.dnn);
            const int hp = c.hp_count.value_or(group.hp);
            const int lp = c.lp_count.value_or(group.lp);
            for (int i = 0; i < hp; ++i) specs.emplace_back(id++, 1.0 / jps, Priority::HP, stages, group.dnn, batch, batching_curve(profile));
            for (int i = 0; i < lp; ++i) specs.emplace_back(id++, 1.0 / jps, Priority::LP, stages, group.dnn, batch, batching_curve(profile));
        }
    } else {
        for (const auto& t : c.tasks) {
            if (!t.dnn.empty()) {
                const DnnProfile& profile = dnn_profile(t.dnn);
                const int batch = t.batch_size > 0 ? t.batch_size : batch_for(t.dnn);
                specs.emplace_back(id++, 1.0 / t.jps, t.priority, stage_profiles(profile, c.gpu.total_sms), t.dnn, batch,
                                   batching_curve(profile));
            } else {
                specs.emplace_back(id++, 1.0 / t.jps, t.priority, t.stages, std::string{}, t.batch_size > 0 ? t.batch_size : 1);
            }
        }
    }

    if (c.ablations.no_staging) {
        for (auto& s : specs) s = s.collapsed();
    }
    return build_task_set_allow_empty(std::move(specs));
}

}  // namespace gpusched
