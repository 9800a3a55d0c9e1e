#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpusched/errors.hpp"
#include "gpusched/presets.hpp"
#include "gpusched/report.hpp"
#include "gpusched/scenario.hpp"
#include "gpusched/sim_engine.hpp"
#include "gpusched/sweep.hpp"

namespace {

using namespace gpusched;

struct Flags {
    std::string scenario;
    std::string preset;
    std::string policy;
    std::optional<int> nc;
    std::optional<int> ns;
    std::string os;
    std::optional<int> total_sms;
    std::optional<double> kappa;
    std::optional<double> duration;
    std::optional<double> warmup;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> ablations;
    bool hpa = false;
    std::optional<double> overload;
    std::optional<std::size_t> ws;
    std::optional<int> afet_reps;
    std::string populate_order;
    std::string edf_key;
    std::string phase;
    std::optional<int> hp;
    std::optional<int> lp;
    std::optional<double> jps;
    std::vector<std::string> batches;
    std::string sweep;
    unsigned jobs = 1;
    std::string format;
    std::string out;
    std::string event_log;
    bool list_presets = false;
};

void apply_ablation(AblationFlags& a, const std::string& name) {
    if (name == "no-staging" || name == "no_staging") a.no_staging = true;
    else if (name == "no-last" || name == "no_last") a.no_last = true;
    else if (name == "no-prior" || name == "no_prior") a.no_prior = true;
    else if (name == "no-fixed" || name == "no_fixed") a.no_fixed = true;
    else throw SchemaError("unknown ablation '" + name + "'");
}

ScenarioConfig build_config(const Flags& f) {
    ScenarioConfig c = f.scenario.empty() ? parse_scenario(nlohmann::json::object()) : load_scenario(f.scenario);

    if (!f.preset.empty()) {
        workload_preset(f.preset);
        c.preset = f.preset;
        c.tasks.clear();
    }
    if (!f.policy.empty()) {
        const int n_parallel = c.gpu.n_parallel();
        c.gpu.policy = policy_from_string(f.policy);
        // keep N_p when only the policy changes
        if (c.gpu.policy == Policy::STR && !f.nc) {
            c.gpu.n_contexts = 1;
            if (!f.ns) c.gpu.n_streams = n_parallel;
        }
        if (c.gpu.policy == Policy::MPS && !f.ns) {
            c.gpu.n_streams = 1;
            if (!f.nc) c.gpu.n_contexts = n_parallel;
        }
    }
    if (f.nc) c.gpu.n_contexts = *f.nc;
    if (f.ns) c.gpu.n_streams = *f.ns;
    if (!f.os.empty()) {
        if (f.os == "nc") {
            c.oversubscription_is_nc = true;
        } else {
            try {
                c.gpu.oversubscription = std::stod(f.os);
            } catch (const std::exception&) {
                throw SchemaError("--os must be a number or \"nc\"");
            }
            c.oversubscription_is_nc = false;
        }
    } else if (!f.policy.empty() && c.gpu.policy == Policy::STR) {
        c.oversubscription_is_nc = true;
    }
    if (f.total_sms) c.gpu.total_sms = *f.total_sms;
    if (f.kappa) c.gpu.interference_kappa = *f.kappa;
    if (f.duration) c.duration = *f.duration;
    if (f.warmup) c.warmup_fraction = *f.warmup;
    if (f.seed) c.seed = *f.seed;
    for (const auto& a : f.ablations) apply_ablation(c.ablations, a);
    if (f.hpa) c.hpa = true;
    if (f.overload) c.overload = *f.overload;
    if (f.ws) c.window_size = *f.ws;
    if (f.afet_reps) c.afet_repetitions = *f.afet_reps;
    if (!f.populate_order.empty()) {
        if (f.populate_order == "utilization") c.populate_order = PopulateOrder::DescendingUtilization;
        else if (f.populate_order == "insertion") c.populate_order = PopulateOrder::Insertion;
        else throw SchemaError("--populate-order must be utilization or insertion");
    }
    if (!f.edf_key.empty()) {
        if (f.edf_key == "stage") c.edf_key = EdfKey::StageVirtualDeadline;
        else if (f.edf_key == "job") c.edf_key = EdfKey::JobDeadline;
        else throw SchemaError("--edf-key must be stage or job");
    }
    if (!f.phase.empty()) {
        if (f.phase == "random") c.phase_mode = PhaseMode::Random;
        else if (f.phase == "zero") c.phase_mode = PhaseMode::Zero;
        else throw SchemaError("--phase must be random or zero");
    }
    if (f.hp) c.hp_count = *f.hp;
    if (f.lp) c.lp_count = *f.lp;
    if (f.jps) c.task_jps = *f.jps;
    for (const auto& b : f.batches) {
        const auto eq = b.find('=');
        if (eq == std::string::npos) throw SchemaError("--batch expects DNN=SIZE");
        const std::string dnn = b.substr(0, eq);
        dnn_profile(dnn);
        try {
            c.batch_sizes[dnn] = std::stoi(b.substr(eq + 1));
        } catch (const std::exception&) {
            throw SchemaError("--batch expects DNN=SIZE");
        }
    }
    if (!f.format.empty()) c.output.format = report_format_from_string(f.format);
    if (!f.out.empty()) c.output.report = f.out;
    if (!f.event_log.empty()) c.output.event_log = f.event_log;
    validate(c);
    return c;
}

int execute(const Flags& f) {
    if (f.list_presets) {
        std::cout << "workloads:";
        for (const auto& n : workload_preset_names()) std::cout << ' ' << n;
        std::cout << "\ndnns:";
        for (const auto& n : dnn_profile_names()) std::cout << ' ' << n;
        std::cout << '\n';
        return 0;
    }

    const ScenarioConfig config = build_config(f);

    if (!f.sweep.empty()) {
        if (!config.output.event_log.empty()) throw InvalidScenario("an event log needs a single run, not a sweep");
        const SweepSpec sweep = load_sweep(f.sweep);
        const SweepResult result = run_sweep(sweep, config, f.jobs);
        for (const auto& s : result.skipped) {
            std::cerr << "skipped " << to_string(s.policy) << ' ' << s.n_contexts << 'x' << s.n_streams
                      << " OS=" << format_number(s.oversubscription) << ": " << s.reason << '\n';
        }
        emit_report(result.reports, config.output.format, config.output.report);
        return 0;
    }

    const bool want_log = !config.output.event_log.empty();
    const RunResult result = run(config, want_log);
    if (want_log) {
        std::ofstream out(config.output.event_log, std::ios::binary);
        if (!out) throw IoError("cannot write event log to '" + config.output.event_log + "'");
        write_event_log(out, result.log);
        if (!out) throw IoError("failed writing event log to '" + config.output.event_log + "'");
    }
    const std::vector<MetricsReport> reports{result.report};
    emit_report(reports, config.output.format, config.output.report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator of a staged, priority-aware DNN scheduler on a partitioned GPU"};
    Flags f;
    app.add_option("--scenario", f.scenario, "Scenario JSON file");
    app.add_option("--preset", f.preset, "Workload preset");
    app.add_option("--policy", f.policy, "str, mps or mps-str");
    app.add_option("--nc", f.nc, "Number of contexts");
    app.add_option("--ns", f.ns, "Streams per context");
    app.add_option("--os", f.os, "Oversubscription factor, or nc");
    app.add_option("--total-sms", f.total_sms, "SM count of the GPU");
    app.add_option("--kappa", f.kappa, "Interference slowdown coefficient");
    app.add_option("--duration", f.duration, "Simulated seconds");
    app.add_option("--warmup", f.warmup, "Warm-up fraction of the duration");
    app.add_option("--seed", f.seed, "Random seed");
    app.add_option("--ablation", f.ablations, "no-staging, no-last, no-prior or no-fixed (repeatable)");
    app.add_flag("--hpa", f.hpa, "Apply the admission test to HP jobs");
    app.add_option("--overload", f.overload, "Scale periods to this multiple of GPU capacity");
    app.add_option("--ws", f.ws, "MRET window size");
    app.add_option("--afet-reps", f.afet_reps, "Offline AFET repetitions");
    app.add_option("--populate-order", f.populate_order, "utilization or insertion");
    app.add_option("--edf-key", f.edf_key, "stage or job");
    app.add_option("--phase", f.phase, "random or zero release phases");
    app.add_option("--hp", f.hp, "HP task count");
    app.add_option("--lp", f.lp, "LP task count");
    app.add_option("--jps", f.jps, "Release rate of every task");
    app.add_option("--batch", f.batches, "DNN=SIZE batch size (repeatable)");
    app.add_option("--sweep", f.sweep, "Sweep JSON file");
    app.add_option("--jobs", f.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--format", f.format, "csv or json");
    app.add_option("--out", f.out, "Report path, - for stdout");
    app.add_option("--emit-event-log", f.event_log, "JSONL event log path");
    app.add_flag("--list-presets", f.list_presets, "List built-in presets and exit");

    CLI11_PARSE(app, argc, argv);
    try {
        return execute(f);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
