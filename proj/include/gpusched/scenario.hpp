#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpusched/core_model.hpp"
#include "gpusched/gpu_sim.hpp"
#include "gpusched/scheduler.hpp"
#include "gpusched/timing_estimator.hpp"

#include "json.hpp"

namespace gpusched {

enum class ReportFormat : std::uint8_t { Csv, Json };
enum class PhaseMode : std::uint8_t { Random, Zero };

std::string_view to_string(ReportFormat f);
ReportFormat report_format_from_string(std::string_view s);

/// One explicitly listed task. Either `dnn` names a profile, or `stages`
/// gives the costs directly.
struct TaskEntry {
    Priority priority = Priority::LP;
    std::string dnn;
    std::vector<StageProfile> stages;
    double jps = 0.0;
    int batch_size = 0;  // 0: use the scenario's per-dnn batch size, else 1

    friend bool operator==(const TaskEntry&, const TaskEntry&) = default;
};

struct OutputPaths {
    std::string report;
    std::string event_log;
    ReportFormat format = ReportFormat::Csv;

    friend bool operator==(const OutputPaths&, const OutputPaths&) = default;
};

struct ScenarioConfig {
    std::string name;
    // peak-throughput partitioning: six single-stream contexts sharing all SMs
    GpuConfig gpu{68, 6, 1, 6.0, Policy::MPS, 0.0};
    bool oversubscription_is_nc = true;  // OS tracks N_c when it changes

    std::optional<std::string> preset;
    std::vector<TaskEntry> tasks;
    std::optional<int> hp_count;
    std::optional<int> lp_count;
    std::optional<double> task_jps;
    std::optional<double> overload;

    std::uint64_t seed = 1;
    Seconds duration = 60.0;
    double warmup_fraction = 0.1;
    std::size_t window_size = kDefaultWindowSize;
    int afet_repetitions = kDefaultAfetRepetitions;
    AblationFlags ablations;
    bool hpa = false;
    std::map<std::string, int> batch_sizes;
    PopulateOrder populate_order = PopulateOrder::DescendingUtilization;
    EdfKey edf_key = EdfKey::StageVirtualDeadline;
    PhaseMode phase_mode = PhaseMode::Random;
    OutputPaths output;

    /// Effective GPU config with OS resolved.
    GpuConfig resolved_gpu() const;
    SchedulerOptions scheduler_options() const;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses a scenario document. Unknown keys are rejected (SchemaError);
/// malformed values give SchemaError, unknown presets UnknownPreset.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
/// Reads and parses a scenario file. Adds ParseError for invalid JSON and
/// IoError for unreadable files.
ScenarioConfig load_scenario(const std::string& path);

/// Throws InvalidScenario / UnknownPreset / InvalidGpuConfig / InvalidOversubscription.
void validate(const ScenarioConfig& config);

/// Expands the preset or explicit task list into a task set (before any
/// overload scaling). Ablation no_staging collapses every task to one stage.
TaskSet build_workload(const ScenarioConfig& config);

}  // namespace gpusched
