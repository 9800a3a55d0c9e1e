#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <queue>
#include <string>
#include <vector>

#include "gpusched/core_model.hpp"
#include "gpusched/gpu_sim.hpp"
#include "gpusched/scenario.hpp"
#include "gpusched/scheduler.hpp"

namespace gpusched {

struct ResponseStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double p95 = 0.0;

    friend bool operator==(const ResponseStats&, const ResponseStats&) = default;
};

struct ClassCounts {
    std::uint64_t released = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t completed = 0;
    std::uint64_t missed = 0;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct MetricsReport {
    std::string config_label;
    Policy policy = Policy::STR;
    int n_contexts = 1;
    int n_streams = 1;
    double oversubscription = 1.0;
    std::uint64_t seed = 0;
    double jps = 0.0;
    double dmr_hp = 0.0;
    double dmr_lp = 0.0;
    ResponseStats response_hp;
    ResponseStats response_lp;
    ClassCounts hp;
    ClassCounts lp;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Nearest-rank summary; all zeros for an empty sample.
ResponseStats summarize_responses(std::vector<double> samples);

enum class EventKind : std::uint8_t {
    Assign,         // offline context assignment of a task
    JobRelease,     // release + admission outcome
    StageStart,
    StageComplete,
    JobFinish,
    UtilUpdate,     // task utilization snapshot refreshed
    SimEnd,
};

std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

/// One line of the event log. Fields that do not apply to a kind hold -1.
struct EventRecord {
    Seconds time = 0.0;
    EventKind kind = EventKind::SimEnd;
    int task = -1;
    std::int64_t job = -1;
    int stage = -1;
    int context = -1;
    int stream = -1;
    double rate = -1.0;
    Priority priority = Priority::LP;
    bool admitted = false;
    bool migrated = false;
    double util = -1.0;
    Seconds deadline = -1.0;
    int batch = 1;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

void write_event_log(std::ostream& out, const std::vector<EventRecord>& log);
std::vector<EventRecord> read_event_log(std::istream& in);

struct CapacityModel {
    int total_sms = 68;
};

/// Work one task asks of the GPU per second, as a fraction of all SMs.
double task_demand(const TaskSpec& task, const CapacityModel& capacity);
double aggregate_demand(const TaskSet& tasks, const CapacityModel& capacity);

/// Rescales every period by the same constant so aggregate demand equals
/// `factor` times the capacity.
TaskSet scale_to_overload(const TaskSet& tasks, double factor, const CapacityModel& capacity);

struct SimConfig {
    GpuConfig gpu;
    SchedulerOptions scheduler;
    std::uint64_t seed = 1;
    Seconds duration = 60.0;
    double warmup_fraction = 0.1;
    int afet_repetitions = kDefaultAfetRepetitions;
    PhaseMode phase_mode = PhaseMode::Random;
    bool record_log = false;
    const RateModel* rate_model = nullptr;  // default water-filling when null
};

/// Snapshot handed to the dispatch observer before a pick.
struct DispatchSnapshot {
    Seconds time = 0.0;
    int context = 0;
    struct Candidate {
        StageRef ref;
        int task_id = 0;
        Priority priority = Priority::LP;
        bool is_last = false;
        bool predecessor_missed = false;
        Seconds virtual_abs_deadline = 0.0;
        Seconds job_deadline = 0.0;
    };
    std::vector<Candidate> ready;
    StageRef chosen;
};

struct RunHooks {
    std::function<void(const DispatchSnapshot&)> on_dispatch;
    std::function<void(std::span<const ActiveStage>, const RateAllocation&)> on_allocation;
    std::function<void(const Scheduler&, Seconds)> after_event;
};

struct RunResult {
    MetricsReport report;
    std::vector<EventRecord> log;
};

/// Deterministic discrete-event run of one configuration.
class Simulation {
public:
    Simulation(TaskSet tasks, SimConfig config, RunHooks hooks = {});
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    RunResult run();

    const Scheduler& scheduler() const { return scheduler_; }
    const TaskSet& tasks() const { return tasks_; }

    // Individual steps of the event loop, public for testing.
    void offline_phase();
    void release_job(int task_id, Seconds t);
    void recompute_and_schedule(Seconds t);
    void complete_stage(std::size_t active_index, Seconds t);
    const std::vector<ActiveStage>& active() const { return active_; }
    const RateAllocation& allocation() const { return allocation_; }

private:
    struct Release {
        Seconds time;
        int task_id;
        std::uint64_t index;
        bool operator>(const Release& o) const {
            if (time != o.time) return time > o.time;
            return task_id > o.task_id;
        }
    };

    struct Accumulator {
        ClassCounts counts;
        std::vector<double> responses;
    };

    void log(EventRecord rec);
    bool counted(Seconds release_time) const { return release_time >= warmup_; }
    Accumulator& acc(Priority p) { return p == Priority::HP ? hp_ : lp_; }
    MetricsReport finalize(Seconds end);

    TaskSet tasks_;
    SimConfig config_;
    RunHooks hooks_;
    const RateModel* model_;
    Scheduler scheduler_;
    Seconds warmup_ = 0.0;
    Seconds now_ = 0.0;

    std::vector<Seconds> phases_;
    std::priority_queue<Release, std::vector<Release>, std::greater<>> releases_;
    std::vector<ActiveStage> active_;
    std::vector<std::vector<bool>> busy_;  // [context][stream]
    std::vector<int> active_stream_;       // parallel to active_
    RateAllocation allocation_;

    Accumulator hp_;
    Accumulator lp_;
    double completed_in_window_ = 0.0;
    std::vector<EventRecord> log_;
};

RunResult run_simulation(const TaskSet& tasks, const SimConfig& config, const RunHooks& hooks = {});

/// Full pipeline for a scenario: workload, overload scaling, offline phase,
/// event loop. Throws InvalidScenario for invalid configurations.
RunResult run(const ScenarioConfig& scenario, bool record_log = false, const RunHooks& hooks = {});

/// Task set the scenario actually runs (after overload scaling).
TaskSet scenario_task_set(const ScenarioConfig& scenario);
SimConfig scenario_sim_config(const ScenarioConfig& scenario);

}  // namespace gpusched
