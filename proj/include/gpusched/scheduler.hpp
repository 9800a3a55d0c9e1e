#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "gpusched/core_model.hpp"
#include "gpusched/gpu_sim.hpp"
#include "gpusched/timing_estimator.hpp"

namespace gpusched {

struct ContextUtilization {
    double hp_total = 0.0;
    double lp_total = 0.0;
    double lp_active = 0.0;
    double hp_active = 0.0;  // only consulted by the HP admission test
    double total = 0.0;      // hp_total + lp_total
    double active = 0.0;     // hp_total + lp_active
};

/// Dispatch order of a ready stage. Compared lexicographically; smaller runs first.
struct PriorityKey {
    int level = 0;  // 0..7
    Seconds edf_key = 0.0;
    int task_id = 0;
    JobId job_id = 0;

    friend auto operator<=>(const PriorityKey&, const PriorityKey&) = default;
};

struct AblationFlags {
    bool no_staging = false;
    bool no_last = false;
    bool no_prior = false;
    bool no_fixed = false;

    friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct SchedulerMode {
    bool hpa_enabled = false;

    friend bool operator==(const SchedulerMode&, const SchedulerMode&) = default;
};

/// Order in which the offline pass visits tasks within a priority class.
enum class PopulateOrder : std::uint8_t { DescendingUtilization, Insertion };

/// Deadline used for EDF among stages of the same level.
enum class EdfKey : std::uint8_t { StageVirtualDeadline, JobDeadline };

struct SchedulerOptions {
    AblationFlags ablations;
    SchedulerMode mode;
    PopulateOrder populate_order = PopulateOrder::DescendingUtilization;
    EdfKey edf_key = EdfKey::StageVirtualDeadline;
    std::size_t window_size = kDefaultWindowSize;

    friend bool operator==(const SchedulerOptions&, const SchedulerOptions&) = default;
};

/// Greedy balancing: HP tasks first, then LP, each to the context with the
/// lowest running total utilization (lowest index on ties). Returns the
/// context of every input task. `totals` receives the final per-context sums.
std::vector<int> populate_contexts(std::span<const double> utilizations, std::span<const Priority> priorities,
                                   int n_contexts, PopulateOrder order, std::vector<double>* totals = nullptr);

/// Strict utilization test of one context: lp_active + u_j < n_streams - hp_total.
bool admission_test(double lp_active, double hp_total, int n_streams, double task_util);

Seconds predicted_finish_time(Seconds now, Seconds backlog_mret, int n_streams, Seconds task_mret);

/// Fixed level of a stage: HP before LP, then last stages, then stages whose
/// predecessor missed its virtual deadline.
int stage_level(Priority priority, bool is_last, bool predecessor_missed, const AblationFlags& ablations);

struct StageRef {
    JobId job_id = 0;
    int stage = 0;

    friend auto operator<=>(const StageRef&, const StageRef&) = default;
};

/// Outcome of admit_or_migrate, with the ledger values the test saw.
struct Placement {
    bool admitted = false;
    int context = -1;
    int home_context = -1;
    bool migrated = false;
    bool tested = false;  // false for HP jobs outside HPA mode
    double task_util = 0.0;
    double lp_active = 0.0;
    double hp_total = 0.0;
};

struct ReadyEntry {
    PriorityKey key;
    StageRef ref;

    friend auto operator<=>(const ReadyEntry&, const ReadyEntry&) = default;
};

/// Scheduling state of one simulation run: task contexts, MRET windows,
/// in-flight jobs and the per-context ready queues.
class Scheduler {
public:
    Scheduler(const TaskSet& tasks, const GpuConfig& gpu, SchedulerOptions options);

    const SchedulerOptions& options() const { return options_; }
    const GpuConfig& gpu() const { return gpu_; }
    const TaskSet& tasks() const { return *tasks_; }
    const MretTable& mret() const { return mret_; }
    const TaskState& task_state(int task_id) const { return states_.at(static_cast<std::size_t>(task_id - 1)); }

    void set_afet(int task_id, Seconds afet);

    /// Offline context assignment from AFET-based utilizations.
    void populate_contexts();

    std::vector<ContextUtilization> context_utilizations() const;
    ContextUtilization context_utilization(int context) const;

    /// Builds the job released at `t`, places it and enqueues its first stage
    /// when admitted. Rejected jobs are not retained.
    std::pair<Job, Placement> release(int task_id, Seconds t);

    Placement admit_or_migrate(const Job& job, Seconds t) const;
    Seconds predicted_finish_time(const Job& job, int context, Seconds t) const;
    PriorityKey priority_key(const Job& job, int stage) const;

    /// Pops the most urgent ready stage of `context` and marks it Running.
    std::optional<StageRef> dispatch(int context, Seconds t);

    /// Records the observed execution time and readies the successor.
    /// Returns the finished job when this was its last stage.
    std::optional<Job> on_stage_complete(StageRef ref, Seconds t);

    const Job& job(JobId id) const { return jobs_.at(id); }
    Job& job(JobId id) { return jobs_.at(id); }
    bool has_job(JobId id) const { return jobs_.contains(id); }
    const std::map<JobId, Job>& in_flight() const { return jobs_; }
    const std::set<ReadyEntry>& ready_queue(int context) const { return ready_.at(static_cast<std::size_t>(context)); }

private:
    bool test_context(const Job& job, int context, double task_util, Placement& out) const;
    void mark_active(const Job& job, int delta);

    const TaskSet* tasks_;
    GpuConfig gpu_;
    SchedulerOptions options_;
    MretTable mret_;
    std::vector<TaskState> states_;
    std::map<JobId, Job> jobs_;
    std::vector<std::set<ReadyEntry>> ready_;
    std::vector<std::vector<int>> active_jobs_;  // [task-1][context]
    JobId next_job_id_ = 0;
};

}  // namespace gpusched
