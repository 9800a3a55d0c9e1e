#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpusched {

using Seconds = double;
using JobId = std::uint64_t;

enum class Priority : std::uint8_t { HP, LP };

std::string_view to_string(Priority p);
Priority priority_from_string(std::string_view s);

/// Cost of one stage: how long it runs when it holds `width` SMs, and the
/// most SMs it can make use of.
struct StageProfile {
    Seconds nominal_time = 0.0;
    int width = 1;

    friend bool operator==(const StageProfile&, const StageProfile&) = default;
};

/// Throughput gain from batching, known at a single reference batch size.
/// gain(1) == 1 always; see gpu_sim.cpp for the interpolation.
struct BatchingCurve {
    int reference_batch = 1;
    double reference_gain = 1.0;

    double gain(int batch) const;

    friend bool operator==(const BatchingCurve&, const BatchingCurve&) = default;
};

/// A periodic DNN task. The relative deadline always equals the period.
class TaskSpec {
public:
    TaskSpec(int id, Seconds period, Priority priority, std::vector<StageProfile> stages,
             std::string dnn = {}, int batch_size = 1, BatchingCurve batching = {});

    int id() const { return id_; }
    Seconds period() const { return period_; }
    Seconds deadline() const { return deadline_; }
    Priority priority() const { return priority_; }
    bool is_hp() const { return priority_ == Priority::HP; }
    std::span<const StageProfile> stages() const { return stages_; }
    std::size_t stage_count() const { return stages_.size(); }
    const std::string& dnn() const { return dnn_; }
    int batch_size() const { return batch_size_; }
    const BatchingCurve& batching() const { return batching_; }

    Seconds nominal_total() const;

    TaskSpec with_period(Seconds period) const;
    TaskSpec with_id(int id) const;
    TaskSpec with_batch(int batch_size) const;
    /// Whole-task view: one stage carrying the summed nominal time at the
    /// widest stage width.
    TaskSpec collapsed() const;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

private:
    int id_;
    Seconds period_;
    Seconds deadline_;
    Priority priority_;
    std::vector<StageProfile> stages_;
    std::string dnn_;
    int batch_size_;
    BatchingCurve batching_;
};

class TaskSet {
public:
    TaskSet() = default;

    std::span<const TaskSpec> tasks() const { return tasks_; }
    const TaskSpec& task(int id) const { return tasks_.at(static_cast<std::size_t>(id - 1)); }
    std::size_t size() const { return tasks_.size(); }
    bool empty() const { return tasks_.empty(); }
    int hp_count() const { return n_hp_; }
    int lp_count() const { return n_lp_; }

    friend bool operator==(const TaskSet&, const TaskSet&) = default;

private:
    friend TaskSet build_task_set_allow_empty(std::vector<TaskSpec> specs);
    std::vector<TaskSpec> tasks_;  // sorted by id, ids are 1..N
    int n_hp_ = 0;
    int n_lp_ = 0;
};

/// Validates and indexes a list of tasks. Throws EmptyTaskSet, DuplicateId,
/// InvalidTaskId (ids must cover 1..N) or InvalidStage.
TaskSet build_task_set(std::vector<TaskSpec> specs);

/// Same as build_task_set but allows an empty list (used by the engine for
/// zero-task scenarios).
TaskSet build_task_set_allow_empty(std::vector<TaskSpec> specs);

/// Mutable per-task scheduling state. HP tasks keep the context assigned
/// offline; LP tasks follow their latest migration.
struct TaskState {
    const TaskSpec* spec = nullptr;
    int context = 0;
    Seconds afet = 0.0;
};

enum class StageState : std::uint8_t { Pending, Ready, Running, Done };

std::string_view to_string(StageState s);

struct StageJob {
    int stage_index = 0;
    Seconds remaining_work = 0.0;  // seconds of execution at full width
    Seconds virtual_abs_deadline = 0.0;
    bool predecessor_missed = false;
    StageState state = StageState::Pending;
    Seconds start_time = 0.0;

    /// Moves one step along Pending -> Ready -> Running -> Done. Any other
    /// transition throws std::logic_error.
    void advance_to(StageState next);
};

struct Job {
    JobId job_id = 0;
    int task_id = 0;
    Priority priority = Priority::LP;
    Seconds release_time = 0.0;
    Seconds absolute_deadline = 0.0;
    std::vector<StageJob> stage_jobs;
    int batch_size = 1;
    int context = -1;  // placement, -1 until admitted

    bool is_last_stage(int stage) const { return stage + 1 == static_cast<int>(stage_jobs.size()); }
};

class MretTable;

/// Instantiates one period of `task` released at `release_time`. Virtual
/// deadlines come from the task's current MRET shares and are accumulated
/// from the release into absolute times.
Job make_job(const TaskState& task, Seconds release_time, const MretTable& mret, JobId job_id);

/// Number of stages a DNN preset is split into; `no_staging` gives the
/// whole-task view.
int stage_count_for_preset(std::string_view dnn, bool no_staging = false);

}  // namespace gpusched
