#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "gpusched/core_model.hpp"

namespace gpusched {

class GpuConfig;
class RateModel;

inline constexpr std::size_t kDefaultWindowSize = 5;
inline constexpr int kDefaultAfetRepetitions = 10;

struct ExecutionSample {
    std::uint64_t completion_index = 0;
    Seconds observed_time = 0.0;
};

/// The last `capacity` observed execution times of one stage.
class ExecutionWindow {
public:
    explicit ExecutionWindow(std::size_t capacity = kDefaultWindowSize);

    /// Throws NonpositiveSample for observed_time <= 0.
    void record(Seconds observed_time);

    std::optional<Seconds> max() const;
    bool empty() const { return samples_.empty(); }
    std::size_t size() const { return samples_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::deque<ExecutionSample>& samples() const { return samples_; }

private:
    std::size_t capacity_;
    std::uint64_t next_index_ = 0;
    std::deque<ExecutionSample> samples_;
};

/// Maximum recent execution times for every (task, stage) of a task set,
/// plus the AFET seed used before a task has any history.
///
/// Utilization is only refreshed when a job of the task completes: stage
/// samples land in the windows immediately, but task_utilization() reports
/// the value snapshotted at the last job completion (or afet/T before it).
class MretTable {
public:
    MretTable() = default;
    MretTable(const TaskSet& tasks, std::size_t window_size);

    void set_afet(int task_id, Seconds afet);
    Seconds afet(int task_id) const { return entry(task_id).afet; }

    void record_execution(int task_id, int stage, Seconds observed_time);
    void on_job_completed(int task_id);
    std::uint64_t completed_jobs(int task_id) const { return entry(task_id).completed; }

    Seconds mret_stage(int task_id, int stage) const;
    Seconds mret_task(int task_id) const;
    double task_utilization(int task_id) const;
    /// Relative per-stage deadlines; sums to D_i exactly.
    std::vector<Seconds> virtual_deadlines(int task_id) const;

    const ExecutionWindow& window(int task_id, int stage) const;
    std::size_t window_size() const { return window_size_; }

private:
    struct Entry {
        Seconds period = 0.0;
        Seconds deadline = 0.0;
        std::vector<double> nominal_shares;
        std::vector<ExecutionWindow> windows;
        Seconds afet = 0.0;
        std::uint64_t completed = 0;
        Seconds committed_mret = 0.0;
    };

    const Entry& entry(int task_id) const { return entries_.at(static_cast<std::size_t>(task_id - 1)); }
    Entry& entry(int task_id) { return entries_.at(static_cast<std::size_t>(task_id - 1)); }

    std::size_t window_size_ = kDefaultWindowSize;
    std::vector<Entry> entries_;
};

/// Splits `deadline` across stages in proportion to their MRETs. The last
/// element takes whatever is left so the sum is exactly `deadline`.
/// Throws ZeroTotalMret when the MRETs sum to zero.
std::vector<Seconds> virtual_deadlines(std::span<const Seconds> stage_mrets, Seconds deadline);

/// Average full-load execution time of `target`: the target runs on one
/// stream while every other stream of every context runs pool tasks picked
/// uniformly at random (with replacement), back to back. Mean end-to-end
/// time of the target's jobs over `repetitions` independent runs.
Seconds measure_afet(const TaskSpec& target, const TaskSet& pool, const GpuConfig& gpu,
                     int repetitions, std::uint64_t seed, const RateModel* model = nullptr);

}  // namespace gpusched
