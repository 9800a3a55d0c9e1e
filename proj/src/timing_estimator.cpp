#include "gpusched/timing_estimator.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "gpusched/errors.hpp"
#include "gpusched/gpu_sim.hpp"

namespace gpusched {

ExecutionWindow::ExecutionWindow(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

void ExecutionWindow::record(Seconds observed_time) {
    if (!(observed_time > 0.0)) throw NonpositiveSample("execution time " + std::to_string(observed_time));
    samples_.push_back({next_index_++, observed_time});
    if (samples_.size() > capacity_) samples_.pop_front();
}

std::optional<Seconds> ExecutionWindow::max() const {
    if (samples_.empty()) return std::nullopt;
    Seconds best = samples_.front().observed_time;
    for (const auto& s : samples_) best = std::max(best, s.observed_time);
    return best;
}

MretTable::MretTable(const TaskSet& tasks, std::size_t window_size) : window_size_(window_size) {
    entries_.reserve(tasks.size());
    for (const auto& spec : tasks.tasks()) {
        Entry e;
        e.period = spec.period();
        e.deadline = spec.deadline();
        const Seconds total = spec.nominal_total();
        for (const auto& stage : spec.stages()) e.nominal_shares.push_back(stage.nominal_time / total);
        e.windows.assign(spec.stage_count(), ExecutionWindow(window_size));
        entries_.push_back(std::move(e));
    }
}

void MretTable::set_afet(int task_id, Seconds afet) { entry(task_id).afet = afet; }

void MretTable::record_execution(int task_id, int stage, Seconds observed_time) {
    entry(task_id).windows.at(static_cast<std::size_t>(stage)).record(observed_time);
}

void MretTable::on_job_completed(int task_id) {
    Entry& e = entry(task_id);
    ++e.completed;
    e.committed_mret = mret_task(task_id);
}

Seconds MretTable::mret_stage(int task_id, int stage) const {
    const Entry& e = entry(task_id);
    const auto s = static_cast<std::size_t>(stage);
    if (auto m = e.windows.at(s).max()) return *m;
    return e.afet * e.nominal_shares.at(s);
}

Seconds MretTable::mret_task(int task_id) const {
    const Entry& e = entry(task_id);
    Seconds sum = 0.0;
    for (std::size_t j = 0; j < e.windows.size(); ++j) sum += mret_stage(task_id, static_cast<int>(j));
    return sum;
}

double MretTable::task_utilization(int task_id) const {
    const Entry& e = entry(task_id);
    return (e.completed == 0 ? e.afet : e.committed_mret) / e.period;
}

std::vector<Seconds> MretTable::virtual_deadlines(int task_id) const {
    const Entry& e = entry(task_id);
    std::vector<Seconds> mrets(e.windows.size());
    for (std::size_t j = 0; j < mrets.size(); ++j) mrets[j] = mret_stage(task_id, static_cast<int>(j));
    return gpusched::virtual_deadlines(mrets, e.deadline);
}

const ExecutionWindow& MretTable::window(int task_id, int stage) const {
    return entry(task_id).windows.at(static_cast<std::size_t>(stage));
}

std::vector<Seconds> virtual_deadlines(std::span<const Seconds> stage_mrets, Seconds deadline) {
    const Seconds total = std::accumulate(stage_mrets.begin(), stage_mrets.end(), 0.0);
    if (!(total > 0.0)) throw ZeroTotalMret("stage MRETs sum to zero");
    std::vector<Seconds> out(stage_mrets.size());
    Seconds assigned = 0.0;
    for (std::size_t j = 0; j + 1 < out.size(); ++j) {
        out[j] = stage_mrets[j] / total * deadline;
        assigned += out[j];
    }
    out.back() = deadline - assigned;
    return out;
}

namespace {

// Target jobs timed per repetition.
constexpr int kTargetJobsPerRun = 3;

struct Slot {
    const TaskSpec* task = nullptr;
    int stage = 0;
    bool target = false;
};

}  // namespace

Seconds measure_afet(const TaskSpec& target, const TaskSet& pool, const GpuConfig& gpu, int repetitions,
                     std::uint64_t seed, const RateModel* model) {
    if (repetitions < 1) throw InvalidScenario("AFET repetitions must be >= 1");
    const RateModel& rates = model ? *model : default_rate_model();
    const int n_slots = gpu.n_contexts * gpu.n_streams;

    std::vector<const TaskSpec*> candidates;
    for (const auto& t : pool.tasks()) candidates.push_back(&t);
    if (candidates.empty()) candidates.push_back(&target);

    auto stage_work = [](const Slot& slot) {
        const TaskSpec& t = *slot.task;
        return effective_stage_time(t.stages()[static_cast<std::size_t>(slot.stage)], t.batch_size(), t.batching());
    };

    Seconds sum = 0.0;
    int samples = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(rep)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);

        std::vector<Slot> slots(static_cast<std::size_t>(n_slots));
        std::vector<ActiveStage> active(slots.size());
        for (std::size_t s = 0; s < slots.size(); ++s) {
            slots[s].target = (s == 0);
            slots[s].task = s == 0 ? &target : candidates[pick(rng)];
            active[s].job_id = s;
            active[s].context = static_cast<int>(s) / gpu.n_streams;
            active[s].width = slots[s].task->stages()[0].width;
            active[s].remaining_work = stage_work(slots[s]);
        }

        Seconds now = 0.0;
        Seconds job_start = 0.0;
        int done = 0;
        while (done < kTargetJobsPerRun) {
            const RateAllocation alloc = rates.allocate(active, gpu);
            const Completion next = next_completion(active, alloc, now);
            advance_progress(active, alloc, next.time - now);
            now = next.time;

            Slot& slot = slots[next.index];
            ActiveStage& stage = active[next.index];
            stage.remaining_work = 0.0;
            if (++slot.stage == static_cast<int>(slot.task->stage_count())) {
                slot.stage = 0;
                if (slot.target) {
                    sum += now - job_start;
                    ++samples;
                    ++done;
                    job_start = now;
                } else {
                    slot.task = candidates[pick(rng)];
                }
            }
            stage.stage_index = slot.stage;
            stage.width = slot.task->stages()[static_cast<std::size_t>(slot.stage)].width;
            stage.remaining_work = stage_work(slot);
        }
    }
    return sum / samples;
}

}  // namespace gpusched
