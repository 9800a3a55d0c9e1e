#include "gpusched/core_model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gpusched/errors.hpp"
#include "gpusched/gpu_sim.hpp"
#include "gpusched/presets.hpp"
#include "gpusched/timing_estimator.hpp"

namespace gpusched {

std::string_view to_string(Priority p) { return p == Priority::HP ? "hp" : "lp"; }

Priority priority_from_string(std::string_view s) {
    if (s == "hp" || s == "HP") return Priority::HP;
    if (s == "lp" || s == "LP") return Priority::LP;
    throw SchemaError("unknown priority '" + std::string(s) + "'");
}

std::string_view to_string(StageState s) {
    switch (s) {
        case StageState::Pending: return "pending";
        case StageState::Ready: return "ready";
        case StageState::Running: return "running";
        case StageState::Done: return "done";
    }
    return "?";
}

TaskSpec::TaskSpec(int id, Seconds period, Priority priority, std::vector<StageProfile> stages,
                   std::string dnn, int batch_size, BatchingCurve batching)
    : id_(id),
      period_(period),
      deadline_(period),
      priority_(priority),
      stages_(std::move(stages)),
      dnn_(std::move(dnn)),
      batch_size_(batch_size),
      batching_(batching) {}

Seconds TaskSpec::nominal_total() const {
    return std::accumulate(stages_.begin(), stages_.end(), 0.0,
                           [](Seconds acc, const StageProfile& s) { return acc + s.nominal_time; });
}

TaskSpec TaskSpec::with_period(Seconds period) const {
    TaskSpec copy = *this;
    copy.period_ = period;
    copy.deadline_ = period;
    return copy;
}

TaskSpec TaskSpec::with_id(int id) const {
    TaskSpec copy = *this;
    copy.id_ = id;
    return copy;
}

TaskSpec TaskSpec::with_batch(int batch_size) const {
    TaskSpec copy = *this;
    copy.batch_size_ = batch_size;
    return copy;
}

TaskSpec TaskSpec::collapsed() const {
    if (stages_.size() <= 1) return *this;
    StageProfile whole{nominal_total(), 0};
    for (const auto& s : stages_) whole.width = std::max(whole.width, s.width);
    TaskSpec copy = *this;
    copy.stages_ = {whole};
    return copy;
}

namespace {

void validate_spec(const TaskSpec& spec) {
    const std::string who = "task " + std::to_string(spec.id());
    if (spec.stages().empty()) throw InvalidStage(who + " has no stages");
    for (const auto& s : spec.stages()) {
        if (!(s.nominal_time > 0.0)) throw InvalidStage(who + ": nominal_time must be > 0");
        if (s.width < 1) throw InvalidStage(who + ": width must be >= 1");
    }
    if (!(spec.period() > 0.0)) throw InvalidStage(who + ": period must be > 0");
    if (spec.deadline() != spec.period()) throw InvalidStage(who + ": deadline must equal period");
    if (spec.batch_size() < 1) throw InvalidStage(who + ": batch_size must be >= 1");
}

}  // namespace

TaskSet build_task_set_allow_empty(std::vector<TaskSpec> specs) {
    std::vector<char> seen(specs.size() + 1, 0);
    for (const auto& spec : specs) {
        validate_spec(spec);
        const int id = spec.id();
        if (id >= 1 && id <= static_cast<int>(specs.size()) && seen[static_cast<std::size_t>(id)]) {
            throw DuplicateId("task id " + std::to_string(id) + " appears twice");
        }
        if (id < 1 || id > static_cast<int>(specs.size())) {
            // an out-of-range id is a duplicate if it repeats, otherwise a gap
            for (const auto& other : specs) {
                if (&other != &spec && other.id() == id) throw DuplicateId("task id " + std::to_string(id) + " appears twice");
            }
            throw InvalidTaskId("task ids must be 1.." + std::to_string(specs.size()) + ", got " + std::to_string(id));
        }
        seen[static_cast<std::size_t>(id)] = 1;
    }
    std::sort(specs.begin(), specs.end(), [](const TaskSpec& a, const TaskSpec& b) { return a.id() < b.id(); });

    TaskSet set;
    set.tasks_ = std::move(specs);
    for (const auto& t : set.tasks_) {
        if (t.is_hp()) ++set.n_hp_;
        else ++set.n_lp_;
    }
    return set;
}

TaskSet build_task_set(std::vector<TaskSpec> specs) {
    if (specs.empty()) throw EmptyTaskSet("a task set needs at least one task");
    return build_task_set_allow_empty(std::move(specs));
}

void StageJob::advance_to(StageState next) {
    const auto cur = static_cast<int>(state);
    if (static_cast<int>(next) != cur + 1) {
        throw std::logic_error("illegal stage transition " + std::string(to_string(state)) + " -> " +
                               std::string(to_string(next)));
    }
    state = next;
}

Job make_job(const TaskState& task, Seconds release_time, const MretTable& mret, JobId job_id) {
    const TaskSpec& spec = *task.spec;
    Job job;
    job.job_id = job_id;
    job.task_id = spec.id();
    job.priority = spec.priority();
    job.release_time = release_time;
    job.absolute_deadline = release_time + spec.deadline();
    job.batch_size = spec.batch_size();

    const auto relative = mret.virtual_deadlines(spec.id());
    job.stage_jobs.reserve(spec.stage_count());
    Seconds cumulative = release_time;
    for (std::size_t j = 0; j < spec.stage_count(); ++j) {
        StageJob sj;
        sj.stage_index = static_cast<int>(j);
        sj.remaining_work = effective_stage_time(spec.stages()[j], spec.batch_size(), spec.batching());
        cumulative += relative[j];
        sj.virtual_abs_deadline = cumulative;
        job.stage_jobs.push_back(sj);
    }
    // the cumulative sum can drift by an ulp; the last stage owns the job deadline
    job.stage_jobs.back().virtual_abs_deadline = job.absolute_deadline;
    return job;
}

int stage_count_for_preset(std::string_view dnn, bool no_staging) {
    const DnnProfile& profile = dnn_profile(dnn);
    return no_staging ? 1 : static_cast<int>(profile.stage_fractions.size());
}

}  // namespace gpusched
