#include "gpusched/scheduler.hpp"

#include <algorithm>
#include <numeric>

#include "gpusched/errors.hpp"

namespace gpusched {

std::vector<int> populate_contexts(std::span<const double> utilizations, std::span<const Priority> priorities,
                                   int n_contexts, PopulateOrder order, std::vector<double>* totals) {
    const std::size_t n = utilizations.size();
    std::vector<std::size_t> visit;
    visit.reserve(n);
    for (Priority cls : {Priority::HP, Priority::LP}) {
        const auto first = visit.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (priorities[i] == cls) visit.push_back(i);
        }
        if (order == PopulateOrder::DescendingUtilization) {
            std::stable_sort(visit.begin() + static_cast<std::ptrdiff_t>(first), visit.end(),
                             [&](std::size_t a, std::size_t b) { return utilizations[a] > utilizations[b]; });
        }
    }

    std::vector<double> sums(static_cast<std::size_t>(n_contexts), 0.0);
    std::vector<int> assignment(n, 0);
    for (auto i : visit) {
        const auto k = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
        assignment[i] = static_cast<int>(k);
        sums[k] += utilizations[i];
    }
    if (totals) *totals = std::move(sums);
    return assignment;
}

bool admission_test(double lp_active, double hp_total, int n_streams, double task_util) {
    const double remaining = static_cast<double>(n_streams) - hp_total;
    return lp_active + task_util < remaining;
}

Seconds predicted_finish_time(Seconds now, Seconds backlog_mret, int n_streams, Seconds task_mret) {
    return now + backlog_mret / n_streams + task_mret;
}

int stage_level(Priority priority, bool is_last, bool predecessor_missed, const AblationFlags& ablations) {
    if (ablations.no_fixed) return 0;
    if (ablations.no_last) is_last = false;
    if (ablations.no_prior) predecessor_missed = false;
    return (priority == Priority::LP ? 4 : 0) + (is_last ? 0 : 2) + (predecessor_missed ? 0 : 1);
}

Scheduler::Scheduler(const TaskSet& tasks, const GpuConfig& gpu, SchedulerOptions options)
    : tasks_(&tasks),
      gpu_(gpu),
      options_(options),
      mret_(tasks, options.window_size),
      ready_(static_cast<std::size_t>(gpu.n_contexts)),
      active_jobs_(tasks.size(), std::vector<int>(static_cast<std::size_t>(gpu.n_contexts), 0)) {
    states_.reserve(tasks.size());
    for (const auto& spec : tasks.tasks()) states_.push_back(TaskState{&spec, 0, 0.0});
}

void Scheduler::set_afet(int task_id, Seconds afet) {
    states_.at(static_cast<std::size_t>(task_id - 1)).afet = afet;
    mret_.set_afet(task_id, afet);
}

void Scheduler::populate_contexts() {
    std::vector<double> utils;
    std::vector<Priority> prios;
    for (const auto& spec : tasks_->tasks()) {
        utils.push_back(mret_.task_utilization(spec.id()));
        prios.push_back(spec.priority());
    }
    const auto assignment = gpusched::populate_contexts(utils, prios, gpu_.n_contexts, options_.populate_order);
    for (std::size_t i = 0; i < states_.size(); ++i) states_[i].context = assignment[i];
}

ContextUtilization Scheduler::context_utilization(int context) const {
    ContextUtilization cu;
    const auto k = static_cast<std::size_t>(context);
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const TaskSpec& spec = *states_[i].spec;
        const double u = mret_.task_utilization(spec.id());
        const bool home = states_[i].context == context;
        const bool active = active_jobs_[i][k] > 0;
        if (spec.is_hp()) {
            if (home) cu.hp_total += u;
            if (active) cu.hp_active += u;
        } else {
            if (home) cu.lp_total += u;
            if (active) cu.lp_active += u;
        }
    }
    cu.total = cu.hp_total + cu.lp_total;
    cu.active = cu.hp_total + cu.lp_active;
    return cu;
}

std::vector<ContextUtilization> Scheduler::context_utilizations() const {
    std::vector<ContextUtilization> out;
    out.reserve(static_cast<std::size_t>(gpu_.n_contexts));
    for (int k = 0; k < gpu_.n_contexts; ++k) out.push_back(context_utilization(k));
    return out;
}

bool Scheduler::test_context(const Job& job, int context, double task_util, Placement& out) const {
    const ContextUtilization cu = context_utilization(context);
    out.context = context;
    out.task_util = task_util;
    if (job.priority == Priority::HP) {
        // HP jobs under HPA reserve nothing up front: only HP and LP tasks
        // with work in flight count against the context's streams.
        out.lp_active = cu.lp_active + cu.hp_active;
        out.hp_total = 0.0;
    } else {
        out.lp_active = cu.lp_active;
        out.hp_total = cu.hp_total;
    }
    return admission_test(out.lp_active, out.hp_total, gpu_.n_streams, task_util);
}

Seconds Scheduler::predicted_finish_time(const Job& job, int context, Seconds t) const {
    Seconds backlog = 0.0;
    for (const auto& [id, other] : jobs_) {
        if (other.context != context) continue;
        for (const auto& sj : other.stage_jobs) {
            if (sj.state != StageState::Done) backlog += mret_.mret_stage(other.task_id, sj.stage_index);
        }
    }
    return gpusched::predicted_finish_time(t, backlog, gpu_.n_streams, mret_.mret_task(job.task_id));
}

Placement Scheduler::admit_or_migrate(const Job& job, Seconds t) const {
    const TaskState& state = task_state(job.task_id);
    const double u = mret_.task_utilization(job.task_id);
    Placement p;
    p.home_context = state.context;

    if (job.priority == Priority::HP && !options_.mode.hpa_enabled) {
        const ContextUtilization cu = context_utilization(state.context);
        p.admitted = true;
        p.context = state.context;
        p.task_util = u;
        p.lp_active = cu.lp_active;
        p.hp_total = cu.hp_total;
        return p;
    }

    p.tested = true;
    if (test_context(job, state.context, u, p)) {
        p.admitted = true;
        return p;
    }
    if (job.priority == Priority::HP) {
        p.context = -1;
        return p;
    }

    std::optional<Placement> best;
    Seconds best_finish = 0.0;
    for (int k = 0; k < gpu_.n_contexts; ++k) {
        if (k == state.context) continue;
        Placement candidate = p;
        if (!test_context(job, k, u, candidate)) continue;
        const Seconds finish = predicted_finish_time(job, k, t);
        if (!best || finish < best_finish) {
            best = candidate;
            best_finish = finish;
        }
    }
    if (!best) {
        p.context = -1;
        return p;
    }
    best->admitted = true;
    best->migrated = true;
    return *best;
}

PriorityKey Scheduler::priority_key(const Job& job, int stage) const {
    const StageJob& sj = job.stage_jobs.at(static_cast<std::size_t>(stage));
    PriorityKey key;
    key.level = stage_level(job.priority, job.is_last_stage(stage), sj.predecessor_missed, options_.ablations);
    key.edf_key = options_.edf_key == EdfKey::StageVirtualDeadline ? sj.virtual_abs_deadline : job.absolute_deadline;
    key.task_id = job.task_id;
    key.job_id = job.job_id;
    return key;
}

std::pair<Job, Placement> Scheduler::release(int task_id, Seconds t) {
    TaskState& state = states_.at(static_cast<std::size_t>(task_id - 1));
    Job job = make_job(state, t, mret_, next_job_id_++);
    const Placement p = admit_or_migrate(job, t);
    if (!p.admitted) return {std::move(job), p};

    job.context = p.context;
    if (p.migrated) state.context = p.context;
    job.stage_jobs.front().advance_to(StageState::Ready);
    ready_[static_cast<std::size_t>(p.context)].insert({priority_key(job, 0), {job.job_id, 0}});
    mark_active(job, +1);
    auto [it, inserted] = jobs_.emplace(job.job_id, std::move(job));
    return {it->second, p};
}

std::optional<StageRef> Scheduler::dispatch(int context, Seconds t) {
    auto& queue = ready_.at(static_cast<std::size_t>(context));
    if (queue.empty()) return std::nullopt;
    const StageRef ref = queue.begin()->ref;
    queue.erase(queue.begin());
    StageJob& sj = jobs_.at(ref.job_id).stage_jobs.at(static_cast<std::size_t>(ref.stage));
    sj.advance_to(StageState::Running);
    sj.start_time = t;
    return ref;
}

std::optional<Job> Scheduler::on_stage_complete(StageRef ref, Seconds t) {
    Job& job = jobs_.at(ref.job_id);
    StageJob& sj = job.stage_jobs.at(static_cast<std::size_t>(ref.stage));
    sj.advance_to(StageState::Done);
    sj.remaining_work = 0.0;
    mret_.record_execution(job.task_id, ref.stage, t - sj.start_time);

    if (!job.is_last_stage(ref.stage)) {
        StageJob& next = job.stage_jobs.at(static_cast<std::size_t>(ref.stage + 1));
        next.predecessor_missed = t > sj.virtual_abs_deadline;
        next.advance_to(StageState::Ready);
        ready_.at(static_cast<std::size_t>(job.context)).insert({priority_key(job, ref.stage + 1), {job.job_id, ref.stage + 1}});
        return std::nullopt;
    }

    mret_.on_job_completed(job.task_id);
    mark_active(job, -1);
    Job done = std::move(job);
    jobs_.erase(ref.job_id);
    return done;
}

void Scheduler::mark_active(const Job& job, int delta) {
    active_jobs_.at(static_cast<std::size_t>(job.task_id - 1)).at(static_cast<std::size_t>(job.context)) += delta;
}

}  // namespace gpusched
