#include "gpusched/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "gpusched/errors.hpp"
#include "gpusched/timing_estimator.hpp"

#include "json.hpp"

namespace gpusched {

namespace {

constexpr Seconds kNever = std::numeric_limits<double>::infinity();

// splitmix64 finalizer; decorrelates per-task AFET seeds from the run seed
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

ResponseStats summarize_responses(std::vector<double> samples) {
    ResponseStats s;
    if (samples.empty()) return s;
    double sum = 0.0;
    for (double v : samples) sum += v;
    s.mean = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    s.min = samples.front();
    s.max = samples.back();
    const std::size_t rank = (95 * samples.size() + 99) / 100;  // ceil(0.95 n) without rounding error
    s.p95 = samples[rank - 1];
    return s;
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::Assign: return "assign";
        case EventKind::JobRelease: return "release";
        case EventKind::StageStart: return "start";
        case EventKind::StageComplete: return "complete";
        case EventKind::JobFinish: return "finish";
        case EventKind::UtilUpdate: return "util";
        case EventKind::SimEnd: return "end";
    }
    return "?";
}

EventKind event_kind_from_string(std::string_view s) {
    for (auto k : {EventKind::Assign, EventKind::JobRelease, EventKind::StageStart, EventKind::StageComplete,
                   EventKind::JobFinish, EventKind::UtilUpdate, EventKind::SimEnd}) {
        if (to_string(k) == s) return k;
    }
    throw ParseError("unknown event kind '" + std::string(s) + "'");
}

void write_event_log(std::ostream& out, const std::vector<EventRecord>& log) {
    for (const auto& r : log) {
        nlohmann::ordered_json j;
        j["t"] = r.time;
        j["kind"] = to_string(r.kind);
        j["task"] = r.task;
        j["job"] = r.job;
        j["stage"] = r.stage;
        j["context"] = r.context;
        j["stream"] = r.stream;
        j["rate"] = r.rate;
        j["priority"] = to_string(r.priority);
        j["admitted"] = r.admitted;
        j["migrated"] = r.migrated;
        j["util"] = r.util;
        j["deadline"] = r.deadline;
        j["batch"] = r.batch;
        out << j.dump() << '\n';
    }
}

std::vector<EventRecord> read_event_log(std::istream& in) {
    std::vector<EventRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            EventRecord r;
            r.time = j.at("t").get<double>();
            r.kind = event_kind_from_string(j.at("kind").get<std::string>());
            r.task = j.at("task").get<int>();
            r.job = j.at("job").get<std::int64_t>();
            r.stage = j.at("stage").get<int>();
            r.context = j.at("context").get<int>();
            r.stream = j.at("stream").get<int>();
            r.rate = j.at("rate").get<double>();
            r.priority = priority_from_string(j.at("priority").get<std::string>());
            r.admitted = j.at("admitted").get<bool>();
            r.migrated = j.at("migrated").get<bool>();
            r.util = j.at("util").get<double>();
            r.deadline = j.at("deadline").get<double>();
            r.batch = j.at("batch").get<int>();
            out.push_back(r);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("event log: ") + e.what());
        }
    }
    return out;
}

double task_demand(const TaskSpec& task, const CapacityModel& capacity) {
    double work = 0.0;
    for (const auto& s : task.stages()) {
        work += s.nominal_time * std::min(s.width, capacity.total_sms) / capacity.total_sms;
    }
    return work / task.period();
}

double aggregate_demand(const TaskSet& tasks, const CapacityModel& capacity) {
    double sum = 0.0;
    for (const auto& t : tasks.tasks()) sum += task_demand(t, capacity);
    return sum;
}

TaskSet scale_to_overload(const TaskSet& tasks, double factor, const CapacityModel& capacity) {
    if (!(factor > 0.0)) throw InvalidScenario("overload factor must be > 0");
    const double demand = aggregate_demand(tasks, capacity);
    if (demand == 0.0) return tasks;
    const double stretch = demand / factor;
    std::vector<TaskSpec> specs;
    for (const auto& t : tasks.tasks()) specs.push_back(t.with_period(t.period() * stretch));
    return build_task_set_allow_empty(std::move(specs));
}

Simulation::Simulation(TaskSet tasks, SimConfig config, RunHooks hooks)
    : tasks_(std::move(tasks)),
      config_(std::move(config)),
      hooks_(std::move(hooks)),
      model_(config_.rate_model ? config_.rate_model : &default_rate_model()),
      scheduler_(tasks_, config_.gpu, config_.scheduler),
      warmup_(config_.duration * config_.warmup_fraction),
      busy_(static_cast<std::size_t>(config_.gpu.n_contexts),
            std::vector<bool>(static_cast<std::size_t>(config_.gpu.n_streams), false)) {
    config_.gpu.validate();
    for (const auto& t : tasks_.tasks()) {
        for (const auto& s : t.stages()) {
            if (s.width > config_.gpu.total_sms) throw InvalidStage("task " + std::to_string(t.id()) + " is wider than the GPU");
        }
    }
}

void Simulation::log(EventRecord rec) {
    if (config_.record_log) log_.push_back(rec);
}

void Simulation::offline_phase() {
    for (const auto& t : tasks_.tasks()) {
        const Seconds afet = measure_afet(t, tasks_, config_.gpu, config_.afet_repetitions,
                                          mix_seed(config_.seed, static_cast<std::uint64_t>(t.id())), model_);
        scheduler_.set_afet(t.id(), afet);
    }
    scheduler_.populate_contexts();
    for (const auto& t : tasks_.tasks()) {
        EventRecord r;
        r.kind = EventKind::Assign;
        r.task = t.id();
        r.context = scheduler_.task_state(t.id()).context;
        r.priority = t.priority();
        r.util = scheduler_.mret().task_utilization(t.id());
        r.deadline = t.deadline();
        r.batch = t.batch_size();
        log(r);
    }

    std::mt19937_64 rng(config_.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    phases_.clear();
    for (const auto& t : tasks_.tasks()) {
        const Seconds phase = config_.phase_mode == PhaseMode::Random ? unit(rng) * t.period() : 0.0;
        phases_.push_back(phase);
        releases_.push({phase, t.id(), 0});
    }
}

void Simulation::release_job(int task_id, Seconds t) {
    auto [job, placement] = scheduler_.release(task_id, t);
    if (counted(t)) {
        auto& a = acc(job.priority);
        ++a.counts.released;
        if (placement.admitted) ++a.counts.accepted;
        else ++a.counts.rejected;
    }
    EventRecord r;
    r.time = t;
    r.kind = EventKind::JobRelease;
    r.task = task_id;
    r.job = static_cast<std::int64_t>(job.job_id);
    r.context = placement.admitted ? placement.context : -1;
    r.priority = job.priority;
    r.admitted = placement.admitted;
    r.migrated = placement.migrated;
    r.util = placement.task_util;
    r.deadline = job.absolute_deadline;
    r.batch = job.batch_size;
    log(r);
}

void Simulation::recompute_and_schedule(Seconds t) {
    for (int k = 0; k < config_.gpu.n_contexts; ++k) {
        auto& streams = busy_[static_cast<std::size_t>(k)];
        for (int s = 0; s < config_.gpu.n_streams; ++s) {
            if (streams[static_cast<std::size_t>(s)]) continue;
            if (scheduler_.ready_queue(k).empty()) break;

            DispatchSnapshot snapshot;
            if (hooks_.on_dispatch) {
                snapshot.time = t;
                snapshot.context = k;
                for (const auto& entry : scheduler_.ready_queue(k)) {
                    const Job& job = scheduler_.job(entry.ref.job_id);
                    const StageJob& sj = job.stage_jobs[static_cast<std::size_t>(entry.ref.stage)];
                    snapshot.ready.push_back({entry.ref, job.task_id, job.priority, job.is_last_stage(entry.ref.stage),
                                              sj.predecessor_missed, sj.virtual_abs_deadline, job.absolute_deadline});
                }
            }
            const auto ref = scheduler_.dispatch(k, t);
            if (hooks_.on_dispatch) {
                snapshot.chosen = *ref;
                hooks_.on_dispatch(snapshot);
            }

            const Job& job = scheduler_.job(ref->job_id);
            const TaskSpec& spec = tasks_.task(job.task_id);
            const StageJob& sj = job.stage_jobs[static_cast<std::size_t>(ref->stage)];
            streams[static_cast<std::size_t>(s)] = true;
            active_.push_back({ref->job_id, ref->stage, k, spec.stages()[static_cast<std::size_t>(ref->stage)].width,
                               sj.remaining_work});
            active_stream_.push_back(s);

            EventRecord r;
            r.time = t;
            r.kind = EventKind::StageStart;
            r.task = job.task_id;
            r.job = static_cast<std::int64_t>(job.job_id);
            r.stage = ref->stage;
            r.context = k;
            r.stream = s;
            r.priority = job.priority;
            r.deadline = sj.virtual_abs_deadline;
            r.batch = job.batch_size;
            log(r);
        }
    }
    allocation_ = model_->allocate(active_, config_.gpu);
    if (hooks_.on_allocation) hooks_.on_allocation(active_, allocation_);
}

void Simulation::complete_stage(std::size_t index, Seconds t) {
    const ActiveStage stage = active_[index];
    const int stream = active_stream_[index];
    const double rate = allocation_.stages[index].rate;
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(index));
    active_stream_.erase(active_stream_.begin() + static_cast<std::ptrdiff_t>(index));
    allocation_.stages.erase(allocation_.stages.begin() + static_cast<std::ptrdiff_t>(index));
    busy_[static_cast<std::size_t>(stage.context)][static_cast<std::size_t>(stream)] = false;

    const Job& job = scheduler_.job(stage.job_id);
    EventRecord r;
    r.time = t;
    r.kind = EventKind::StageComplete;
    r.task = job.task_id;
    r.job = static_cast<std::int64_t>(stage.job_id);
    r.stage = stage.stage_index;
    r.context = stage.context;
    r.stream = stream;
    r.rate = rate;
    r.priority = job.priority;
    r.deadline = job.stage_jobs[static_cast<std::size_t>(stage.stage_index)].virtual_abs_deadline;
    r.batch = job.batch_size;
    log(r);

    const auto finished = scheduler_.on_stage_complete({stage.job_id, stage.stage_index}, t);
    if (!finished) return;

    const bool missed = t > finished->absolute_deadline;
    if (t >= warmup_) completed_in_window_ += finished->batch_size;
    if (counted(finished->release_time)) {
        auto& a = acc(finished->priority);
        ++a.counts.completed;
        if (missed) ++a.counts.missed;
        a.responses.push_back(t - finished->release_time);
    }

    r.kind = EventKind::JobFinish;
    r.stage = -1;
    r.stream = -1;
    r.rate = -1.0;
    r.deadline = finished->absolute_deadline;
    log(r);

    EventRecord u;
    u.time = t;
    u.kind = EventKind::UtilUpdate;
    u.task = finished->task_id;
    u.priority = finished->priority;
    u.util = scheduler_.mret().task_utilization(finished->task_id);
    log(u);
}

RunResult Simulation::run() {
    offline_phase();
    const Seconds end = config_.duration;
    now_ = 0.0;
    while (true) {
        Seconds t_release = releases_.empty() ? kNever : releases_.top().time;
        if (t_release >= end) t_release = kNever;
        Completion next{0, kNever};
        if (!active_.empty()) next = next_completion(active_, allocation_, now_);
        if (next.time > end) next.time = kNever;
        if (t_release == kNever && next.time == kNever) break;

        if (t_release <= next.time) {
            advance_progress(active_, allocation_, t_release - now_);
            now_ = t_release;
            const Release rel = releases_.top();
            releases_.pop();
            release_job(rel.task_id, now_);
            const auto idx = static_cast<std::size_t>(rel.task_id - 1);
            const std::uint64_t following = rel.index + 1;
            releases_.push({phases_[idx] + static_cast<double>(following) * tasks_.task(rel.task_id).period(),
                            rel.task_id, following});
        } else {
            advance_progress(active_, allocation_, next.time - now_);
            now_ = next.time;
            active_[next.index].remaining_work = 0.0;
            complete_stage(next.index, now_);
        }
        recompute_and_schedule(now_);
        if (hooks_.after_event) hooks_.after_event(scheduler_, now_);
    }

    EventRecord r;
    r.time = end;
    r.kind = EventKind::SimEnd;
    log(r);
    return {finalize(end), std::move(log_)};
}

MetricsReport Simulation::finalize(Seconds end) {
    for (const auto& [id, job] : scheduler_.in_flight()) {
        if (counted(job.release_time) && job.absolute_deadline < end) ++acc(job.priority).counts.missed;
    }
    MetricsReport m;
    const GpuConfig& g = config_.gpu;
    m.config_label = g.label();
    m.policy = g.policy;
    m.n_contexts = g.n_contexts;
    m.n_streams = g.n_streams;
    m.oversubscription = g.oversubscription;
    m.seed = config_.seed;
    m.hp = hp_.counts;
    m.lp = lp_.counts;
    m.dmr_hp = m.hp.accepted ? static_cast<double>(m.hp.missed) / static_cast<double>(m.hp.accepted) : 0.0;
    m.dmr_lp = m.lp.accepted ? static_cast<double>(m.lp.missed) / static_cast<double>(m.lp.accepted) : 0.0;
    m.response_hp = summarize_responses(hp_.responses);
    m.response_lp = summarize_responses(lp_.responses);
    const Seconds window = end - warmup_;
    m.jps = window > 0.0 ? completed_in_window_ / window : 0.0;
    return m;
}

RunResult run_simulation(const TaskSet& tasks, const SimConfig& config, const RunHooks& hooks) {
    Simulation sim(tasks, config, hooks);
    return sim.run();
}

TaskSet scenario_task_set(const ScenarioConfig& scenario) {
    TaskSet tasks = build_workload(scenario);
    if (scenario.overload) tasks = scale_to_overload(tasks, *scenario.overload, {scenario.gpu.total_sms});
    return tasks;
}

SimConfig scenario_sim_config(const ScenarioConfig& scenario) {
    SimConfig c;
    c.gpu = scenario.resolved_gpu();
    c.scheduler = scenario.scheduler_options();
    c.seed = scenario.seed;
    c.duration = scenario.duration;
    c.warmup_fraction = scenario.warmup_fraction;
    c.afet_repetitions = scenario.afet_repetitions;
    c.phase_mode = scenario.phase_mode;
    return c;
}

RunResult run(const ScenarioConfig& scenario, bool record_log, const RunHooks& hooks) {
    validate(scenario);
    SimConfig config = scenario_sim_config(scenario);
    config.record_log = record_log;
    return run_simulation(scenario_task_set(scenario), config, hooks);
}

}  // namespace gpusched
