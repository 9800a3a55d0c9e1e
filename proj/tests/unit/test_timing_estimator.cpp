#include "doctest.h"

#include <numeric>
#include <random>

#include "gpusched/errors.hpp"
#include "gpusched/gpu_sim.hpp"
#include "gpusched/timing_estimator.hpp"
#include "oracles.hpp"

using namespace gpusched;

namespace {

std::vector<double> window_values(const ExecutionWindow& w) {
    std::vector<double> out;
    for (const auto& s : w.samples()) out.push_back(s.observed_time);
    return out;
}

TaskSet one_task(std::vector<StageProfile> stages, Seconds period = 0.1) {
    return build_task_set({TaskSpec(1, period, Priority::LP, std::move(stages))});
}

}  // namespace

TEST_CASE("window evicts the oldest sample") {
    ExecutionWindow w(5);
    for (double v : {12.0, 9.0, 15.0, 11.0, 10.0}) w.record(v);
    CHECK(w.max() == 15.0);
    w.record(8.0);
    CHECK(window_values(w) == std::vector<double>{9, 15, 11, 10, 8});
    CHECK(w.samples().back().completion_index == 5);
}

TEST_CASE("window with fewer samples than its size") {
    ExecutionWindow w(5);
    CHECK_FALSE(w.max().has_value());
    w.record(7.0);
    CHECK(window_values(w) == std::vector<double>{7});
    w.record(9.0);
    CHECK(w.max() == 9.0);
}

TEST_CASE("nonpositive samples are rejected") {
    ExecutionWindow w(5);
    CHECK_THROWS_AS(w.record(-1.0), NonpositiveSample);
    CHECK_THROWS_AS(w.record(0.0), NonpositiveSample);
    CHECK(w.empty());
}

TEST_CASE("window max matches brute force over random histories") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> v(0.1, 20.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t ws = 1 + trial % 8;
        ExecutionWindow w(ws);
        std::vector<double> history;
        for (int i = 0; i < 30; ++i) {
            history.push_back(v(rng));
            w.record(history.back());
            REQUIRE(w.max() == oracle::window_max(history, ws));
            REQUIRE(w.size() == std::min(ws, history.size()));
        }
    }
}

TEST_CASE("stage MRET falls back to the AFET share") {
    const TaskSet set = one_task({{0.002, 10}, {0.008, 10}});
    MretTable m(set, 5);
    m.set_afet(1, 0.010);
    // shares 0.2 / 0.8 of the nominal total
    CHECK(m.mret_stage(1, 0) == doctest::Approx(0.010 * 0.002 / 0.010));
    CHECK(m.mret_stage(1, 0) == doctest::Approx(0.002));
    CHECK(m.mret_task(1) == doctest::Approx(0.010));
    m.record_execution(1, 1, 0.009);
    CHECK(m.mret_stage(1, 1) == 0.009);
    CHECK(m.mret_stage(1, 0) == doctest::Approx(0.002));
}

TEST_CASE("task MRET sums the stage maxima") {
    const TaskSet set = one_task({{0.002, 10}, {0.003, 10}, {0.005, 10}});
    MretTable m(set, 5);
    m.record_execution(1, 0, 0.002);
    m.record_execution(1, 1, 0.003);
    m.record_execution(1, 2, 0.005);
    CHECK(m.mret_task(1) == doctest::Approx(0.010));

    const TaskSet single = one_task({{0.004, 10}});
    MretTable s(single, 5);
    s.record_execution(1, 0, 0.004);
    CHECK(s.mret_task(1) == 0.004);
}

TEST_CASE("utilization uses AFET until a job completes") {
    const TaskSet set = one_task({{0.005, 10}, {0.005, 10}}, 0.0333);
    MretTable m(set, 5);
    m.set_afet(1, 0.010);
    CHECK(m.task_utilization(1) == doctest::Approx(0.30).epsilon(0.01));

    // samples alone do not move the snapshot
    m.record_execution(1, 0, 0.006);
    m.record_execution(1, 1, 0.006);
    CHECK(m.task_utilization(1) == doctest::Approx(0.010 / 0.0333));
    m.on_job_completed(1);
    CHECK(m.task_utilization(1) == doctest::Approx(0.012 / 0.0333));
    CHECK(m.completed_jobs(1) == 1);
}

TEST_CASE("utilization from MRET") {
    const TaskSet set = one_task({{0.012, 10}}, 0.0417);
    MretTable m(set, 5);
    m.record_execution(1, 0, 0.012);
    m.on_job_completed(1);
    CHECK(m.task_utilization(1) == doctest::Approx(0.288).epsilon(0.001));
}

TEST_CASE("virtual deadlines split D in proportion to MRET") {
    const std::vector<Seconds> a{2, 3, 5};
    const auto d = virtual_deadlines(a, 100.0);
    CHECK(d[0] == doctest::Approx(20));
    CHECK(d[1] == doctest::Approx(30));
    CHECK(d[2] == doctest::Approx(50));

    const std::vector<Seconds> eq{1, 1, 1, 1};
    for (double v : virtual_deadlines(eq, 80.0)) CHECK(v == doctest::Approx(20));

    const std::vector<Seconds> thirds{1, 1, 1};
    const auto t = virtual_deadlines(thirds, 10.0);
    CHECK(t[2] == 10.0 - (t[0] + t[1]));
    CHECK(t[0] + t[1] + t[2] == 10.0);

    const std::vector<Seconds> zero{0, 0};
    CHECK_THROWS_AS(virtual_deadlines(zero, 10.0), ZeroTotalMret);
}

TEST_CASE("virtual deadlines always sum to D") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> v(1e-4, 1e-2);
    std::uniform_real_distribution<double> dl(1e-3, 1.0);
    for (int i = 0; i < 1000; ++i) {
        std::vector<Seconds> m(1 + i % 6);
        for (auto& x : m) x = v(rng);
        const Seconds D = dl(rng);
        const auto d = virtual_deadlines(m, D);
        const double sum = std::accumulate(d.begin(), d.end(), 0.0);
        REQUIRE(std::abs(sum - D) <= 1e-15 * D * 4);
        for (double x : d) REQUIRE(x > 0.0);
    }
}

TEST_CASE("AFET without colocation is the nominal total") {
    const TaskSet set = one_task({{0.001, 20}, {0.003, 30}});
    GpuConfig g;
    const Seconds afet = measure_afet(set.task(1), set, g, 3, 42);
    CHECK(afet == doctest::Approx(0.004).epsilon(1e-12));
}

TEST_CASE("AFET is deterministic per seed") {
    std::vector<TaskSpec> specs;
    for (int i = 1; i <= 4; ++i) specs.emplace_back(i, 0.05, Priority::LP, std::vector<StageProfile>{{0.001 * i, 10 * i}});
    const TaskSet set = build_task_set(std::move(specs));
    GpuConfig g{68, 2, 2, 1.5, Policy::MPS_STR, 0.0};
    CHECK(measure_afet(set.task(2), set, g, 10, 9) == measure_afet(set.task(2), set, g, 10, 9));
}

TEST_CASE("AFET of a stage sharing the GPU with an equal competitor") {
    std::vector<TaskSpec> specs;
    specs.emplace_back(1, 0.1, Priority::HP, std::vector<StageProfile>{{0.004, 68}});
    specs.emplace_back(2, 0.1, Priority::LP, std::vector<StageProfile>{{0.004, 68}});
    const TaskSet set = build_task_set(std::move(specs));
    GpuConfig g{68, 1, 2, 1.0, Policy::STR, 0.0};

    std::vector<oracle::StepStage> pair{{0, 0, 0, 68, 0.0, 0.004}, {1, 0, 0, 68, 0.0, 0.004}};
    oracle::integrate_fixed_step(pair, g, 1e-6, 0.02);
    const Seconds expected = pair[0].finish;
    CHECK(expected == doctest::Approx(0.008).epsilon(1e-3));
    CHECK(measure_afet(set.task(1), set, g, 5, 3) == doctest::Approx(expected).epsilon(1e-3));
}
