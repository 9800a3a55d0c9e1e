// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gpusched/sim_engine.hpp"
#include "gpusched/sweep.hpp"
#include "suites.hpp"

using namespace gpusched;

namespace {

// Pinned tolerances.
constexpr double kLpDmrBound = 0.10;
constexpr double kHpDemandShare = 0.5;
constexpr double kStrLpDmrBound = 0.02;
constexpr double kOsStepTolerance = 0.02;
constexpr double kHpToLpResponse = 0.5;
constexpr double kWaterLevelTolerance = 1e-9;
constexpr double kFixedStep = 1e-6;
constexpr double kTrajectoryTolerance = 1e-3;
constexpr int kSuiteInstances = 1000;
constexpr double kSafetyBudget = 10.0;
constexpr double kSuiteBudget = 60.0;
constexpr double kInvariantBudget = 300.0;

const char* const kTablePresets[] = {"resnet18_main", "unet_main", "inceptionv3_main"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs every scenario, spreading them over the hardware threads.
std::vector<MetricsReport> run_all(const std::vector<ScenarioConfig>& scenarios) {
    std::vector<MetricsReport> out(scenarios.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < worker_count(); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < scenarios.size();) out[i] = run(scenarios[i]).report;
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

ScenarioConfig main_config(const std::string& preset, std::uint64_t seed) {
    ScenarioConfig s;
    s.name = preset;
    s.preset = preset;
    s.overload = 1.5;
    s.seed = seed;
    s.duration = 60.0;
    return s;
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

double hp_share(const ScenarioConfig& s) {
    const TaskSet set = scenario_task_set(s);
    std::vector<TaskSpec> hp;
    for (const auto& t : set.tasks()) {
        if (t.priority() == Priority::HP) hp.push_back(t);
    }
    double d = 0.0;
    for (const auto& t : hp) d += task_demand(t, CapacityModel{s.gpu.total_sms});
    return d;
}

void hp_safety() {
    const auto t0 = Clock::now();
    std::vector<ScenarioConfig> runs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) runs.push_back(main_config("resnet18_main", seed));
    const auto reports = run_all(runs);
    const double elapsed = seconds_since(t0);
    const double share = hp_share(runs.front());
    double worst_hp = 0.0, worst_lp = 0.0;
    for (const auto& r : reports) {
        worst_hp = std::max(worst_hp, r.dmr_hp);
        worst_lp = std::max(worst_lp, r.dmr_lp);
    }
    std::ostringstream os;
    os << "HP demand " << share << " of capacity, worst HP DMR " << worst_hp << ", worst LP DMR " << worst_lp
       << " over 10 seeds in " << elapsed << " s";
    report(1, "HP safety", share <= kHpDemandShare && worst_hp == 0.0 && worst_lp < kLpDmrBound && elapsed < kSafetyBudget,
           os.str());
}

void str_timeliness() {
    std::vector<ScenarioConfig> runs;
    for (const char* preset : kTablePresets) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            ScenarioConfig s = main_config(preset, seed);
            s.overload.reset();  // native release rates
            s.gpu = GpuConfig{68, 1, 6, 1.0, Policy::STR, 0.0};
            s.oversubscription_is_nc = false;
            runs.push_back(s);
        }
    }
    const auto reports = run_all(runs);
    bool pass = true;
    std::ostringstream os;
    for (std::size_t p = 0; p < std::size(kTablePresets); ++p) {
        std::uint64_t missed = 0, accepted = 0;
        double worst = 0.0;
        for (std::size_t k = 0; k < 10; ++k) {
            const auto& r = reports[p * 10 + k];
            missed += r.lp.missed;
            accepted += r.lp.accepted;
            worst = std::max(worst, r.dmr_lp);
        }
        const double pooled = accepted ? static_cast<double>(missed) / static_cast<double>(accepted) : 0.0;
        pass = pass && pooled <= kStrLpDmrBound;
        os << kTablePresets[p] << " LP DMR " << pooled << " (worst seed " << worst << ") ";
    }
    report(2, "STR timeliness", pass, os.str());
}

void os_trend() {
    const double levels[] = {1.0, 1.5, 2.0, 6.0};
    constexpr int kSeeds = 5;
    std::vector<ScenarioConfig> runs;
    for (const char* preset : kTablePresets) {
        for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
            for (double os : levels) {
                ScenarioConfig s = main_config(preset, seed);
                s.overload = 2.0;
                s.gpu = GpuConfig{68, 6, 1, os, Policy::MPS, 0.0};
                s.oversubscription_is_nc = false;
                runs.push_back(s);
            }
        }
    }
    const auto reports = run_all(runs);
    bool pass = true;
    std::ostringstream os;
    std::size_t i = 0;
    for (const char* preset : kTablePresets) {
        os << preset << " JPS";
        for (int seed = 0; seed < kSeeds; ++seed, i += std::size(levels)) {
            const MetricsReport* row = &reports[i];
            pass = pass && row[3].jps > row[0].jps;
            for (int k = 1; k < 4; ++k) pass = pass && row[k].jps >= row[k - 1].jps * (1.0 - kOsStepTolerance);
            if (seed == 0) {
                for (int k = 0; k < 4; ++k) os << ' ' << static_cast<long>(row[k].jps);
            }
        }
        os << "; ";
    }
    os << "(seed 1 at OS 1/1.5/2/6)";
    report(3, "Oversubscription trend", pass, os.str());
}

void ablations() {
    std::vector<ScenarioConfig> runs(4, main_config("resnet18_main", 1));
    runs[1].ablations.no_staging = true;
    runs[2].ablations.no_last = true;
    runs[3].ablations.no_fixed = true;
    const auto r = run_all(runs);
    const bool staging = r[1].response_hp.mean >= r[0].response_hp.mean && r[1].dmr_hp >= r[0].dmr_hp;
    const bool last = r[2].response_hp.max > r[0].response_hp.max;
    const bool fixed = r[3].dmr_hp > 0.0 && r[0].dmr_hp == 0.0;
    std::ostringstream os;
    os << "HP mean/max/DMR: full " << r[0].response_hp.mean << '/' << r[0].response_hp.max << '/' << r[0].dmr_hp
       << ", no-staging " << r[1].response_hp.mean << '/' << r[1].dmr_hp << (staging ? " ok" : " WRONG")
       << ", no-last max " << r[2].response_hp.max << (last ? " ok" : " WRONG") << ", no-fixed DMR " << r[3].dmr_hp
       << (fixed ? " ok" : " WRONG");
    report(4, "Ablation ordering", staging && last && fixed, os.str());
}

void hp_responsiveness() {
    std::vector<ScenarioConfig> runs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) runs.push_back(main_config("resnet18_main", seed));
    const auto reports = run_all(runs);
    double worst = 0.0;
    for (const auto& r : reports) worst = std::max(worst, r.response_hp.mean / r.response_lp.mean);
    std::ostringstream os;
    os << "worst HP/LP mean response ratio " << worst << " over 10 seeds";
    report(5, "HP responsiveness", worst <= kHpToLpResponse, os.str());
}

void oracle_suites() {
    const auto t0 = Clock::now();
    auto window = std::async(std::launch::async, [] { return oracle::window_suite(kSuiteInstances, 201); });
    auto water = std::async(std::launch::async, [] { return oracle::water_level_suite(kSuiteInstances, 202, kWaterLevelTolerance); });
    auto traj = std::async(std::launch::async, [] {
        return oracle::trajectory_suite(kSuiteInstances, 203, kFixedStep, kTrajectoryTolerance);
    });
    auto dispatch = std::async(std::launch::async, [] { return oracle::dispatch_suite(kSuiteInstances, 204); });
    auto replay = std::async(std::launch::async, [] { return oracle::replay_suite(kSuiteInstances, 205); });
    const std::pair<const char*, oracle::SuiteResult> all[] = {
        {"window", window.get()}, {"water-level", water.get()}, {"trajectory", traj.get()},
        {"dispatch", dispatch.get()}, {"replay", replay.get()}};
    const double elapsed = seconds_since(t0);
    bool pass = elapsed < kSuiteBudget;
    std::ostringstream os;
    for (const auto& [name, r] : all) {
        pass = pass && r.ok() && r.instances >= kSuiteInstances;
        os << name << ' ' << r.instances - r.failures << '/' << r.instances;
        if (r.worst > 0.0) os << " (worst " << r.worst << ')';
        if (!r.ok()) os << " [" << r.first_failure << ']';
        os << ", ";
    }
    os << "in " << elapsed << " s";
    report(6, "Oracle suites", pass, os.str());
}

void invariants() {
    const auto t0 = Clock::now();
    const SweepPlan plan = expand_sweep(default_sweep(), 68);
    std::vector<ScenarioConfig> cells;
    for (const char* preset : {"resnet18_main", "unet_main", "inceptionv3_main", "mixed_main"}) {
        ScenarioConfig base = main_config(preset, 1);
        base.duration = 5.0;
        for (const auto& c : plan.cells) cells.push_back(cell_scenario(base, c));
    }
    std::vector<std::vector<std::string>> found(cells.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < worker_count(); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < cells.size();) found[i] = oracle::check_invariants(cells[i]);
        });
    }
    for (auto& t : pool) t.join();
    const double elapsed = seconds_since(t0);
    std::size_t bad = 0;
    std::string first;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (found[i].empty()) continue;
        if (bad++ == 0) first = *cells[i].preset + ' ' + cells[i].gpu.label() + ": " + found[i].front();
    }
    std::ostringstream os;
    os << cells.size() - bad << '/' << cells.size() << " cells clean (" << plan.cells.size() << " grid cells x 4 presets) in "
       << elapsed << " s";
    if (bad) os << "; first: " << first;
    report(7, "Invariants", bad == 0 && elapsed < kInvariantBudget, os.str());
}

void hpa() {
    std::vector<ScenarioConfig> runs;
    for (bool enabled : {true, false}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            ScenarioConfig s = main_config("resnet18_main", seed);
            s.overload = 3.3;
            s.duration = 20.0;
            s.hpa = enabled;
            runs.push_back(s);
        }
    }
    const double share = hp_share(runs.front());
    const auto r = run_all(runs);
    bool on_ok = true, off_ok = true;
    double off_min = 1.0;
    std::uint64_t rejected = 0;
    for (int k = 0; k < 3; ++k) {
        on_ok = on_ok && r[k].dmr_hp == 0.0 && r[k].hp.rejected > 0;
        rejected += r[k].hp.rejected;
        off_ok = off_ok && r[3 + k].dmr_hp > 0.0;
        off_min = std::min(off_min, r[3 + k].dmr_hp);
    }
    std::ostringstream os;
    os << "HP demand " << share << " of capacity; HPA on: HP rejections " << rejected << (on_ok ? ", no HP misses" : ", WRONG")
       << "; HPA off: min HP DMR " << off_min << (off_ok ? "" : " WRONG");
    report(8, "HPA behavior", share > 1.0 && on_ok && off_ok, os.str());
}

void batching() {
    const std::map<std::string, int> sizes{{"resnet18", 4}, {"unet", 2}, {"inceptionv3", 8}};
    std::vector<ScenarioConfig> runs;
    for (const char* preset : kTablePresets) {
        ScenarioConfig s = main_config(preset, 1);
        runs.push_back(s);
        s.batch_sizes = sizes;
        runs.push_back(s);
    }
    const auto r = run_all(runs);
    const double resnet = r[1].jps / r[0].jps;
    const double unet = r[3].jps / r[2].jps;
    const double inception = r[5].jps / r[4].jps;
    std::ostringstream os;
    os << "throughput gain InceptionV3 " << inception << ", ResNet18 " << resnet << ", UNet " << unet;
    report(9, "Batching", inception > resnet && resnet > unet, os.str());
}

}  // namespace

int main() {
    hp_safety();
    str_timeliness();
    os_trend();
    ablations();
    hp_responsiveness();
    oracle_suites();
    invariants();
    hpa();
    batching();
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
