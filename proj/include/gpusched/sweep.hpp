#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpusched/gpu_sim.hpp"
#include "gpusched/scenario.hpp"
#include "gpusched/sim_engine.hpp"

#include "json.hpp"

namespace gpusched {

/// Oversubscription option of a sweep: a fixed value or "N_c".
struct OsOption {
    bool equals_nc = false;
    double value = 1.0;

    double resolve(int n_contexts) const { return equals_nc ? static_cast<double>(n_contexts) : value; }
    friend bool operator==(const OsOption&, const OsOption&) = default;
};

struct SweepSpec {
    std::vector<Policy> policies;
    std::vector<int> parallel_counts;                   // N_p values, 2..10
    std::vector<std::pair<int, int>> explicit_pairs;    // (N_c, N_s); overrides parallel_counts
    std::vector<OsOption> oversubscription;
    std::vector<std::uint64_t> seeds;
};

/// The full grid of the main experiments: three policies, N_p in [2, 10],
/// OS in {1, 1.5, 2, N_c}, one seed.
SweepSpec default_sweep();

SweepSpec parse_sweep(const nlohmann::json& doc);
SweepSpec load_sweep(const std::string& path);

struct SweepCell {
    GpuConfig gpu;
    std::uint64_t seed = 0;
    std::string label() const { return gpu.label(); }
};

struct SkippedCell {
    Policy policy = Policy::STR;
    int n_contexts = 0;
    int n_streams = 0;
    double oversubscription = 0.0;
    std::string reason;
};

struct SweepPlan {
    std::vector<SweepCell> cells;
    std::vector<SkippedCell> skipped;
};

/// (N_c, N_s) pairs a policy uses for N_p parallel DNNs.
std::vector<std::pair<int, int>> policy_pairs(Policy policy, int n_parallel);

/// Expands the spec into valid cells. Cells violating OS <= N_c, or repeating
/// an earlier label, are listed in `skipped`.
SweepPlan expand_sweep(const SweepSpec& sweep, int total_sms);

struct SweepResult {
    std::vector<MetricsReport> reports;
    std::vector<SkippedCell> skipped;
};

/// Runs every cell of the sweep on top of `base`. Cells are independent and
/// may run on `threads` worker threads; reports come back in plan order.
SweepResult run_sweep(const SweepSpec& sweep, const ScenarioConfig& base, unsigned threads = 1);

/// Scenario for one cell.
ScenarioConfig cell_scenario(const ScenarioConfig& base, const SweepCell& cell);

}  // namespace gpusched
