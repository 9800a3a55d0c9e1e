#include "gpusched/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "gpusched/errors.hpp"

namespace gpusched {

using nlohmann::json;

SweepSpec default_sweep() {
    SweepSpec s;
    s.policies = {Policy::STR, Policy::MPS, Policy::MPS_STR};
    for (int n = 2; n <= 10; ++n) s.parallel_counts.push_back(n);
    s.oversubscription = {{false, 1.0}, {false, 1.5}, {false, 2.0}, {true, 0.0}};
    s.seeds = {1};
    return s;
}

SweepSpec parse_sweep(const json& doc) {
    if (!doc.is_object()) throw SchemaError("sweep must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (key != "policies" && key != "parallel" && key != "pairs" && key != "oversubscription" && key != "seeds") {
            throw SchemaError("unknown key '" + key + "' in sweep");
        }
    }
    SweepSpec s = default_sweep();
    try {
        if (doc.contains("policies")) {
            s.policies.clear();
            for (const auto& p : doc.at("policies")) s.policies.push_back(policy_from_string(p.get<std::string>()));
        }
        if (doc.contains("parallel")) {
            s.parallel_counts.clear();
            for (const auto& n : doc.at("parallel")) {
                const int v = n.get<int>();
                if (v < 1) throw SchemaError("parallel counts must be >= 1");
                s.parallel_counts.push_back(v);
            }
        }
        if (doc.contains("pairs")) {
            for (const auto& p : doc.at("pairs")) {
                if (!p.is_array() || p.size() != 2) throw SchemaError("pairs entries are [n_contexts, n_streams]");
                s.explicit_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
            }
        }
        if (doc.contains("oversubscription")) {
            s.oversubscription.clear();
            for (const auto& o : doc.at("oversubscription")) {
                if (o.is_string()) {
                    if (o.get<std::string>() != "nc") throw SchemaError("oversubscription entries are numbers or \"nc\"");
                    s.oversubscription.push_back({true, 0.0});
                } else {
                    s.oversubscription.push_back({false, o.get<double>()});
                }
            }
        }
        if (doc.contains("seeds")) {
            s.seeds.clear();
            for (const auto& v : doc.at("seeds")) s.seeds.push_back(v.get<std::uint64_t>());
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("sweep: ") + e.what());
    }
    if (s.policies.empty() || s.oversubscription.empty() || s.seeds.empty()) throw SchemaError("sweep is empty");
    return s;
}

SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sweep file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_sweep(doc);
}

std::vector<std::pair<int, int>> policy_pairs(Policy policy, int n_parallel) {
    switch (policy) {
        case Policy::STR: return {{1, n_parallel}};
        case Policy::MPS: return {{n_parallel, 1}};
        case Policy::MPS_STR: {
            std::vector<std::pair<int, int>> out;
            for (int c = 2; c <= n_parallel / 2; ++c) {
                if (n_parallel % c == 0 && n_parallel / c >= 2) out.emplace_back(c, n_parallel / c);
            }
            return out;
        }
    }
    return {};
}

namespace {

bool pair_fits(Policy policy, int nc, int ns) {
    switch (policy) {
        case Policy::STR: return nc == 1;
        case Policy::MPS: return ns == 1;
        case Policy::MPS_STR: return nc >= 2 && ns >= 2;
    }
    return false;
}

}  // namespace

SweepPlan expand_sweep(const SweepSpec& sweep, int total_sms) {
    SweepPlan plan;
    std::set<std::pair<Policy, std::string>> seen;
    for (Policy policy : sweep.policies) {
        std::vector<std::pair<int, int>> pairs;
        if (!sweep.explicit_pairs.empty()) {
            for (auto [nc, ns] : sweep.explicit_pairs) {
                if (pair_fits(policy, nc, ns)) pairs.emplace_back(nc, ns);
            }
        } else {
            for (int n : sweep.parallel_counts) {
                for (auto p : policy_pairs(policy, n)) pairs.push_back(p);
            }
        }
        for (auto [nc, ns] : pairs) {
            for (const auto& option : sweep.oversubscription) {
                const double os = option.resolve(nc);
                if (os > nc || os < 1.0) {
                    plan.skipped.push_back({policy, nc, ns, os, "OS outside [1, N_c]"});
                    continue;
                }
                GpuConfig gpu;
                gpu.total_sms = total_sms;
                gpu.n_contexts = nc;
                gpu.n_streams = ns;
                gpu.oversubscription = os;
                gpu.policy = policy;
                if (!seen.insert({policy, gpu.label()}).second) {
                    plan.skipped.push_back({policy, nc, ns, os, "duplicate of an earlier cell"});
                    continue;
                }
                for (auto seed : sweep.seeds) plan.cells.push_back({gpu, seed});
            }
        }
    }
    return plan;
}

ScenarioConfig cell_scenario(const ScenarioConfig& base, const SweepCell& cell) {
    ScenarioConfig s = base;
    const double kappa = base.gpu.interference_kappa;
    s.gpu = cell.gpu;
    s.gpu.interference_kappa = kappa;
    s.oversubscription_is_nc = false;
    s.seed = cell.seed;
    return s;
}

SweepResult run_sweep(const SweepSpec& sweep, const ScenarioConfig& base, unsigned threads) {
    const SweepPlan plan = expand_sweep(sweep, base.gpu.total_sms);
    SweepResult result;
    result.skipped = plan.skipped;
    result.reports.resize(plan.cells.size());

    std::vector<std::exception_ptr> errors(plan.cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.cells.size(); i = next++) {
            try {
                result.reports[i] = run(cell_scenario(base, plan.cells[i])).report;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(plan.cells.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return result;
}

}  // namespace gpusched
