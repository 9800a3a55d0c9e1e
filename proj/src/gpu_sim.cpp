#include "gpusched/gpu_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "gpusched/errors.hpp"

namespace gpusched {

std::string_view to_string(Policy p) {
    switch (p) {
        case Policy::STR: return "str";
        case Policy::MPS: return "mps";
        case Policy::MPS_STR: return "mps-str";
    }
    return "?";
}

Policy policy_from_string(std::string_view s) {
    if (s == "str" || s == "STR") return Policy::STR;
    if (s == "mps" || s == "MPS") return Policy::MPS;
    if (s == "mps-str" || s == "mps_str" || s == "MPS+STR" || s == "mps+str") return Policy::MPS_STR;
    throw SchemaError("unknown policy '" + std::string(s) + "'");
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void GpuConfig::validate() const {
    if (total_sms < 1) throw InvalidGpuConfig("total_sms must be >= 1");
    if (n_contexts < 1) throw InvalidGpuConfig("n_contexts must be >= 1");
    if (n_streams < 1) throw InvalidGpuConfig("n_streams must be >= 1");
    if (!(interference_kappa >= 0.0)) throw InvalidGpuConfig("kappa must be >= 0");
    if (policy == Policy::STR && n_contexts != 1) throw InvalidGpuConfig("STR uses a single context");
    if (policy == Policy::MPS && n_streams != 1) throw InvalidGpuConfig("MPS uses one stream per context");
    if (!(oversubscription >= 1.0) || oversubscription > n_contexts) {
        throw InvalidOversubscription("OS=" + format_number(oversubscription) + " outside [1, " +
                                      std::to_string(n_contexts) + "]");
    }
}

std::string GpuConfig::label() const {
    return std::to_string(n_contexts) + " \xC3\x97 " + std::to_string(n_streams) + "_" + format_number(oversubscription);
}

ConfigTriple parse_config_label(std::string_view label) {
    static constexpr std::string_view kTimes = " \xC3\x97 ";
    const auto x = label.find(kTimes);
    const auto u = label.rfind('_');
    if (x == std::string_view::npos || u == std::string_view::npos || u < x) {
        throw ParseError("bad config label '" + std::string(label) + "'");
    }
    auto parse_int = [&](std::string_view part) {
        int v = 0;
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || p != part.data() + part.size()) throw ParseError("bad config label '" + std::string(label) + "'");
        return v;
    };
    ConfigTriple t;
    t.n_contexts = parse_int(label.substr(0, x));
    t.n_streams = parse_int(label.substr(x + kTimes.size(), u - x - kTimes.size()));
    const auto os = label.substr(u + 1);
    auto [p, ec] = std::from_chars(os.data(), os.data() + os.size(), t.oversubscription);
    if (ec != std::errc() || p != os.data() + os.size()) throw ParseError("bad config label '" + std::string(label) + "'");
    return t;
}

int sm_per_context(const GpuConfig& config) {
    if (config.n_contexts < 1) throw InvalidGpuConfig("n_contexts must be >= 1");
    if (!(config.oversubscription >= 1.0) || config.oversubscription > config.n_contexts) {
        throw InvalidOversubscription("OS=" + format_number(config.oversubscription) + " outside [1, " +
                                      std::to_string(config.n_contexts) + "]");
    }
    const double share = config.oversubscription * config.total_sms / config.n_contexts;
    // 1e-9 absorbs representation noise such as 68 * 1.5 / 3 = 34.000000000000004
    const int halves = static_cast<int>(std::ceil(share / 2.0 - 1e-9));
    return std::max(2, 2 * halves);
}

double context_capacity(const GpuConfig& config) {
    if (config.oversubscription == 1.0) return static_cast<double>(config.total_sms) / config.n_contexts;
    return sm_per_context(config);
}

double water_level(std::span<const double> widths, double capacity) {
    double sum = 0.0;
    for (double w : widths) sum += w;
    if (sum <= capacity) return -1.0;
    std::vector<double> sorted(widths.begin(), widths.end());
    std::sort(sorted.begin(), sorted.end());
    double remaining = capacity;
    const std::size_t n = sorted.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double level = remaining / static_cast<double>(n - i);
        if (sorted[i] > level) return level;
        remaining -= sorted[i];
    }
    return remaining;  // unreachable while sum > capacity
}

RateAllocation WaterFillingRateModel::allocate(std::span<const ActiveStage> active, const GpuConfig& config) const {
    RateAllocation out;
    out.stages.resize(active.size());
    out.water_levels.assign(static_cast<std::size_t>(config.n_contexts), -1.0);
    const double capacity = context_capacity(config);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(config.n_contexts));
    for (std::size_t i = 0; i < active.size(); ++i) members.at(static_cast<std::size_t>(active[i].context)).push_back(i);

    double total = 0.0;
    std::vector<double> widths;
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& idx = members[k];
        if (idx.empty()) continue;
        widths.clear();
        for (auto i : idx) widths.push_back(static_cast<double>(active[i].width));
        const double level = water_level(widths, capacity);
        out.water_levels[k] = level;
        for (auto i : idx) {
            const double w = static_cast<double>(active[i].width);
            out.stages[i].allocated_sms = level < 0.0 ? w : std::min(w, level);
            total += out.stages[i].allocated_sms;
        }
    }

    if (total > config.total_sms) {
        out.level2_scale = config.total_sms / total;
        total = 0.0;
        for (auto& s : out.stages) {
            s.allocated_sms *= out.level2_scale;
            total += s.allocated_sms;
        }
    }
    out.total_allocated = total;

    for (std::size_t k = 0; k < members.size(); ++k) {
        const double slowdown = 1.0 + config.interference_kappa * (static_cast<double>(members[k].size()) - 1.0);
        for (auto i : members[k]) {
            out.stages[i].rate = out.stages[i].allocated_sms / active[i].width / slowdown;
        }
    }
    return out;
}

const RateModel& default_rate_model() {
    static const WaterFillingRateModel model;
    return model;
}

RateAllocation allocate_rates(std::span<const ActiveStage> active, const GpuConfig& config) {
    return default_rate_model().allocate(active, config);
}

Completion next_completion(std::span<const ActiveStage> active, const RateAllocation& allocation, Seconds now) {
    if (active.empty()) throw NoActiveStages("nothing is running");
    Completion best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < active.size(); ++i) {
        const Seconds t = now + active[i].remaining_work / allocation.stages[i].rate;
        const auto& a = active[i];
        const auto& b = active[best.index];
        if (t < best.time ||
            (t == best.time && std::tie(a.job_id, a.stage_index) < std::tie(b.job_id, b.stage_index))) {
            best = {i, t};
        }
    }
    return best;
}

void advance_progress(std::span<ActiveStage> active, const RateAllocation& allocation, Seconds dt) {
    if (dt < 0.0) throw OvershootBeyondCompletion("negative time step");
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i].remaining_work - allocation.stages[i].rate * dt < -1e-9) {
            throw OvershootBeyondCompletion("job " + std::to_string(active[i].job_id) + " stage " +
                                            std::to_string(active[i].stage_index) + " would finish inside the step");
        }
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
        active[i].remaining_work = std::max(0.0, active[i].remaining_work - allocation.stages[i].rate * dt);
    }
}

double BatchingCurve::gain(int batch) const {
    if (batch <= 1 || reference_batch <= 1) return 1.0;
    const double ref_gain = std::max(reference_gain, 1.0);
    if (batch >= reference_batch) return ref_gain;
    return std::exp(std::log(ref_gain) * std::log(static_cast<double>(batch)) /
                    std::log(static_cast<double>(reference_batch)));
}

Seconds effective_stage_time(const StageProfile& profile, int batch_size, const BatchingCurve& curve) {
    if (batch_size < 1) throw InvalidBatch("batch size " + std::to_string(batch_size));
    return profile.nominal_time * batch_size / curve.gain(batch_size);
}

}  // namespace gpusched
