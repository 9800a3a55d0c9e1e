#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpusched/core_model.hpp"

namespace gpusched {

enum class Policy : std::uint8_t { STR, MPS, MPS_STR };

std::string_view to_string(Policy p);
Policy policy_from_string(std::string_view s);

/// Partitioning of one GPU into contexts and streams.
class GpuConfig {
public:
    int total_sms = 68;
    int n_contexts = 1;
    int n_streams = 1;
    double oversubscription = 1.0;
    Policy policy = Policy::STR;
    double interference_kappa = 0.0;

    int n_parallel() const { return n_contexts * n_streams; }

    /// Throws InvalidGpuConfig or InvalidOversubscription.
    void validate() const;

    /// "N_c × N_s_OS", e.g. "6 × 1_1.5".
    std::string label() const;

    friend bool operator==(const GpuConfig&, const GpuConfig&) = default;
};

struct ConfigTriple {
    int n_contexts = 0;
    int n_streams = 0;
    double oversubscription = 0.0;

    friend bool operator==(const ConfigTriple&, const ConfigTriple&) = default;
};

/// Inverse of GpuConfig::label(). Throws ParseError.
ConfigTriple parse_config_label(std::string_view label);

/// Shortest decimal text that round-trips the value ("1.5", "6", "0.001").
std::string format_number(double v);

/// SMs granted to each context: OS * total / N_c rounded up to an even count.
/// Throws InvalidOversubscription when OS is outside [1, N_c].
int sm_per_context(const GpuConfig& config);

/// SM capacity the rate model gives one context. Equals sm_per_context()
/// except at OS == 1, where contexts own disjoint, equal slices of the GPU.
double context_capacity(const GpuConfig& config);

/// One running stage as seen by the rate model.
struct ActiveStage {
    JobId job_id = 0;
    int stage_index = 0;
    int context = 0;
    int width = 1;
    Seconds remaining_work = 0.0;
};

struct StageRate {
    double allocated_sms = 0.0;
    double rate = 0.0;
};

/// Entries are parallel to the active list the allocation was computed for.
struct RateAllocation {
    std::vector<StageRate> stages;
    std::vector<double> water_levels;  // per context; < 0 when uncontended
    double level2_scale = 1.0;
    double total_allocated = 0.0;
};

class RateModel {
public:
    virtual ~RateModel() = default;
    virtual RateAllocation allocate(std::span<const ActiveStage> active, const GpuConfig& config) const = 0;
};

/// Intra-context water-filling capped at stage widths, then a uniform
/// scale-down if the contexts together ask for more than the GPU has.
class WaterFillingRateModel final : public RateModel {
public:
    RateAllocation allocate(std::span<const ActiveStage> active, const GpuConfig& config) const override;
};

const RateModel& default_rate_model();

RateAllocation allocate_rates(std::span<const ActiveStage> active, const GpuConfig& config);

/// Level λ with sum(min(width, λ)) == capacity, or -1 if every width fits.
double water_level(std::span<const double> widths, double capacity);

struct Completion {
    std::size_t index = 0;
    Seconds time = 0.0;
};

/// Earliest finishing active stage; ties go to the lower (job_id, stage).
/// Throws NoActiveStages.
Completion next_completion(std::span<const ActiveStage> active, const RateAllocation& allocation, Seconds now);

/// remaining -= rate * dt, clamped at zero. Throws OvershootBeyondCompletion
/// if a stage would go negative by more than 1e-9 s.
void advance_progress(std::span<ActiveStage> active, const RateAllocation& allocation, Seconds dt);

/// Full-width service time of one stage for a batch of `batch_size` inputs.
/// Throws InvalidBatch for batch_size < 1.
Seconds effective_stage_time(const StageProfile& profile, int batch_size, const BatchingCurve& curve);

}  // namespace gpusched
