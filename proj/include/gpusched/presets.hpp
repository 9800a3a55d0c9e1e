#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gpusched/core_model.hpp"

namespace gpusched {

/// Built-in DNN cost profile.
///
/// The single-DNN throughput (`min_jps`) fixes the nominal end-to-end time,
/// 1 / min_jps, which is split over stages by `stage_fractions`. `max_jps`
/// and `batching_gain` are the batched throughput and its ratio to the
/// unbatched one; the gain is attained at `reference_batch`. `width_fraction`
/// is the share of the GPU's SMs one stage can keep busy.
struct DnnProfile {
    std::string name;
    double min_jps = 0.0;
    double max_jps = 0.0;
    double batching_gain = 1.0;
    int reference_batch = 1;
    double width_fraction = 1.0;
    std::vector<double> stage_fractions;
};

const DnnProfile& dnn_profile(std::string_view name);
std::vector<std::string> dnn_profile_names();

BatchingCurve batching_curve(const DnnProfile& profile);
int stage_width(const DnnProfile& profile, int total_sms);
std::vector<StageProfile> stage_profiles(const DnnProfile& profile, int total_sms);

/// Named task sets: one group per DNN, each with HP/LP counts and a
/// per-task release rate.
struct WorkloadGroup {
    std::string dnn;
    int hp = 0;
    int lp = 0;
    double jps = 0.0;
};

struct WorkloadPreset {
    std::string name;
    std::vector<WorkloadGroup> groups;
};

const WorkloadPreset& workload_preset(std::string_view name);
std::vector<std::string> workload_preset_names();

}  // namespace gpusched
