#include "gpusched/presets.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpusched/errors.hpp"

namespace gpusched {

namespace {

// Single-DNN and batched throughputs are measured values for a 68-SM GPU.
// Batching gains are reached at the batch sizes used for each network in the
// batched experiments (4, 2, 8); ResNet50 shares ResNet18's reference batch.
//
// Stage splits follow each network's logical blocks:
//   resnet18/50  stem + layer1, layer2, layer3, layer4 (FLOP shares)
//   unet         high-res encoder, low-res encoder + bottleneck,
//                low-res decoder, high-res decoder
//   inceptionv3  stem, A blocks, B blocks (with reduction), C blocks
//
// Widths encode how much of the GPU one stage keeps busy: UNet is wide,
// ResNet medium and InceptionV3 narrow.
const std::vector<DnnProfile>& profiles() {
    static const std::vector<DnnProfile> kProfiles = {
        {"resnet18", 627.0, 1025.0, 1.63, 4, 0.40, {0.32, 0.23, 0.23, 0.22}},
        {"resnet50", 250.0, 433.0, 1.73, 4, 0.45, {0.20, 0.25, 0.36, 0.19}},
        {"unet", 241.0, 260.0, 1.08, 2, 0.75, {0.30, 0.20, 0.20, 0.30}},
        {"inceptionv3", 142.0, 446.0, 3.13, 8, 0.20, {0.20, 0.35, 0.30, 0.15}},
    };
    return kProfiles;
}

// Task counts and per-task rates of the main experiments. The mixed set runs
// all three groups together at a third of their rates so that its demand
// sits between the single-DNN sets.
const std::vector<WorkloadPreset>& workloads() {
    static const std::vector<WorkloadPreset> kWorkloads = {
        {"resnet18_main", {{"resnet18", 17, 34, 30.0}}},
        {"unet_main", {{"unet", 5, 10, 24.0}}},
        {"inceptionv3_main", {{"inceptionv3", 9, 18, 24.0}}},
        {"mixed_main", {{"resnet18", 17, 34, 10.0}, {"unet", 5, 10, 8.0}, {"inceptionv3", 9, 18, 8.0}}},
    };
    return kWorkloads;
}

}  // namespace

const DnnProfile& dnn_profile(std::string_view name) {
    for (const auto& p : profiles()) {
        if (p.name == name) return p;
    }
    throw UnknownPreset("no DNN profile named '" + std::string(name) + "'");
}

std::vector<std::string> dnn_profile_names() {
    std::vector<std::string> out;
    for (const auto& p : profiles()) out.push_back(p.name);
    return out;
}

BatchingCurve batching_curve(const DnnProfile& profile) {
    return BatchingCurve{profile.reference_batch, profile.batching_gain};
}

int stage_width(const DnnProfile& profile, int total_sms) {
    return std::clamp(static_cast<int>(std::lround(profile.width_fraction * total_sms)), 1, total_sms);
}

std::vector<StageProfile> stage_profiles(const DnnProfile& profile, int total_sms) {
    const Seconds total = 1.0 / profile.min_jps;
    const int width = stage_width(profile, total_sms);
    std::vector<StageProfile> out;
    for (double f : profile.stage_fractions) out.push_back({f * total, width});
    return out;
}

const WorkloadPreset& workload_preset(std::string_view name) {
    for (const auto& w : workloads()) {
        if (w.name == name) return w;
    }
    throw UnknownPreset("no workload preset named '" + std::string(name) + "'");
}

std::vector<std::string> workload_preset_names() {
    std::vector<std::string> out;
    for (const auto& w : workloads()) out.push_back(w.name);
    return out;
}

}  // namespace gpusched
