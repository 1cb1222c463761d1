#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bocpd/model.hpp"

namespace bocpd {

// One generated segment: which model produced it and with what parameters.
struct SegmentGenSpec {
    int model_index = 1;             // 1-based position in the scenario model set
    std::array<double, 2> coef{0.0, 0.0};
    double theta = 0.0;              // used by theta models only
};

struct ScenarioSpec {
    std::string id = "custom";       // S1..S4 or custom
    int n = 1000;
    std::vector<int> changepoints;   // strictly increasing, within (0, n)
    std::vector<SegmentGenSpec> segments;  // changepoints.size() + 1 entries
    // model kinds making up the scenario's candidate set, index 1-based
    std::vector<ModelKind> model_set;
    double noise_sd = 0.0;
    std::uint64_t seed = 1;
    double sampling_interval_hours = 2.0;

    void validate() const;
};

struct SimResult {
    std::vector<double> values;
    std::vector<int> changepoints;
    std::vector<int> segment_models;   // 1-based, per segment
    std::vector<double> segment_theta; // NaN for non-theta segments
    std::vector<int> track;            // per-time model index, 1-based
};

// Built-in scenario presets S1..S4 (fixed changepoint layouts and model
// order); coefficients, noise level and theta values are repo constants.
ScenarioSpec scenario_preset(const std::string& id, std::uint64_t seed);

SimResult generate(const ScenarioSpec& spec);

ScenarioSpec scenario_from_json(const std::string& json_text);
std::string scenario_to_json(const ScenarioSpec& spec);

// Ground-truth sidecar for evaluate: changepoints, per-segment models/theta
// and the per-time model track.
std::string truth_to_json(const SimResult& sim, int n);

}  // namespace bocpd
