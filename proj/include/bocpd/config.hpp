#pragma once

#include <string>

#include "bocpd/engine.hpp"

namespace bocpd {

struct RunConfig {
    std::string input_path;
    std::string output_dir = ".";
    int down_sample = 1;
    std::uint64_t seed = 1;
    int backward_draws = 500;
    bool sweep_r_eps = false;          // run the r_eps grid, keep the best MAP score
    std::vector<double> r_eps_grid = {1e-6, 5e-6, 1e-7};
    double sampling_interval_hours = 0.0;  // 0: take it from the input
    EngineConfig engine;

    void validate() const;
};

RunConfig run_config_from_json(const std::string& json_text);
std::string run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

// Tuned defaults for the synthetic scenario presets: matching model set,
// theta priors and coefficient priors on the preset's scale.
RunConfig scenario_run_config(const std::string& scenario_id, Extension ext,
                              std::uint64_t seed);

}  // namespace bocpd
