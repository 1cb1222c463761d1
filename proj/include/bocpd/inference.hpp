#pragma once

#include <random>
#include <vector>

#include "bocpd/engine.hpp"

namespace bocpd {

struct Segment {
    int start = 0;  // last index of the previous segment (tau_{j-1})
    int end = 0;    // last index of this segment (tau_j or n)
    int model_index = 0;  // 0-based into the model set
    ThetaSummary theta;
    std::array<double, 2> coef{0.0, 0.0};  // posterior means
    int coef_count = 1;
};

struct SegmentationResult {
    std::vector<int> changepoints;  // tau_1 < ... < tau_k, exclusive of 0 and n
    std::vector<Segment> segments;
    double map_log_score = kNegInf;
};

// MAP decode over the recorded filtering history. Deterministic; ties break
// toward the smaller changepoint then the smaller model index. Coefficient
// posterior means are filled from the series at each segment's theta point.
SegmentationResult viterbi_map(const FilterHistory& history,
                               const std::vector<double>& series,
                               const std::vector<ModelSpec>& models);

struct BackwardSimResult {
    std::vector<std::vector<int>> configurations;  // changepoints per draw
    std::vector<double> inclusion;                 // per time 1..n proportion
};

// Independent changepoint configurations sampled backwards from the stored
// filtering distributions and the run-length transition factors.
BackwardSimResult backward_simulate(const FilterHistory& history,
                                    const RunLength& rl, int n_draws,
                                    std::mt19937_64& rng);

struct DetectionMetrics {
    double true_positive_rate = 0.0;
    double precision = 0.0;
    double model_accuracy = 0.0;
    int matched = 0;
};

// Greedy nearest-first one-to-one matching within the tolerance window.
DetectionMetrics evaluate_detection(std::vector<int> detected,
                                    std::vector<int> truth, int tolerance,
                                    const std::vector<int>& model_track_detected,
                                    const std::vector<int>& model_track_truth);

// Per-time model indices induced by a segmentation (1-based model ids).
std::vector<int> model_track(const std::vector<int>& changepoints,
                             const std::vector<int>& segment_models, int n);

// Posterior mean coefficients of one segment at a fixed theta.
std::array<double, 2> posterior_coef_mean(SegmentView seg, const ModelSpec& model,
                                          std::optional<double> theta);

}  // namespace bocpd
