#pragma once

#include <optional>
#include <string>

#include "bocpd/config.hpp"
#include "bocpd/inference.hpp"
#include "bocpd/time_series.hpp"

namespace bocpd {

struct RunOutcome {
    std::string status = "ok";  // "ok" or "na" (quadrature non-convergence)
    SegmentationResult segmentation;
    BackwardSimResult backward;
    FilterHistory history;
    double chosen_r_eps = 0.0;  // sweep winner when sweeping
    std::string na_detail;
};

// Runs the filter (with the r_eps sweep when configured), decodes the MAP
// segmentation and draws backward configurations. Does not touch the disk.
RunOutcome execute_run(const RunConfig& config, const TimeSeries& series);

// Full `segment` pipeline: ingest, run, and write the report bundle into
// config.output_dir (segments.json, filtering_mass.csv, inclusion.csv,
// fit.csv, manifest.json). Returns the outcome.
RunOutcome run_and_write(const RunConfig& config);

// Bundle writer shared by the CLI and tests.
void write_bundle(const RunConfig& config, const TimeSeries& series,
                  const RunOutcome& outcome, double wall_ms);

struct DrydownSummary {
    int count = 0;
    double gamma_median = 0, gamma_q25 = 0, gamma_q75 = 0;
    double days_median = 0, days_q25 = 0, days_q75 = 0;
};

// Median and quartiles of the decay rate and e-folding time across the
// exponential-decay segments. Empty summary (count 0) when there are none.
DrydownSummary report_drydown(const SegmentationResult& seg,
                              const std::vector<ModelSpec>& models,
                              double sampling_interval_hours);

std::string drydown_summary_to_json(const DrydownSummary& s);

// segments.json payload (also embedded in the bundle).
std::string segments_to_json(const RunOutcome& outcome, const RunConfig& config,
                             double sampling_interval_hours);

}  // namespace bocpd
