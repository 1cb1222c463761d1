#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bocpd {

struct TimeSeries {
    std::vector<double> values;
    std::vector<std::int64_t> epoch_seconds;  // may be empty for index-based data
    double interval_hours = 1.0;
};

struct GapReport {
    int after_row = 0;       // row index (0-based, post down-sampling) before the gap
    std::int64_t seconds = 0;
    int missing_steps = 0;   // whole modal intervals skipped
};

struct IngestResult {
    TimeSeries series;
    std::vector<GapReport> gaps;
    int block_begin = 0;  // longest contiguous block, [begin, end)
    int block_end = 0;
    int rows_read = 0;
};

// CSV with a header and columns timestamp (ISO-8601) and value. Keeps every
// k-th row, infers the sampling interval from the modal timestamp difference
// and reports runs exceeding it. Non-monotone timestamps or unparseable rows
// raise with the line number.
IngestResult ingest_csv(const std::string& path, int down_sample_k);

// The series restricted to the longest contiguous block.
TimeSeries contiguous_block(const IngestResult& in);

void write_csv(const std::string& path, const TimeSeries& ts);

std::int64_t parse_iso8601(const std::string& s);  // UTC epoch seconds
std::string format_iso8601(std::int64_t epoch_seconds);

}  // namespace bocpd
