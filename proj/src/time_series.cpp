#include "bocpd/time_series.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bocpd {

namespace {

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int* y, int* m, int* d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    *d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    *m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    *y = static_cast<int>(yy + (*m <= 2));
}

}  // namespace

std::int64_t parse_iso8601(const std::string& s) {
    int y, mo, d, h = 0, mi = 0;
    double sec = 0.0;
    char sep;
    int consumed = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep,
                               &h, &mi, &sec);
    if (consumed < 3)
        throw std::invalid_argument("unparseable timestamp: " + s);
    if (consumed >= 4 && sep != 'T' && sep != ' ')
        throw std::invalid_argument("unparseable timestamp: " + s);
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 +
           static_cast<std::int64_t>(sec);
}

std::string format_iso8601(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, &y, &m, &d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

IngestResult ingest_csv(const std::string& path, int down_sample_k) {
    if (down_sample_k < 1)
        throw std::invalid_argument("ingest: down-sample factor must be >= 1");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest: cannot open " + path);

    IngestResult out;
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line))
        throw std::runtime_error("ingest: empty file " + path);
    ++line_no;

    std::vector<std::int64_t> ts;
    std::vector<double> vals;
    int kept_counter = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("ingest: line " + std::to_string(line_no) +
                                     ": expected timestamp,value");
        std::int64_t t;
        double v;
        try {
            t = parse_iso8601(line.substr(0, comma));
            std::size_t pos = 0;
            v = std::stod(line.substr(comma + 1), &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("ingest: line " + std::to_string(line_no) +
                                     ": unparseable row");
        }
        if (!ts.empty() && t <= ts.back())
            throw std::runtime_error("ingest: line " + std::to_string(line_no) +
                                     ": non-monotone timestamp");
        ++out.rows_read;
        if (kept_counter++ % down_sample_k == 0) {
            ts.push_back(t);
            vals.push_back(v);
        }
    }
    if (vals.empty()) throw std::runtime_error("ingest: no data rows in " + path);

    // modal timestamp difference defines the sampling interval
    std::int64_t modal = 0;
    if (ts.size() > 1) {
        std::map<std::int64_t, int> freq;
        for (std::size_t i = 1; i < ts.size(); ++i) ++freq[ts[i] - ts[i - 1]];
        int best = 0;
        for (const auto& [diff, count] : freq)
            if (count > best) {
                best = count;
                modal = diff;
            }
    }
    out.series.values = std::move(vals);
    out.series.epoch_seconds = std::move(ts);
    out.series.interval_hours = modal > 0 ? modal / 3600.0 : 1.0;

    // gaps split the series into contiguous blocks; keep the longest
    int begin = 0;
    out.block_begin = 0;
    out.block_end = 1;
    const auto& e = out.series.epoch_seconds;
    for (std::size_t i = 1; i < e.size(); ++i) {
        std::int64_t diff = e[i] - e[i - 1];
        if (modal > 0 && diff > modal) {
            GapReport gap;
            gap.after_row = static_cast<int>(i - 1);
            gap.seconds = diff;
            gap.missing_steps = static_cast<int>(diff / modal) - 1;
            out.gaps.push_back(gap);
            if (static_cast<int>(i) - begin > out.block_end - out.block_begin) {
                out.block_begin = begin;
                out.block_end = static_cast<int>(i);
            }
            begin = static_cast<int>(i);
        }
    }
    if (static_cast<int>(e.size()) - begin > out.block_end - out.block_begin) {
        out.block_begin = begin;
        out.block_end = static_cast<int>(e.size());
    }
    return out;
}

TimeSeries contiguous_block(const IngestResult& in) {
    TimeSeries ts;
    ts.interval_hours = in.series.interval_hours;
    ts.values.assign(in.series.values.begin() + in.block_begin,
                     in.series.values.begin() + in.block_end);
    ts.epoch_seconds.assign(in.series.epoch_seconds.begin() + in.block_begin,
                            in.series.epoch_seconds.begin() + in.block_end);
    return ts;
}

void write_csv(const std::string& path, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "timestamp,value\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        std::int64_t t = i < ts.epoch_seconds.size()
                             ? ts.epoch_seconds[i]
                             : static_cast<std::int64_t>(i * ts.interval_hours * 3600);
        std::snprintf(buf, sizeof(buf), "%.12g", ts.values[i]);
        out << format_iso8601(t) << ',' << buf << '\n';
    }
}

}  // namespace bocpd
