#include "bocpd/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bocpd/quadrature.hpp"

namespace bocpd {

using nlohmann::json;

namespace {

RunOutcome single_run(const RunConfig& config, const TimeSeries& series) {
    RunOutcome out;
    Filter filter(config.engine, series.values);
    try {
        filter.run();
    } catch (const QuadratureDivergence& e) {
        out.status = "na";
        out.na_detail = e.what();
        return out;
    }
    out.history = filter.history();
    out.segmentation =
        viterbi_map(out.history, series.values, config.engine.models);
    if (config.backward_draws > 0) {
        std::mt19937_64 rng = make_stream(config.seed, 0xbac4d00ULL);
        out.backward = backward_simulate(out.history, config.engine.run_length,
                                         config.backward_draws, rng);
    }
    // the numeric reference carries no per-candidate theta state; fill the
    // segment estimates by posterior-mean quadrature at decode time
    if (config.engine.extension == Extension::NumericReference) {
        for (auto& seg : out.segmentation.segments) {
            const ModelSpec& model = config.engine.models[seg.model_index];
            if (!model.has_theta()) continue;
            bool ok = false;
            SegmentView view = segment_view(series.values, seg.start, seg.end);
            double mean = theta_posterior_mean_quadrature(
                view, model, config.engine.quadrature, &ok);
            if (ok) {
                seg.theta.point = mean;
                seg.theta.mean = mean;
                seg.coef = posterior_coef_mean(view, model, mean);
            }
        }
    }
    return out;
}

}  // namespace

RunOutcome execute_run(const RunConfig& config, const TimeSeries& series) {
    config.validate();
    if (series.values.empty()) throw std::invalid_argument("run: empty series");
    bool sweep = config.sweep_r_eps &&
                 config.engine.extension == Extension::OnlineGradient;
    if (!sweep) {
        RunOutcome out = single_run(config, series);
        out.chosen_r_eps = config.engine.og.r_eps;
        return out;
    }
    RunOutcome best;
    bool have = false;
    for (double r : config.r_eps_grid) {
        RunConfig c = config;
        c.engine.og.r_eps = r;
        RunOutcome out = single_run(c, series);
        out.chosen_r_eps = r;
        if (!have || (out.status == "ok" &&
                      out.segmentation.map_log_score >
                          best.segmentation.map_log_score)) {
            best = std::move(out);
            have = true;
        }
    }
    return best;
}

DrydownSummary report_drydown(const SegmentationResult& seg,
                              const std::vector<ModelSpec>& models,
                              double sampling_interval_hours) {
    DrydownSummary s;
    std::vector<double> gammas, days;
    for (const auto& sg : seg.segments) {
        if (models[sg.model_index].kind != ModelKind::ExpDecay) continue;
        if (!std::isfinite(sg.theta.point)) continue;
        DrydownTransforms d =
            drydown_transforms(sg.theta.point, sampling_interval_hours);
        gammas.push_back(d.decay_rate);
        days.push_back(d.efold_days);
    }
    s.count = static_cast<int>(gammas.size());
    if (s.count == 0) return s;
    std::sort(gammas.begin(), gammas.end());
    std::sort(days.begin(), days.end());
    s.gamma_median = quantile_type7_sorted(gammas, 0.5);
    s.gamma_q25 = quantile_type7_sorted(gammas, 0.25);
    s.gamma_q75 = quantile_type7_sorted(gammas, 0.75);
    s.days_median = quantile_type7_sorted(days, 0.5);
    s.days_q25 = quantile_type7_sorted(days, 0.25);
    s.days_q75 = quantile_type7_sorted(days, 0.75);
    return s;
}

std::string drydown_summary_to_json(const DrydownSummary& s) {
    json j;
    j["segments"] = s.count;
    if (s.count == 0) {
        j["notice"] = "no exponential-decay segments";
    } else {
        j["decay_rate"] = {{"median", s.gamma_median},
                           {"q25", s.gamma_q25},
                           {"q75", s.gamma_q75}};
        j["efold_days"] = {{"median", s.days_median},
                           {"q25", s.days_q25},
                           {"q75", s.days_q75}};
    }
    return j.dump(2);
}

namespace {

json theta_summary_to_json(const ThetaSummary& ts) {
    json j;
    auto put = [&](const char* key, double v) {
        j[key] = std::isfinite(v) ? json(v) : json();
    };
    put("point", ts.point);
    put("mean", ts.mean);
    if (ts.has_distribution) {
        put("sd", ts.sd);
        put("q25", ts.q25);
        put("q50", ts.q50);
        put("q75", ts.q75);
    }
    return j;
}

}  // namespace

std::string segments_to_json(const RunOutcome& outcome, const RunConfig& config,
                             double sampling_interval_hours) {
    const auto& models = config.engine.models;
    json j;
    j["status"] = outcome.status;
    j["sampling_interval_hours"] = sampling_interval_hours;
    if (outcome.status != "ok") {
        j["detail"] = outcome.na_detail;
        return j.dump(2);
    }
    j["changepoints"] = outcome.segmentation.changepoints;
    j["map_log_score"] = outcome.segmentation.map_log_score;
    json segs = json::array();
    for (const auto& sg : outcome.segmentation.segments) {
        const ModelSpec& model = models[sg.model_index];
        json s;
        s["start"] = sg.start;
        s["end"] = sg.end;
        s["model_index"] = sg.model_index + 1;  // 1-based, matching truth files
        s["model_kind"] = to_string(model.kind);
        json coef = json::array();
        for (int i = 0; i < sg.coef_count; ++i) coef.push_back(sg.coef[i]);
        s["coefficients"] = coef;
        if (model.has_theta()) {
            s["theta"] = theta_summary_to_json(sg.theta);
            if (model.kind == ModelKind::ExpDecay && std::isfinite(sg.theta.point)) {
                DrydownTransforms d =
                    drydown_transforms(sg.theta.point, sampling_interval_hours);
                s["decay"] = {{"gamma", d.decay_rate},
                              {"efold_samples", d.efold_samples},
                              {"efold_days", d.efold_days}};
            }
        }
        segs.push_back(s);
    }
    j["segments"] = segs;
    DrydownSummary dd =
        report_drydown(outcome.segmentation, models, sampling_interval_hours);
    j["drydown"] = json::parse(drydown_summary_to_json(dd));
    return j.dump(2);
}

void write_bundle(const RunConfig& config, const TimeSeries& series,
                  const RunOutcome& outcome, double wall_ms) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    auto path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };
    double hours = config.sampling_interval_hours > 0.0
                       ? config.sampling_interval_hours
                       : series.interval_hours;

    {
        std::ofstream f(path("segments.json"));
        f << segments_to_json(outcome, config, hours) << '\n';
    }
    char buf[64];
    if (outcome.status == "ok") {
        {
            std::ofstream f(path("filtering_mass.csv"));
            f << "t,s,prob\n";
            const int n = outcome.history.n();
            for (int t = outcome.history.min_segment(); t <= n; ++t) {
                const StepRecord& rec = outcome.history.at(t);
                for (std::size_t i = 0; i < rec.starts.size(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%.9g",
                                  std::exp(rec.log_filter[i]));
                    f << t << ',' << rec.starts[i] << ',' << buf << '\n';
                }
            }
        }
        {
            std::ofstream f(path("inclusion.csv"));
            f << "t,proportion\n";
            for (std::size_t t = 1; t < outcome.backward.inclusion.size(); ++t) {
                std::snprintf(buf, sizeof(buf), "%.9g", outcome.backward.inclusion[t]);
                f << t << ',' << buf << '\n';
            }
        }
        {
            std::ofstream f(path("fit.csv"));
            f << "t,observed,fitted,model_index,segment_start\n";
            for (const auto& sg : outcome.segmentation.segments) {
                const ModelSpec& model = config.engine.models[sg.model_index];
                std::optional<double> theta;
                if (model.has_theta()) theta = sg.theta.point;
                for (int t = sg.start + 1; t <= sg.end; ++t) {
                    double fitted = std::numeric_limits<double>::quiet_NaN();
                    if (!model.has_theta() || std::isfinite(sg.theta.point)) {
                        DesignRow row = design_row(model, t - sg.start, theta);
                        fitted = row.v[0] * sg.coef[0] + row.v[1] * sg.coef[1];
                    }
                    std::snprintf(buf, sizeof(buf), "%.9g", fitted);
                    f << t << ',' << series.values[t - 1] << ',' << buf << ','
                      << sg.model_index + 1 << ',' << sg.start << '\n';
                }
            }
        }
    }
    {
        json manifest;
        manifest["config"] = json::parse(run_config_to_json(config));
        manifest["seed"] = config.seed;
        manifest["version"] = "bocpd 0.1.0";
        manifest["wall_time_ms"] = wall_ms;
        manifest["status"] = outcome.status;
        manifest["complete"] = outcome.status == "ok";
        if (!outcome.na_detail.empty()) manifest["detail"] = outcome.na_detail;
        if (config.engine.extension == Extension::OnlineGradient)
            manifest["chosen_r_eps"] = outcome.chosen_r_eps;
        if (config.engine.extension == Extension::NumericReference) {
            manifest["quadrature_converged"] = outcome.status == "ok";
            manifest["quadrature_max_subdivisions"] =
                config.engine.quadrature.max_subdivisions;
        }
        manifest["n"] = series.values.size();
        manifest["sampling_interval_hours"] = hours;
        std::ofstream f(path("manifest.json"));
        f << manifest.dump(2) << '\n';
    }
}

RunOutcome run_and_write(const RunConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    IngestResult ingest = ingest_csv(config.input_path, config.down_sample);
    TimeSeries series = contiguous_block(ingest);
    RunOutcome outcome = execute_run(config, series);
    double wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    write_bundle(config, series, outcome, wall_ms);
    return outcome;
}

}  // namespace bocpd
