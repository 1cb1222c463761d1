#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bocpd/config.hpp"
#include "bocpd/inference.hpp"
#include "bocpd/runner.hpp"
#include "bocpd/simkit.hpp"
#include "bocpd/time_series.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string default_output_dir() {
    const char* env = std::getenv("BOCPD_OUTPUT_DIR");
    return env && *env ? env : ".";
}

int cmd_simulate(const std::string& spec_path, const std::string& preset,
                 std::uint64_t seed, const std::string& out_dir,
                 bool emit_config) {
    bocpd::ScenarioSpec spec = !spec_path.empty()
                                   ? bocpd::scenario_from_json(slurp(spec_path))
                                   : bocpd::scenario_preset(preset, seed);
    if (spec_path.empty()) spec.seed = seed;
    bocpd::SimResult sim = bocpd::generate(spec);

    fs::create_directories(out_dir);
    bocpd::TimeSeries ts;
    ts.values = sim.values;
    ts.interval_hours = spec.sampling_interval_hours;
    std::int64_t t0 = bocpd::parse_iso8601("2020-01-01T00:00:00");
    std::int64_t step = static_cast<std::int64_t>(spec.sampling_interval_hours * 3600);
    ts.epoch_seconds.resize(ts.values.size());
    for (std::size_t i = 0; i < ts.values.size(); ++i)
        ts.epoch_seconds[i] = t0 + static_cast<std::int64_t>(i) * step;
    bocpd::write_csv((fs::path(out_dir) / "series.csv").string(), ts);
    {
        std::ofstream f(fs::path(out_dir) / "truth.json");
        f << bocpd::truth_to_json(sim, spec.n) << '\n';
    }
    {
        std::ofstream f(fs::path(out_dir) / "scenario.json");
        f << bocpd::scenario_to_json(spec) << '\n';
    }
    if (emit_config && (spec.id == "S1" || spec.id == "S2" || spec.id == "S3" ||
                        spec.id == "S4")) {
        for (auto ext : {bocpd::Extension::ParticleFilter,
                         bocpd::Extension::OnlineGradient,
                         bocpd::Extension::NumericReference}) {
            bocpd::RunConfig rc = bocpd::scenario_run_config(spec.id, ext, seed);
            rc.input_path = (fs::path(out_dir) / "series.csv").string();
            rc.output_dir = (fs::path(out_dir) / ("out_" + to_string(ext))).string();
            std::ofstream f(fs::path(out_dir) /
                            ("config_" + to_string(ext) + ".json"));
            f << bocpd::run_config_to_json(rc) << '\n';
        }
    }
    std::cout << "wrote series.csv, truth.json, scenario.json to " << out_dir << "\n";
    return 0;
}

int cmd_segment(const std::string& config_path, const std::string& input_override,
                const std::string& out_override) {
    bocpd::RunConfig config = bocpd::load_run_config(config_path);
    if (!input_override.empty()) config.input_path = input_override;
    if (!out_override.empty())
        config.output_dir = out_override;
    else if (config.output_dir.empty() || config.output_dir == ".")
        config.output_dir = default_output_dir();
    bocpd::RunOutcome outcome = bocpd::run_and_write(config);
    std::cout << "status: " << outcome.status << "\n";
    if (outcome.status == "ok") {
        std::cout << "changepoints:";
        for (int cp : outcome.segmentation.changepoints) std::cout << ' ' << cp;
        std::cout << "\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& detected_path, const std::string& truth_path,
                 int tolerance, const std::string& out_path) {
    json det = json::parse(slurp(detected_path));
    json tru = json::parse(slurp(truth_path));
    if (det.value("status", "ok") != "ok") {
        json out;
        out["status"] = "na";
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    int n = tru.at("n").get<int>();
    std::vector<int> truth_cps = tru.at("changepoints").get<std::vector<int>>();
    std::vector<int> truth_track = tru.at("model_track").get<std::vector<int>>();
    std::vector<int> det_cps = det.at("changepoints").get<std::vector<int>>();
    std::vector<int> det_models;
    for (const auto& seg : det.at("segments"))
        det_models.push_back(seg.at("model_index").get<int>());
    std::vector<int> det_track = bocpd::model_track(det_cps, det_models, n);
    bocpd::DetectionMetrics m =
        bocpd::evaluate_detection(det_cps, truth_cps, tolerance, det_track, truth_track);
    json out;
    out["true_positive_rate"] = m.true_positive_rate;
    out["precision"] = m.precision;
    out["model_selection_accuracy"] = m.model_accuracy;
    out["matched"] = m.matched;
    out["tolerance"] = tolerance;
    std::string text = out.dump(2);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << text << '\n';
    }
    std::cout << text << "\n";
    return 0;
}

int cmd_report(const std::string& segments_path, double interval_hours) {
    json seg = json::parse(slurp(segments_path));
    if (seg.value("status", "ok") != "ok")
        throw std::runtime_error("report: segments file is not from a successful run");
    double hours = interval_hours > 0.0
                       ? interval_hours
                       : seg.value("sampling_interval_hours", 1.0);
    std::vector<double> gammas, days;
    for (const auto& s : seg.at("segments")) {
        if (s.value("model_kind", "") != "exp_decay") continue;
        if (!s.contains("theta") || s["theta"]["point"].is_null()) continue;
        bocpd::DrydownTransforms d =
            bocpd::drydown_transforms(s["theta"]["point"].get<double>(), hours);
        gammas.push_back(d.decay_rate);
        days.push_back(d.efold_days);
    }
    json out;
    out["segments"] = gammas.size();
    if (gammas.empty()) {
        out["notice"] = "no exponential-decay segments";
    } else {
        std::sort(gammas.begin(), gammas.end());
        std::sort(days.begin(), days.end());
        out["decay_rate"] = {{"median", bocpd::quantile_type7_sorted(gammas, 0.5)},
                             {"q25", bocpd::quantile_type7_sorted(gammas, 0.25)},
                             {"q75", bocpd::quantile_type7_sorted(gammas, 0.75)}};
        out["efold_days"] = {{"median", bocpd::quantile_type7_sorted(days, 0.5)},
                             {"q25", bocpd::quantile_type7_sorted(days, 0.25)},
                             {"q75", bocpd::quantile_type7_sorted(days, 0.75)}};
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online Bayesian changepoint segmentation with sequential theta estimation"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario");
    std::string sim_spec, sim_preset = "S1", sim_out = default_output_dir();
    std::uint64_t sim_seed = 1;
    sim->add_option("--spec", sim_spec, "scenario spec JSON file");
    sim->add_option("--scenario", sim_preset, "preset id: S1, S2, S3 or S4");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output directory");
    bool sim_emit_config = false;
    sim->add_flag("--emit-config", sim_emit_config, "write matching run configs for each extension");

    auto* seg = app.add_subcommand("segment", "run the changepoint filter");
    std::string seg_config, seg_input, seg_out;
    seg->add_option("--config", seg_config, "run config JSON")->required();
    seg->add_option("--input", seg_input, "override the input CSV");
    seg->add_option("--out", seg_out, "override the output directory");

    auto* eval = app.add_subcommand("evaluate", "score detected changepoints against truth");
    std::string eval_detected, eval_truth, eval_out;
    int eval_tol = 10;
    eval->add_option("--detected", eval_detected, "segments.json from a run")->required();
    eval->add_option("--truth", eval_truth, "truth.json from simulate")->required();
    eval->add_option("--tolerance", eval_tol, "matching window (time points)");
    eval->add_option("--out", eval_out, "also write metrics JSON here");

    auto* rep = app.add_subcommand("report", "drydown summary from segments.json");
    std::string rep_segments;
    double rep_hours = 0.0;
    rep->add_option("--segments", rep_segments, "segments.json path")->required();
    rep->add_option("--interval-hours", rep_hours, "override sampling interval");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_spec, sim_preset, sim_seed, sim_out, sim_emit_config);
        if (seg->parsed()) return cmd_segment(seg_config, seg_input, seg_out);
        if (eval->parsed()) return cmd_evaluate(eval_detected, eval_truth, eval_tol, eval_out);
        if (rep->parsed()) return cmd_report(rep_segments, rep_hours);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
