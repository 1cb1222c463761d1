#include "bocpd/simkit.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace bocpd {

void ScenarioSpec::validate() const {
    if (n < 1) throw std::invalid_argument("scenario: n must be positive");
    int prev = 0;
    for (int cp : changepoints) {
        if (cp <= prev || cp >= n)
            throw std::invalid_argument("scenario: changepoints must be strictly increasing in (0, n)");
        prev = cp;
    }
    if (segments.size() != changepoints.size() + 1)
        throw std::invalid_argument("scenario: need one segment spec per segment");
    if (model_set.empty())
        throw std::invalid_argument("scenario: empty model set");
    for (const auto& seg : segments) {
        if (seg.model_index < 1 || seg.model_index > static_cast<int>(model_set.size()))
            throw std::invalid_argument("scenario: segment model index out of range");
        ModelKind kind = model_set[seg.model_index - 1];
        bool needs_theta = kind == ModelKind::ExpDecay || kind == ModelKind::Periodic;
        if (needs_theta && kind == ModelKind::Periodic && !(seg.theta > 0.0))
            throw std::invalid_argument("scenario: periodic segment needs theta > 0");
    }
    if (noise_sd < 0.0) throw std::invalid_argument("scenario: negative noise sd");
}

SimResult generate(const ScenarioSpec& spec) {
    spec.validate();
    SimResult out;
    out.values.resize(spec.n);
    out.changepoints = spec.changepoints;
    std::mt19937_64 rng = make_stream(spec.seed, 0x51c4a9ULL);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<int> bounds = spec.changepoints;
    bounds.push_back(spec.n);
    int tau = 0;
    for (std::size_t j = 0; j < spec.segments.size(); ++j) {
        const SegmentGenSpec& seg = spec.segments[j];
        ModelKind kind = spec.model_set[seg.model_index - 1];
        bool has_theta = kind == ModelKind::ExpDecay || kind == ModelKind::Periodic;
        out.segment_models.push_back(seg.model_index);
        out.segment_theta.push_back(has_theta ? seg.theta
                                              : std::numeric_limits<double>::quiet_NaN());
        for (int t = tau + 1; t <= bounds[j]; ++t) {
            double t_rel = t - tau;
            double mean;
            switch (kind) {
                case ModelKind::Mean: mean = seg.coef[0]; break;
                case ModelKind::LinearTrend:
                    mean = seg.coef[0] + seg.coef[1] * t_rel;
                    break;
                case ModelKind::ExpDecay:
                    mean = seg.coef[0] +
                           seg.coef[1] * std::exp(-std::exp(seg.theta) * t_rel);
                    break;
                case ModelKind::Periodic:
                    mean = seg.coef[0] + seg.coef[1] * std::sin(t_rel / seg.theta);
                    break;
                default: mean = 0.0;
            }
            out.values[t - 1] = mean + (spec.noise_sd > 0.0 ? spec.noise_sd * noise(rng) : 0.0);
        }
        tau = bounds[j];
    }
    out.track.resize(spec.n);
    {
        std::size_t seg = 0;
        for (int t = 1; t <= spec.n; ++t) {
            while (seg < spec.changepoints.size() && t > spec.changepoints[seg]) ++seg;
            out.track[t - 1] = spec.segments[seg].model_index;
        }
    }
    return out;
}

ScenarioSpec scenario_preset(const std::string& id, std::uint64_t seed) {
    ScenarioSpec s;
    s.id = id;
    s.n = 1000;
    s.seed = seed;
    s.noise_sd = 0.015;
    s.sampling_interval_hours = 2.0;
    // model 1 carries the difficult parameter, model 2 is the companion class
    if (id == "S1") {
        s.model_set = {ModelKind::ExpDecay, ModelKind::Mean};
        s.changepoints = {205, 489, 782};
        s.segments = {
            {2, {0.32, 0.0}, 0.0},
            {1, {0.16, 0.22}, -4.094344562222101},   // decay scale 60 samples
            {1, {0.13, 0.26}, -4.382026634673881},   // decay scale 80 samples
            {1, {0.18, 0.20}, -3.688879454113936},   // decay scale 40 samples
        };
    } else if (id == "S2") {
        s.model_set = {ModelKind::ExpDecay, ModelKind::LinearTrend};
        s.changepoints = {252, 524, 766};
        s.segments = {
            {2, {0.16, 0.0012}, 0.0},
            {1, {0.13, 0.25}, -4.700480365792417},   // decay scale 110 samples
            {2, {0.22, 0.0012}, 0.0},
            {1, {0.14, 0.28}, -4.248495242049359},   // decay scale 70 samples
        };
    } else if (id == "S3") {
        s.model_set = {ModelKind::Periodic, ModelKind::Mean};
        s.changepoints = {259, 534, 726};
        s.segments = {
            {2, {0.30, 0.0}, 0.0},
            {1, {0.26, 0.09}, 15.0},
            {2, {0.24, 0.0}, 0.0},
            {1, {0.28, 0.11}, 18.0},
        };
    } else if (id == "S4") {
        s.model_set = {ModelKind::Periodic, ModelKind::LinearTrend};
        s.changepoints = {221, 528, 765};
        s.segments = {
            {2, {0.20, 0.0005}, 0.0},
            {1, {0.26, 0.09}, 15.0},
            {2, {0.22, 0.0004}, 0.0},
            {1, {0.27, 0.11}, 18.0},
        };
    } else {
        throw std::invalid_argument("unknown scenario preset: " + id);
    }
    return s;
}

ScenarioSpec scenario_from_json(const std::string& json_text) {
    using nlohmann::json;
    json j = json::parse(json_text);
    if (j.contains("preset")) {
        ScenarioSpec s = scenario_preset(j["preset"].get<std::string>(),
                                         j.value("seed", 1ULL));
        if (j.contains("noise_sd")) s.noise_sd = j["noise_sd"].get<double>();
        return s;
    }
    ScenarioSpec s;
    s.id = j.value("id", "custom");
    s.n = j.at("n").get<int>();
    s.changepoints = j.at("changepoints").get<std::vector<int>>();
    for (const auto& mk : j.at("model_set"))
        s.model_set.push_back(model_kind_from_string(mk.get<std::string>()));
    for (const auto& seg : j.at("segments")) {
        SegmentGenSpec g;
        g.model_index = seg.at("model_index").get<int>();
        auto coef = seg.at("coefficients").get<std::vector<double>>();
        for (std::size_t i = 0; i < coef.size() && i < 2; ++i) g.coef[i] = coef[i];
        g.theta = seg.value("theta", 0.0);
        s.segments.push_back(g);
    }
    s.noise_sd = j.value("noise_sd", 0.0);
    s.seed = j.value("seed", 1ULL);
    s.sampling_interval_hours = j.value("sampling_interval_hours", 2.0);
    s.validate();
    return s;
}

std::string scenario_to_json(const ScenarioSpec& s) {
    using nlohmann::json;
    json j;
    j["id"] = s.id;
    j["n"] = s.n;
    j["changepoints"] = s.changepoints;
    json model_set = json::array();
    for (ModelKind mk : s.model_set) model_set.push_back(to_string(mk));
    j["model_set"] = model_set;
    json segs = json::array();
    for (const auto& g : s.segments) {
        json seg;
        seg["model_index"] = g.model_index;
        seg["coefficients"] = {g.coef[0], g.coef[1]};
        seg["theta"] = g.theta;
        segs.push_back(seg);
    }
    j["segments"] = segs;
    j["noise_sd"] = s.noise_sd;
    j["seed"] = s.seed;
    j["sampling_interval_hours"] = s.sampling_interval_hours;
    return j.dump(2);
}

std::string truth_to_json(const SimResult& sim, int n) {
    using nlohmann::json;
    json j;
    j["n"] = n;
    j["changepoints"] = sim.changepoints;
    j["segment_models"] = sim.segment_models;
    json thetas = json::array();
    for (double th : sim.segment_theta)
        thetas.push_back(std::isfinite(th) ? json(th) : json());
    j["segment_theta"] = thetas;
    j["model_track"] = sim.track;
    return j.dump(2);
}

}  // namespace bocpd
