#include <catch2/catch_amalgamated.hpp>

#include "bocpd/simkit.hpp"

using namespace bocpd;
using Catch::Approx;

TEST_CASE("presets carry the fixed changepoint layouts") {
    auto s1 = scenario_preset("S1", 1);
    CHECK(s1.changepoints == std::vector<int>{205, 489, 782});
    std::vector<int> s1_models;
    for (const auto& seg : s1.segments) s1_models.push_back(seg.model_index);
    CHECK(s1_models == std::vector<int>{2, 1, 1, 1});

    auto s2 = scenario_preset("S2", 1);
    CHECK(s2.changepoints == std::vector<int>{252, 524, 766});
    auto s3 = scenario_preset("S3", 1);
    CHECK(s3.changepoints == std::vector<int>{259, 534, 726});
    auto s4 = scenario_preset("S4", 1);
    CHECK(s4.changepoints == std::vector<int>{221, 528, 765});
    for (const auto* s : {&s2, &s3, &s4}) {
        std::vector<int> models;
        for (const auto& seg : s->segments) models.push_back(seg.model_index);
        CHECK(models == std::vector<int>{2, 1, 2, 1});
    }
    // the difficult-parameter segments of S4 use cycles 15 and 18
    CHECK(s4.segments[1].theta == 15.0);
    CHECK(s4.segments[3].theta == 18.0);
    CHECK(s4.n == 1000);
    CHECK_THROWS_AS(scenario_preset("S9", 1), std::invalid_argument);
}

TEST_CASE("noiseless generation reproduces the segment functions exactly") {
    ScenarioSpec spec = scenario_preset("S1", 7);
    spec.noise_sd = 0.0;
    SimResult sim = generate(spec);
    REQUIRE(static_cast<int>(sim.values.size()) == spec.n);
    // segment 2 runs (205, 489] with the preset decay parameters
    const auto& seg = spec.segments[1];
    for (int t = 206; t <= 489; ++t) {
        double t_rel = t - 205;
        double want =
            seg.coef[0] + seg.coef[1] * std::exp(-std::exp(seg.theta) * t_rel);
        REQUIRE(sim.values[t - 1] == Approx(want).margin(1e-14));
    }
    // first segment is the plain mean
    for (int t = 1; t <= 205; ++t)
        REQUIRE(sim.values[t - 1] == spec.segments[0].coef[0]);
}

TEST_CASE("an oracle refit of noiseless segments recovers the coefficients") {
    for (const char* id : {"S1", "S2", "S3", "S4"}) {
        ScenarioSpec spec = scenario_preset(id, 3);
        spec.noise_sd = 0.0;
        SimResult sim = generate(spec);
        std::vector<int> bounds = spec.changepoints;
        bounds.push_back(spec.n);
        int tau = 0;
        for (std::size_t j = 0; j < spec.segments.size(); ++j) {
            const auto& seg = spec.segments[j];
            ModelKind kind = spec.model_set[seg.model_index - 1];
            // least squares on the true basis
            double sxx = 0, sx = 0, sy = 0, sxy = 0, n = 0;
            for (int t = tau + 1; t <= bounds[j]; ++t) {
                double t_rel = t - tau;
                double x;
                switch (kind) {
                    case ModelKind::Mean: x = 0.0; break;
                    case ModelKind::LinearTrend: x = t_rel; break;
                    case ModelKind::ExpDecay:
                        x = std::exp(-std::exp(seg.theta) * t_rel);
                        break;
                    default: x = std::sin(t_rel / seg.theta);
                }
                n += 1;
                sx += x;
                sxx += x * x;
                sy += sim.values[t - 1];
                sxy += x * sim.values[t - 1];
            }
            if (kind == ModelKind::Mean) {
                CHECK(sy / n == Approx(seg.coef[0]).margin(1e-12));
            } else {
                double det = n * sxx - sx * sx;
                double b0 = (sxx * sy - sx * sxy) / det;
                double b1 = (n * sxy - sx * sy) / det;
                CHECK(b0 == Approx(seg.coef[0]).margin(1e-9));
                CHECK(b1 == Approx(seg.coef[1]).margin(1e-9));
            }
            tau = bounds[j];
        }
    }
}

TEST_CASE("generation is deterministic in the seed") {
    ScenarioSpec spec = scenario_preset("S3", 42);
    SimResult a = generate(spec);
    SimResult b = generate(spec);
    REQUIRE(a.values == b.values);
    spec.seed = 43;
    SimResult c = generate(spec);
    CHECK(a.values != c.values);
}

TEST_CASE("model track matches the segment layout") {
    ScenarioSpec spec = scenario_preset("S2", 5);
    SimResult sim = generate(spec);
    CHECK(sim.track[0] == 2);
    CHECK(sim.track[252] == 1);   // t = 253, second segment
    CHECK(sim.track[530] == 2);
    CHECK(sim.track[999] == 1);
    CHECK(static_cast<int>(sim.track.size()) == spec.n);
}

TEST_CASE("scenario specs round-trip through json") {
    ScenarioSpec spec = scenario_preset("S4", 11);
    std::string text = scenario_to_json(spec);
    ScenarioSpec back = scenario_from_json(text);
    CHECK(back.n == spec.n);
    CHECK(back.changepoints == spec.changepoints);
    CHECK(back.noise_sd == spec.noise_sd);
    CHECK(back.seed == spec.seed);
    REQUIRE(back.segments.size() == spec.segments.size());
    for (std::size_t i = 0; i < spec.segments.size(); ++i) {
        CHECK(back.segments[i].model_index == spec.segments[i].model_index);
        CHECK(back.segments[i].coef[0] == spec.segments[i].coef[0]);
        CHECK(back.segments[i].theta == spec.segments[i].theta);
    }
    SimResult a = generate(spec), b = generate(back);
    CHECK(a.values == b.values);

    // preset shorthand
    ScenarioSpec p = scenario_from_json(R"({"preset": "S1", "seed": 9})");
    CHECK(p.changepoints == std::vector<int>{205, 489, 782});
    CHECK(p.seed == 9);
}

TEST_CASE("invalid scenario specs are rejected") {
    ScenarioSpec spec = scenario_preset("S1", 1);
    spec.changepoints = {300, 200};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    ScenarioSpec spec2 = scenario_preset("S1", 1);
    spec2.segments.pop_back();
    CHECK_THROWS_AS(spec2.validate(), std::invalid_argument);

    ScenarioSpec spec3 = scenario_preset("S3", 1);
    spec3.segments[1].theta = -1.0;  // periodic needs positive cycles
    CHECK_THROWS_AS(spec3.validate(), std::invalid_argument);
}

TEST_CASE("truth sidecar serialises the ground truth") {
    ScenarioSpec spec = scenario_preset("S1", 2);
    SimResult sim = generate(spec);
    std::string text = truth_to_json(sim, spec.n);
    CHECK(text.find("\"changepoints\"") != std::string::npos);
    CHECK(text.find("205") != std::string::npos);
    CHECK(text.find("\"model_track\"") != std::string::npos);
}
