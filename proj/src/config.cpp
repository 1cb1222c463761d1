#include "bocpd/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bocpd {

using nlohmann::json;

void RunConfig::validate() const {
    if (down_sample < 1) throw std::invalid_argument("config: down_sample must be >= 1");
    if (backward_draws < 0) throw std::invalid_argument("config: backward_draws must be >= 0");
    if (sweep_r_eps && r_eps_grid.empty())
        throw std::invalid_argument("config: empty r_eps grid");
    engine.validate();
}

namespace {

double bound_from_json(const json& j) {
    if (j.is_null()) return kNegInf;  // caller fixes the sign
    return j.get<double>();
}

ThetaPrior theta_prior_from_json(const json& j) {
    ThetaPrior p;
    std::string kind = j.value("kind", "normal");
    p.mean = j.at("mean").get<double>();
    p.sd = j.at("sd").get<double>();
    if (kind == "normal") {
        p.kind = ThetaPrior::Kind::Normal;
    } else if (kind == "truncated_normal") {
        p.kind = ThetaPrior::Kind::TruncatedNormal;
        p.lower = j.contains("lower") && !j["lower"].is_null()
                      ? j["lower"].get<double>()
                      : kNegInf;
        p.upper = j.contains("upper") && !j["upper"].is_null()
                      ? j["upper"].get<double>()
                      : kPosInf;
    } else {
        throw std::invalid_argument("config: unknown theta prior kind " + kind);
    }
    return p;
}

json theta_prior_to_json(const ThetaPrior& p) {
    json j;
    j["mean"] = p.mean;
    j["sd"] = p.sd;
    if (p.kind == ThetaPrior::Kind::Normal) {
        j["kind"] = "normal";
    } else {
        j["kind"] = "truncated_normal";
        j["lower"] = p.lower == kNegInf ? json() : json(p.lower);
        j["upper"] = p.upper == kPosInf ? json() : json(p.upper);
    }
    return j;
}

ModelSpec model_from_json(const json& j) {
    ModelSpec m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.prior_model_prob = j.at("prior_prob").get<double>();
    const json& cp = j.at("coef_prior");
    auto mu = cp.value("mean", std::vector<double>{0.0, 0.0});
    for (std::size_t i = 0; i < mu.size() && i < 2; ++i) m.coef_prior.mu0[i] = mu[i];
    if (cp.contains("scale")) {
        const json& v0 = cp["scale"];
        if (v0.is_number()) {
            m.coef_prior.V0 = {{{v0.get<double>(), 0.0}, {0.0, v0.get<double>()}}};
        } else {
            for (int r = 0; r < 2 && r < static_cast<int>(v0.size()); ++r)
                for (int c = 0; c < 2 && c < static_cast<int>(v0[r].size()); ++c)
                    m.coef_prior.V0[r][c] = v0[r][c].get<double>();
        }
    }
    m.coef_prior.shape = cp.at("shape").get<double>();
    m.coef_prior.rate = cp.at("rate").get<double>();
    if (cp.contains("region") && !cp["region"].is_null()) {
        CoefRegion region;
        const json& reg = cp["region"];
        auto lo = reg.value("lower", std::vector<json>{});
        auto hi = reg.value("upper", std::vector<json>{});
        for (std::size_t i = 0; i < lo.size() && i < 2; ++i) {
            double b = bound_from_json(lo[i]);
            region.lower[i] = lo[i].is_null() ? kNegInf : b;
        }
        for (std::size_t i = 0; i < hi.size() && i < 2; ++i) {
            region.upper[i] = hi[i].is_null() ? kPosInf : hi[i].get<double>();
        }
        m.coef_prior.region = region;
    }
    if (j.contains("theta_prior") && !j["theta_prior"].is_null())
        m.theta_prior = theta_prior_from_json(j["theta_prior"]);
    return m;
}

json model_to_json(const ModelSpec& m) {
    json j;
    j["kind"] = to_string(m.kind);
    j["prior_prob"] = m.prior_model_prob;
    json cp;
    cp["mean"] = {m.coef_prior.mu0[0], m.coef_prior.mu0[1]};
    cp["scale"] = {{m.coef_prior.V0[0][0], m.coef_prior.V0[0][1]},
                   {m.coef_prior.V0[1][0], m.coef_prior.V0[1][1]}};
    cp["shape"] = m.coef_prior.shape;
    cp["rate"] = m.coef_prior.rate;
    if (m.coef_prior.region) {
        json reg;
        auto bound = [](double b, bool lower) {
            if (lower) return b == kNegInf ? json() : json(b);
            return b == kPosInf ? json() : json(b);
        };
        reg["lower"] = {bound(m.coef_prior.region->lower[0], true),
                        bound(m.coef_prior.region->lower[1], true)};
        reg["upper"] = {bound(m.coef_prior.region->upper[0], false),
                        bound(m.coef_prior.region->upper[1], false)};
        cp["region"] = reg;
    }
    j["coef_prior"] = cp;
    if (m.theta_prior) j["theta_prior"] = theta_prior_to_json(*m.theta_prior);
    return j;
}

}  // namespace

RunConfig run_config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    RunConfig c;
    c.input_path = j.value("input", "");
    c.output_dir = j.value("output_dir", ".");
    c.down_sample = j.value("down_sample", 1);
    c.seed = j.value("seed", 1ULL);
    c.backward_draws = j.value("backward_draws", 500);
    c.sweep_r_eps = j.value("sweep_r_eps", false);
    if (j.contains("r_eps_grid"))
        c.r_eps_grid = j["r_eps_grid"].get<std::vector<double>>();
    c.sampling_interval_hours = j.value("sampling_interval_hours", 0.0);

    EngineConfig& e = c.engine;
    e.extension = extension_from_string(j.value("extension", "pf"));
    e.min_segment_length = j.value("min_segment_length", 2);
    e.run_length = RunLength::geometric(j.value("hazard", 0.005));
    e.seed = c.seed;
    e.threads = j.value("threads", 0);
    if (j.contains("resampling")) {
        const json& r = j["resampling"];
        e.cap.enabled = r.value("enabled", true);
        e.cap.high_water = r.value("high_water", 80);
        e.cap.cap = r.value("cap", 40);
    }
    if (j.contains("pf")) {
        const json& p = j["pf"];
        e.pf.particles = p.value("particles", 1000);
        e.pf.shrinkage_a = p.value("shrinkage", 0.98);
        std::string scheme = p.value("resample", "multinomial");
        e.pf.scheme = scheme == "systematic" ? PfResampleScheme::Systematic
                                             : PfResampleScheme::Multinomial;
    }
    if (j.contains("og")) {
        const json& o = j["og"];
        e.og.order = o.value("order", "second") == "first" ? OgOrder::First
                                                           : OgOrder::Second;
        e.og.gradient_target = o.value("gradient_target", "full_segment") == "one_step"
                                   ? OgGradientTarget::OneStepPredictive
                                   : OgGradientTarget::FullSegment;
        e.og.r_eps = o.value("r_eps", 1e-6);
        e.og.curvature_floor = o.value("curvature_floor", 1e-4);
    }
    if (j.contains("quadrature")) {
        const json& q = j["quadrature"];
        e.quadrature.max_subdivisions = q.value("max_subdivisions", 1000);
        e.quadrature.rel_tol = q.value("rel_tol", 1e-6);
    }
    for (const json& m : j.at("models")) e.models.push_back(model_from_json(m));
    c.validate();
    return c;
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["input"] = c.input_path;
    j["output_dir"] = c.output_dir;
    j["down_sample"] = c.down_sample;
    j["seed"] = c.seed;
    j["backward_draws"] = c.backward_draws;
    j["sweep_r_eps"] = c.sweep_r_eps;
    j["r_eps_grid"] = c.r_eps_grid;
    j["sampling_interval_hours"] = c.sampling_interval_hours;
    j["extension"] = to_string(c.engine.extension);
    j["min_segment_length"] = c.engine.min_segment_length;
    j["hazard"] = c.engine.run_length.hazard();
    j["threads"] = c.engine.threads;
    j["resampling"] = {{"enabled", c.engine.cap.enabled},
                       {"high_water", c.engine.cap.high_water},
                       {"cap", c.engine.cap.cap}};
    j["pf"] = {{"particles", c.engine.pf.particles},
               {"shrinkage", c.engine.pf.shrinkage_a},
               {"resample", c.engine.pf.scheme == PfResampleScheme::Systematic
                                ? "systematic"
                                : "multinomial"}};
    j["og"] = {{"order", c.engine.og.order == OgOrder::First ? "first" : "second"},
               {"gradient_target",
                c.engine.og.gradient_target == OgGradientTarget::OneStepPredictive
                    ? "one_step"
                    : "full_segment"},
               {"r_eps", c.engine.og.r_eps},
               {"curvature_floor", c.engine.og.curvature_floor}};
    j["quadrature"] = {{"max_subdivisions", c.engine.quadrature.max_subdivisions},
                       {"rel_tol", c.engine.quadrature.rel_tol}};
    json models = json::array();
    for (const auto& m : c.engine.models) models.push_back(model_to_json(m));
    j["models"] = models;
    return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

RunConfig scenario_run_config(const std::string& scenario_id, Extension ext,
                              std::uint64_t seed) {
    RunConfig c;
    c.seed = seed;
    c.engine.seed = seed;
    c.engine.extension = ext;
    c.engine.min_segment_length = 20;
    c.engine.run_length = RunLength::geometric(0.005);
    c.engine.cap = CandidateCap{true, 80, 40};
    c.engine.pf = PfOptions{1000, 0.98, PfResampleScheme::Multinomial};
    c.engine.og = OgOptions{};
    c.sweep_r_eps = ext == Extension::OnlineGradient;

    const double noise_var = 0.015 * 0.015;
    ConjugatePrior base;
    base.mu0 = {0.0, 0.0};
    base.V0 = {{{1e4, 0.0}, {0.0, 1e4}}};
    base.shape = 2.0;
    base.rate = noise_var;  // prior mean of sigma^2 = rate / (shape - 1)

    ModelSpec theta_model, companion;
    theta_model.coef_prior = base;
    companion.coef_prior = base;
    theta_model.prior_model_prob = 0.5;
    companion.prior_model_prob = 0.5;

    // decay scales from 1 to ~400 samples; the lower bound keeps the decay
    // basis from degenerating into a straight line (and the gradient
    // extension from wandering into the flat-basis region)
    ThetaPrior decay_prior;
    decay_prior.kind = ThetaPrior::Kind::TruncatedNormal;
    decay_prior.mean = -4.0;
    decay_prior.sd = 1.0;
    decay_prior.lower = -6.0;
    decay_prior.upper = 0.0;
    ThetaPrior cycle_prior;
    cycle_prior.kind = ThetaPrior::Kind::TruncatedNormal;
    cycle_prior.mean = 16.0;
    cycle_prior.sd = 6.0;
    cycle_prior.lower = 4.0;
    cycle_prior.upper = 60.0;

    if (scenario_id == "S1") {
        theta_model.kind = ModelKind::ExpDecay;
        theta_model.theta_prior = decay_prior;
        companion.kind = ModelKind::Mean;
    } else if (scenario_id == "S2") {
        theta_model.kind = ModelKind::ExpDecay;
        theta_model.theta_prior = decay_prior;
        companion.kind = ModelKind::LinearTrend;
    } else if (scenario_id == "S3") {
        theta_model.kind = ModelKind::Periodic;
        theta_model.theta_prior = cycle_prior;
        companion.kind = ModelKind::Mean;
    } else if (scenario_id == "S4") {
        theta_model.kind = ModelKind::Periodic;
        theta_model.theta_prior = cycle_prior;
        companion.kind = ModelKind::LinearTrend;
    } else {
        throw std::invalid_argument("unknown scenario: " + scenario_id);
    }
    c.engine.models = {theta_model, companion};
    return c;
}

}  // namespace bocpd
