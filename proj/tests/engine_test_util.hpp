// Shared fixtures for engine-level tests: a brute-force re-implementation of
// the filtering recursion (fresh marginal evaluations, no incremental state)
// and an exhaustive segmentation scorer for small instances.
#pragma once

#include <map>
#include <vector>

#include "bocpd/engine.hpp"

namespace brute {

using namespace bocpd;

inline EngineConfig two_model_config(int d, double hazard = 0.02) {
    ModelSpec mean_model;
    mean_model.kind = ModelKind::Mean;
    mean_model.prior_model_prob = 0.5;
    mean_model.coef_prior.V0 = {{{25.0, 0.0}, {0.0, 25.0}}};
    mean_model.coef_prior.shape = 2.0;
    mean_model.coef_prior.rate = 0.02;
    ModelSpec trend_model = mean_model;
    trend_model.kind = ModelKind::LinearTrend;
    EngineConfig cfg;
    cfg.models = {mean_model, trend_model};
    cfg.run_length = RunLength::geometric(hazard);
    cfg.min_segment_length = d;
    cfg.cap.enabled = false;
    cfg.extension = Extension::OnlineGradient;  // unused: no theta models
    cfg.seed = 99;
    return cfg;
}

// log sum_m L(s,t,m) p_m by direct evaluation
inline double log_mix(const std::vector<double>& y, int s, int t,
                      const std::vector<ModelSpec>& models) {
    double acc = kNegInf;
    for (const auto& m : models) {
        double lm = t > s ? log_marginal_likelihood(segment_view(y, s, t), m,
                                                    std::nullopt, m.coef_prior)
                          : 0.0;
        acc = log_add_exp(acc, lm + std::log(m.prior_model_prob));
    }
    return acc;
}

// From-scratch unrolled filtering recursion; returns per-t maps s -> log prob.
inline std::vector<std::map<int, double>> unrolled_filter(
    const std::vector<double>& y, const EngineConfig& cfg) {
    const int n = static_cast<int>(y.size());
    const int d = cfg.min_segment_length;
    const auto& rl = cfg.run_length;
    std::vector<std::map<int, double>> out(n + 1);

    std::map<int, double> cur;  // log Pr(C_t = s | y_1:t)
    cur[0] = 0.0;
    out[d] = cur;
    for (int t = d + 1; t <= n; ++t) {
        std::map<int, double> next;
        if (t < 2 * d) {
            next[0] = 0.0;
            out[t] = next;
            cur = next;
            continue;
        }
        // stay branch for the existing candidates
        for (const auto& [s, lp] : cur) {
            double w = log_mix(y, s, t, cfg.models) - log_mix(y, s, t - 1, cfg.models);
            next[s] = w + rl.log_stay(s, t - 1) + lp;
        }
        // fresh candidate at t - d aggregates the change mass
        double change = kNegInf;
        for (const auto& [r, lp] : cur)
            change = log_add_exp(change, rl.log_change(r, t - 1) + lp);
        int s_new = t - d;
        double w_new =
            log_mix(y, s_new, t, cfg.models) - log_mix(y, s_new, t - 1, cfg.models);
        next[s_new] = w_new + change;
        // normalise
        std::vector<double> vals;
        for (const auto& [s, lp] : next) vals.push_back(lp);
        double norm = log_sum_exp(vals);
        for (auto& [s, lp] : next) lp -= norm;
        out[t] = next;
        cur = next;
    }
    return out;
}

struct ExhaustiveBest {
    double log_score = kNegInf;
    std::vector<int> changepoints;
    std::vector<int> models;  // 0-based, one per segment
};

// Enumerate every segmentation with minimum segment length d and every model
// assignment; score matches the MAP recursions unrolled along the path.
inline ExhaustiveBest exhaustive_map(const std::vector<double>& y,
                                     const EngineConfig& cfg) {
    const int n = static_cast<int>(y.size());
    const int d = cfg.min_segment_length;
    const auto& rl = cfg.run_length;
    const int n_models = static_cast<int>(cfg.models.size());
    ExhaustiveBest best;

    std::vector<int> cps;
    auto segment_score = [&](int s, int t, int m) {
        return log_marginal_likelihood(segment_view(y, s, t), cfg.models[m],
                                       std::nullopt, cfg.models[m].coef_prior) +
               std::log(cfg.models[m].prior_model_prob);
    };
    std::function<void(int, double, std::vector<int>&)> assign_models =
        [&](int seg_idx, double acc, std::vector<int>& chosen) {
            const int k = static_cast<int>(cps.size());
            if (seg_idx == k + 1) {
                if (acc > best.log_score) {
                    best.log_score = acc;
                    best.changepoints = cps;
                    best.models = chosen;
                }
                return;
            }
            int s = seg_idx == 0 ? 0 : cps[seg_idx - 1];
            int t = seg_idx == k ? n : cps[seg_idx];
            for (int m = 0; m < n_models; ++m) {
                double sc = segment_score(s, t, m);
                // internal changepoints carry g(gap); the final segment the survival
                sc += seg_idx == k ? rl.log_survival(n - s - 1) : rl.log_g(t - s);
                chosen.push_back(m);
                assign_models(seg_idx + 1, acc + sc, chosen);
                chosen.pop_back();
            }
        };
    std::function<void(int)> build = [&](int from) {
        // close the segmentation here
        if (n - from >= d || from == 0) {
            std::vector<int> chosen;
            assign_models(0, 0.0, chosen);
        }
        for (int cp = from + d; cp <= n - d; ++cp) {
            cps.push_back(cp);
            build(cp);
            cps.pop_back();
        }
    };
    build(0);
    return best;
}

}  // namespace brute
