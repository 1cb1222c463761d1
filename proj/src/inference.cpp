#include "bocpd/inference.hpp"

#include <algorithm>
#include <cmath>

namespace bocpd {

std::array<double, 2> posterior_coef_mean(SegmentView seg, const ModelSpec& model,
                                          std::optional<double> theta) {
    const ConjugatePrior& prior = model.coef_prior;
    SuffStats st = segment_stats(seg, model.kind, theta.value_or(0.0));
    std::array<double, 2> mu{0.0, 0.0};
    if (model.coef_count() == 1) {
        double iv0 = 1.0 / prior.V0[0][0];
        double a = iv0 + st.n;
        mu[0] = (iv0 * prior.mu0[0] + st.sy) / a;
    } else {
        double det_v0 = prior.V0[0][0] * prior.V0[1][1] - prior.V0[0][1] * prior.V0[1][0];
        double i00 = prior.V0[1][1] / det_v0;
        double i01 = -prior.V0[0][1] / det_v0;
        double i11 = prior.V0[0][0] / det_v0;
        double a11 = i00 + st.n, a12 = i01 + st.sx, a22 = i11 + st.sxx;
        double det = a11 * a22 - a12 * a12;
        double c0 = i00 * prior.mu0[0] + i01 * prior.mu0[1] + st.sy;
        double c1 = i01 * prior.mu0[0] + i11 * prior.mu0[1] + st.sxy;
        mu[0] = (a22 * c0 - a12 * c1) / det;
        mu[1] = (-a12 * c0 + a11 * c1) / det;
    }
    return mu;
}

SegmentationResult viterbi_map(const FilterHistory& history,
                               const std::vector<double>& series,
                               const std::vector<ModelSpec>& models) {
    const int n = history.n();
    const int n_models = history.model_count();
    const StepRecord& last = history.at(n);

    SegmentationResult out;
    // final segment: plain argmax of P_n(s, m), no changepoint factor at n
    double best = kNegInf;
    int best_start = -1, best_model = -1;
    for (std::size_t i = 0; i < last.starts.size(); ++i) {
        for (int m = 0; m < n_models; ++m) {
            double v = last.log_p_entries[i * n_models + m];
            if (v > best) {
                best = v;
                best_start = last.starts[i];
                best_model = m;
            }
        }
    }
    if (best_start < 0) throw std::runtime_error("viterbi: empty final record");
    out.map_log_score = best;

    int end = n, start = best_start, model = best_model;
    for (;;) {
        const StepRecord& rec = history.at(end);
        Segment seg;
        seg.start = start;
        seg.end = end;
        seg.model_index = model;
        auto it = std::find(rec.starts.begin(), rec.starts.end(), start);
        if (it == rec.starts.end())
            throw std::runtime_error("viterbi: candidate missing from record at t=" +
                                     std::to_string(end));
        std::size_t idx = static_cast<std::size_t>(it - rec.starts.begin());
        seg.theta = rec.theta_summary[idx * n_models + model];
        out.segments.push_back(seg);
        if (start == 0) break;
        out.changepoints.push_back(start);
        const StepRecord& prev = history.at(start);
        if (prev.back_start < 0)
            throw std::runtime_error("viterbi: missing back-pointer at t=" +
                                     std::to_string(start));
        end = start;
        start = prev.back_start;
        model = prev.back_model;
    }
    std::reverse(out.segments.begin(), out.segments.end());
    std::reverse(out.changepoints.begin(), out.changepoints.end());

    for (auto& seg : out.segments) {
        const ModelSpec& spec = models[seg.model_index];
        seg.coef_count = spec.coef_count();
        SegmentView view = segment_view(series, seg.start, seg.end);
        std::optional<double> theta;
        if (spec.has_theta()) theta = seg.theta.point;
        if (!spec.has_theta() || std::isfinite(seg.theta.point))
            seg.coef = posterior_coef_mean(view, spec, theta);
    }
    return out;
}

BackwardSimResult backward_simulate(const FilterHistory& history,
                                    const RunLength& rl, int n_draws,
                                    std::mt19937_64& rng) {
    const int n = history.n();
    BackwardSimResult out;
    out.configurations.reserve(n_draws);
    out.inclusion.assign(n + 1, 0.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto sample_from = [&](const std::vector<double>& log_w) {
        std::vector<double> w(log_w.size());
        exp_normalize(log_w, w);
        double u = unif(rng);
        double cum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            cum += w[i];
            if (u <= cum) return i;
        }
        return w.size() - 1;
    };

    for (int k = 0; k < n_draws; ++k) {
        std::vector<int> cps;
        const StepRecord& last = history.at(n);
        int s = last.starts[sample_from(last.log_filter)];
        while (s > 0) {
            cps.push_back(s);
            const StepRecord& rec = history.at(s);
            std::vector<double> log_w(rec.starts.size());
            for (std::size_t i = 0; i < rec.starts.size(); ++i)
                log_w[i] = rec.log_filter[i] + rl.log_change(rec.starts[i], s);
            s = rec.starts[sample_from(log_w)];
        }
        std::reverse(cps.begin(), cps.end());
        for (int cp : cps) out.inclusion[cp] += 1.0;
        out.configurations.push_back(std::move(cps));
    }
    for (auto& v : out.inclusion) v /= n_draws;
    return out;
}

std::vector<int> model_track(const std::vector<int>& changepoints,
                             const std::vector<int>& segment_models, int n) {
    if (segment_models.size() != changepoints.size() + 1)
        throw std::invalid_argument("model_track: need one model per segment");
    std::vector<int> track(n);
    std::size_t seg = 0;
    for (int t = 1; t <= n; ++t) {
        while (seg < changepoints.size() && t > changepoints[seg]) ++seg;
        track[t - 1] = segment_models[seg];
    }
    return track;
}

DetectionMetrics evaluate_detection(std::vector<int> detected,
                                    std::vector<int> truth, int tolerance,
                                    const std::vector<int>& model_track_detected,
                                    const std::vector<int>& model_track_truth) {
    if (model_track_detected.size() != model_track_truth.size())
        throw std::invalid_argument("evaluate_detection: model tracks differ in length");
    std::sort(detected.begin(), detected.end());
    std::sort(truth.begin(), truth.end());

    // greedy nearest-first one-to-one matching
    struct Pair {
        int dist, di, ti;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < detected.size(); ++i)
        for (std::size_t j = 0; j < truth.size(); ++j) {
            int dist = std::abs(detected[i] - truth[j]);
            if (dist < tolerance) pairs.push_back({dist, static_cast<int>(i),
                                                   static_cast<int>(j)});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.ti != b.ti) return a.ti < b.ti;
        return a.di < b.di;
    });
    std::vector<bool> used_d(detected.size(), false), used_t(truth.size(), false);
    int matched = 0;
    for (const auto& p : pairs) {
        if (used_d[p.di] || used_t[p.ti]) continue;
        used_d[p.di] = true;
        used_t[p.ti] = true;
        ++matched;
    }

    DetectionMetrics m;
    m.matched = matched;
    m.true_positive_rate = truth.empty() ? 1.0 : static_cast<double>(matched) / truth.size();
    m.precision = detected.empty() ? 1.0 : static_cast<double>(matched) / detected.size();
    std::size_t agree = 0;
    for (std::size_t i = 0; i < model_track_truth.size(); ++i)
        if (model_track_detected[i] == model_track_truth[i]) ++agree;
    m.model_accuracy = model_track_truth.empty()
                           ? 1.0
                           : static_cast<double>(agree) / model_track_truth.size();
    return m;
}

}  // namespace bocpd
