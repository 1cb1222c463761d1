#include "bocpd/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace bocpd {

std::string to_string(Extension e) {
    switch (e) {
        case Extension::ParticleFilter: return "pf";
        case Extension::OnlineGradient: return "og";
        case Extension::NumericReference: return "numeric-reference";
    }
    return "?";
}

Extension extension_from_string(const std::string& s) {
    if (s == "pf") return Extension::ParticleFilter;
    if (s == "og") return Extension::OnlineGradient;
    if (s == "numeric-reference" || s == "numeric_reference")
        return Extension::NumericReference;
    throw std::invalid_argument("unknown extension: " + s);
}

void EngineConfig::validate() const {
    if (models.empty()) throw std::invalid_argument("engine: empty candidate model set");
    double total = 0.0;
    for (const auto& m : models) {
        m.validate();
        total += m.prior_model_prob;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("engine: model prior probabilities must sum to 1");
    if (min_segment_length < 1)
        throw std::invalid_argument("engine: minimum segment length must be >= 1");
    if (cap.enabled && (cap.cap < 1 || cap.high_water < cap.cap))
        throw std::invalid_argument("engine: need high_water >= cap >= 1");
    if (pf.particles < 1) throw std::invalid_argument("engine: need at least one particle");
}

double candidate_log_weight(const CandidateState& cand) {
    return cand.log_mix - cand.log_mix_prev;
}

const StepRecord& FilterHistory::at(int t) const {
    if (!has(t))
        throw std::runtime_error("filter history: missing record at t=" + std::to_string(t));
    return records_[t - d_];
}

namespace {

class LiuWestEstimator final : public ThetaEstimator {
  public:
    LiuWestEstimator(const ModelSpec& model, const PfOptions& opts,
                     std::mt19937_64 rng)
        : model_(&model), opts_(opts), rng_(rng) {}

    double init(SegmentView seg) override {
        ps_ = make_particle_set(opts_.particles, *model_->theta_prior,
                                opts_.shrinkage_a, rng_, opts_.scheme);
        pf_eval_marginals(ps_, seg, *model_);
        return pf_log_marginal(ps_);
    }

    double init_prefix(SegmentView prefix) override {
        if (prefix.len == 0) return 0.0;
        std::vector<double> vals(ps_.size());
        for (int i = 0; i < ps_.size(); ++i)
            vals[i] = eval_log_marginal(prefix, *model_, ps_.theta[i]);
        return log_sum_exp(vals) - std::log(static_cast<double>(vals.size()));
    }

    double step(SegmentView seg) override {
        lw_propagate(ps_, *model_->theta_prior, rng_);
        lw_weights(ps_, seg, *model_);
        lw_resample(ps_, rng_);
        return pf_log_marginal(ps_);
    }

    ThetaSummary summary() const override { return particle_summary(ps_); }

  private:
    const ModelSpec* model_;
    PfOptions opts_;
    std::mt19937_64 rng_;
    ParticleSet ps_;
};

class OgEstimator final : public ThetaEstimator {
  public:
    OgEstimator(const ModelSpec& model, const OgOptions& opts, std::mt19937_64 rng)
        : model_(&model), opts_(opts), rng_(rng) {}

    double init(SegmentView seg) override {
        double theta0 = model_->theta_prior->sample(rng_);
        ds_ = make_dog_state(theta0, opts_.r_eps, opts_.order, opts_.curvature_floor);
        return eval_log_marginal(seg, *model_, ds_.theta);
    }

    double init_prefix(SegmentView prefix) override {
        if (prefix.len == 0) return 0.0;
        return eval_log_marginal(prefix, *model_, ds_.theta);
    }

    double step(SegmentView seg) override {
        og_update(ds_, seg, *model_, model_->coef_prior, opts_.gradient_target);
        return eval_log_marginal(seg, *model_, ds_.theta);
    }

    ThetaSummary summary() const override {
        ThetaSummary s;
        s.point = ds_.theta;
        s.mean = ds_.theta;
        s.has_distribution = false;
        return s;
    }

  private:
    const ModelSpec* model_;
    OgOptions opts_;
    std::mt19937_64 rng_;
    DogState ds_;
};

class QuadratureEstimator final : public ThetaEstimator {
  public:
    QuadratureEstimator(const ModelSpec& model, const QuadOptions& opts, int start)
        : model_(&model), opts_(opts), start_(start) {}

    double init(SegmentView seg) override { return integrate(seg); }
    double init_prefix(SegmentView prefix) override {
        return prefix.len == 0 ? 0.0 : integrate(prefix);
    }
    double step(SegmentView seg) override { return integrate(seg); }

    ThetaSummary summary() const override { return ThetaSummary{}; }

  private:
    double integrate(SegmentView seg) {
        QuadResult r = theta_marginal_quadrature(seg, *model_, opts_);
        if (!r.converged) throw QuadratureDivergence(start_ + seg.len, start_);
        return r.log_integral;
    }
    const ModelSpec* model_;
    QuadOptions opts_;
    int start_;
};

}  // namespace

Filter::Filter(EngineConfig config, std::vector<double> series)
    : config_(std::move(config)), series_(std::move(series)) {
    config_.validate();
    n_ = static_cast<int>(series_.size());
    const int d = config_.min_segment_length;
    if (n_ < d)
        throw std::invalid_argument("engine: series shorter than one minimum segment");
    log_prior_prob_.resize(config_.models.size());
    for (std::size_t m = 0; m < config_.models.size(); ++m)
        log_prior_prob_[m] = std::log(config_.models[m].prior_model_prob);
    history_ = FilterHistory(n_, d);
    history_.set_model_count(static_cast<int>(config_.models.size()));
    master_rng_ = make_stream(config_.seed, 0x5eed0001ULL);
}

std::unique_ptr<ThetaEstimator> Filter::make_estimator(const ModelSpec& model, int s) {
    std::mt19937_64 rng =
        make_stream(config_.seed, 0xc0ffee00ULL + static_cast<std::uint64_t>(s));
    switch (config_.extension) {
        case Extension::ParticleFilter:
            return std::make_unique<LiuWestEstimator>(model, config_.pf, rng);
        case Extension::OnlineGradient:
            return std::make_unique<OgEstimator>(model, config_.og, rng);
        case Extension::NumericReference:
            return std::make_unique<QuadratureEstimator>(model, config_.quadrature, s);
    }
    throw std::logic_error("unreachable");
}

CandidateState Filter::make_candidate(int s, int t) {
    const auto& models = config_.models;
    CandidateState cand;
    cand.start = s;
    cand.created_at = t;
    cand.protected_until = t + config_.min_segment_length;
    cand.log_p_smap = s == 0 ? 0.0 : history_.at(s).log_p_map;
    cand.log_marg.resize(models.size());
    cand.log_marg_prev.resize(models.size());
    cand.stats.resize(models.size());
    cand.theta.resize(models.size());
    cand.last_summary.resize(models.size());

    SegmentView full = segment_view(series_, s, t);
    SegmentView prefix = segment_view(series_, s, t - 1);
    for (std::size_t m = 0; m < models.size(); ++m) {
        const ModelSpec& model = models[m];
        if (model.has_theta()) {
            cand.theta[m] = make_estimator(model, s);
            cand.log_marg[m] = cand.theta[m]->init(full);
            cand.log_marg_prev[m] = cand.theta[m]->init_prefix(prefix);
            cand.last_summary[m] = cand.theta[m]->summary();
        } else {
            SuffStats st;
            for (int j = 0; j < prefix.len; ++j) {
                DesignRow row = design_row(model, j + 1.0, std::nullopt);
                st.add(j + 1.0, row.v[1], prefix.y[j]);
            }
            cand.log_marg_prev[m] = eval_from_stats(st, model);
            DesignRow row = design_row(model, full.len, std::nullopt);
            st.add(full.len, row.v[1], full.y[full.len - 1]);
            cand.log_marg[m] = eval_from_stats(st, model);
            cand.stats[m] = st;
        }
    }
    cand.log_mix = kNegInf;
    cand.log_mix_prev = kNegInf;
    for (std::size_t m = 0; m < models.size(); ++m) {
        cand.log_mix = log_add_exp(cand.log_mix, cand.log_marg[m] + log_prior_prob_[m]);
        cand.log_mix_prev =
            log_add_exp(cand.log_mix_prev, cand.log_marg_prev[m] + log_prior_prob_[m]);
    }
    cand.log_w = candidate_log_weight(cand);
    if (!std::isfinite(cand.log_mix)) cand.dead = true;
    return cand;
}

void Filter::refresh_mixture(CandidateState& cand) {
    cand.log_mix_prev = cand.log_mix;
    cand.log_mix = kNegInf;
    for (std::size_t m = 0; m < config_.models.size(); ++m)
        cand.log_mix = log_add_exp(cand.log_mix, cand.log_marg[m] + log_prior_prob_[m]);
    cand.log_w = candidate_log_weight(cand);
    if (!std::isfinite(cand.log_mix)) cand.dead = true;
}

void Filter::update_candidate(CandidateState& cand, int t) {
    const auto& models = config_.models;
    try {
        SegmentView seg = segment_view(series_, cand.start, t);
        for (std::size_t m = 0; m < models.size(); ++m) {
            cand.log_marg_prev[m] = cand.log_marg[m];
            const ModelSpec& model = models[m];
            if (model.has_theta()) {
                cand.log_marg[m] = cand.theta[m]->step(seg);
                cand.last_summary[m] = cand.theta[m]->summary();
            } else {
                double t_rel = t - cand.start;
                DesignRow row = design_row(model, t_rel, std::nullopt);
                cand.stats[m].add(t_rel, row.v[1], seg.y[seg.len - 1]);
                cand.log_marg[m] = eval_from_stats(cand.stats[m], model);
            }
        }
        refresh_mixture(cand);
    } catch (const QuadratureDivergence&) {
        cand.quad_divergence = true;
        cand.dead = true;
    } catch (const std::exception& e) {
        cand.dead = true;
        cand.fail_reason = e.what();
    }
}

void Filter::parallel_update(int t) {
    const int count = static_cast<int>(candidates_.size());
    int threads = config_.threads > 0
                      ? config_.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    bool heavy = config_.extension == Extension::ParticleFilter ||
                 config_.extension == Extension::NumericReference;
    if (threads == 1 || count < 4 || !heavy) {
        for (auto& cand : candidates_) update_candidate(cand, t);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) break;
                update_candidate(candidates_[i], t);
            }
        });
    }
    for (auto& th : pool) th.join();
}

void Filter::init_first_candidate() {
    const int d = config_.min_segment_length;
    const auto& models = config_.models;
    CandidateState cand;
    cand.start = 0;
    cand.created_at = d;
    cand.protected_until = 2 * d;
    cand.log_p_smap = 0.0;
    cand.log_marg.resize(models.size());
    cand.log_marg_prev.assign(models.size(), kNegInf);
    cand.stats.resize(models.size());
    cand.theta.resize(models.size());
    cand.last_summary.resize(models.size());
    SegmentView seg = segment_view(series_, 0, d);
    for (std::size_t m = 0; m < models.size(); ++m) {
        const ModelSpec& model = models[m];
        if (model.has_theta()) {
            cand.theta[m] = make_estimator(model, 0);
            cand.log_marg[m] = cand.theta[m]->init(seg);
            cand.last_summary[m] = cand.theta[m]->summary();
        } else {
            SuffStats st;
            for (int j = 0; j < seg.len; ++j) {
                DesignRow row = design_row(model, j + 1.0, std::nullopt);
                st.add(j + 1.0, row.v[1], seg.y[j]);
            }
            cand.stats[m] = st;
            cand.log_marg[m] = eval_from_stats(st, model);
        }
    }
    cand.log_mix = kNegInf;
    for (std::size_t m = 0; m < models.size(); ++m)
        cand.log_mix = log_add_exp(cand.log_mix, cand.log_marg[m] + log_prior_prob_[m]);
    cand.log_mix_prev = kNegInf;
    cand.log_w = 0.0;
    cand.log_filter = 0.0;
    candidates_.push_back(std::move(cand));
}

void Filter::advance(int t) {
    const int d = config_.min_segment_length;
    parallel_update(t);

    for (const auto& cand : candidates_)
        if (cand.quad_divergence) throw QuadratureDivergence(t, cand.start);

    const bool warmup = t < 2 * d;
    std::vector<double> prev_log_filter;
    prev_log_filter.reserve(candidates_.size());
    for (const auto& cand : candidates_) prev_log_filter.push_back(cand.log_filter);

    if (!warmup) {
        // aggregate change mass over all predecessors, then append s = t - d
        double change_mass = kNegInf;
        for (std::size_t i = 0; i < candidates_.size(); ++i) {
            const auto& cand = candidates_[i];
            if (cand.dead) continue;
            change_mass = log_add_exp(
                change_mass,
                config_.run_length.log_change(cand.start, t - 1) + prev_log_filter[i]);
        }
        for (auto& cand : candidates_) {
            if (cand.dead) continue;
            cand.log_filter += cand.log_w + config_.run_length.log_stay(cand.start, t - 1);
        }
        CandidateState fresh = make_candidate(t - d, t);
        fresh.log_filter = fresh.log_w + change_mass;
        candidates_.push_back(std::move(fresh));

        candidates_.erase(std::remove_if(candidates_.begin(), candidates_.end(),
                                         [](const CandidateState& c) { return c.dead; }),
                          candidates_.end());
        if (candidates_.empty())
            throw std::runtime_error("engine: all candidates died at t=" + std::to_string(t));

        std::vector<double> lf(candidates_.size());
        for (std::size_t i = 0; i < candidates_.size(); ++i) lf[i] = candidates_[i].log_filter;
        double norm = log_sum_exp(lf);
        if (norm == kNegInf)
            throw std::runtime_error("engine: filtering mass vanished at t=" + std::to_string(t));
        for (auto& cand : candidates_) cand.log_filter -= norm;
    } else {
        candidates_.erase(std::remove_if(candidates_.begin(), candidates_.end(),
                                         [](const CandidateState& c) { return c.dead; }),
                          candidates_.end());
        if (candidates_.empty())
            throw std::runtime_error("engine: warm-up candidate died at t=" + std::to_string(t));
        candidates_[0].log_filter = 0.0;  // Pr(C_t = 0 | y_{1:t}) = 1
    }

    record(t);
    resample_if_needed(t);
}

void Filter::record(int t) {
    const auto& rl = config_.run_length;
    const std::size_t n_models = config_.models.size();
    StepRecord rec;
    rec.t = t;
    rec.starts.reserve(candidates_.size());
    rec.log_filter.reserve(candidates_.size());
    rec.log_p_entries.reserve(candidates_.size() * n_models);
    rec.theta_summary.resize(candidates_.size() * n_models);
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        const auto& cand = candidates_[i];
        rec.starts.push_back(cand.start);
        rec.log_filter.push_back(cand.log_filter);
        double log_surv = rl.log_survival(t - cand.start - 1);
        for (std::size_t m = 0; m < n_models; ++m) {
            double entry = log_surv + cand.log_marg[m] + log_prior_prob_[m] + cand.log_p_smap;
            rec.log_p_entries.push_back(entry);
            rec.theta_summary[i * n_models + m] = cand.last_summary[m];
            double map_score = entry + rl.log_g(t - cand.start) - log_surv;
            if (map_score > rec.log_p_map) {
                rec.log_p_map = map_score;
                rec.back_start = cand.start;
                rec.back_model = static_cast<int>(m);
            }
        }
    }
    history_.push(std::move(rec));
}

void Filter::resample_if_needed(int t) {
    if (!config_.cap.enabled) return;
    if (static_cast<int>(candidates_.size()) <= config_.cap.high_water) return;

    std::vector<double> lf(candidates_.size());
    for (std::size_t i = 0; i < candidates_.size(); ++i) lf[i] = candidates_[i].log_filter;
    std::vector<double> w(candidates_.size());
    exp_normalize(lf, w);

    std::vector<SorItem> items(candidates_.size());
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        items[i].index = static_cast<int>(i);
        items[i].weight = w[i];
        items[i].exempt = t <= candidates_[i].protected_until;
    }
    SorResult sr = sor_resample(items, config_.cap.cap, master_rng_);

    std::vector<CandidateState> kept;
    kept.reserve(sr.kept.size());
    std::vector<std::pair<int, double>> order(sr.kept.size());
    for (std::size_t k = 0; k < sr.kept.size(); ++k)
        order[k] = {sr.kept[k], sr.kept_weights[k]};
    std::sort(order.begin(), order.end());
    for (auto& [idx, weight] : order) {
        CandidateState cand = std::move(candidates_[idx]);
        cand.log_filter = weight > 0.0 ? std::log(weight) : kNegInf;
        kept.push_back(std::move(cand));
    }
    candidates_ = std::move(kept);
}

double Filter::eval_from_stats(const SuffStats& st, const ModelSpec& model) const {
    const int dim = model.coef_count();
    if (!model.coef_prior.region || model.coef_prior.region->whole_space(dim))
        return log_marginal_from_stats(st, dim, model.coef_prior);
    double s2 = residual_variance_from_stats(st, dim);
    return log_marginal_truncated_from_stats(st, dim, model.coef_prior, s2).log_value;
}

void Filter::run() {
    const int d = config_.min_segment_length;
    init_first_candidate();
    record(d);
    for (int t = d + 1; t <= n_; ++t) advance(t);
}

}  // namespace bocpd
