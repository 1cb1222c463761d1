#include "bocpd/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bocpd {

double ParticleSet::weighted_mean() const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) m += std::exp(log_weight[i]) * theta[i];
    return m;
}

double ParticleSet::weighted_variance() const {
    double m = weighted_mean();
    double v = 0.0;
    for (int i = 0; i < size(); ++i) {
        double d = theta[i] - m;
        v += std::exp(log_weight[i]) * d * d;
    }
    return v;
}

ParticleSet make_particle_set(int n, const ThetaPrior& prior, double shrinkage_a,
                              std::mt19937_64& rng, PfResampleScheme scheme) {
    if (n < 1) throw std::invalid_argument("particle set: need at least one particle");
    if (!(shrinkage_a > 0.0) || !(shrinkage_a <= 1.0))
        throw std::invalid_argument("particle set: shrinkage a must be in (0,1]");
    ParticleSet ps;
    ps.shrinkage_a = shrinkage_a;
    ps.scheme = scheme;
    ps.theta.resize(n);
    for (auto& th : ps.theta) th = prior.sample(rng);
    ps.log_weight.assign(n, -std::log(static_cast<double>(n)));
    return ps;
}

void lw_propagate(ParticleSet& ps, const ThetaPrior& prior, std::mt19937_64& rng) {
    const int n = ps.size();
    const double a = ps.shrinkage_a;
    const double mean = ps.weighted_mean();
    const double var = ps.weighted_variance();
    const double sd = ps.h() * std::sqrt(std::max(0.0, var));
    const double lo = prior.support_lower();
    const double hi = prior.support_upper();

    ps.propagation_mean.resize(n);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        double mu = a * ps.theta[i] + (1.0 - a) * mean;
        ps.propagation_mean[i] = mu;
        double th = sd > 0.0 ? mu + sd * noise(rng) : mu;
        ps.theta[i] = std::clamp(th, lo, hi);
    }
}

void lw_weights(ParticleSet& ps, SegmentView seg, const ModelSpec& model) {
    const int n = ps.size();
    if (static_cast<int>(ps.propagation_mean.size()) != n)
        throw std::logic_error("lw_weights: propagate must run first");
    ps.cached_log_marginal.resize(n);
    ps.log_weight.resize(n);
    const bool one_step = ps.weight_mode == PfWeightMode::OneStepPredictive &&
                          seg.len > 1;
    for (int i = 0; i < n; ++i) {
        MarginalPair num = eval_log_marginal_with_prefix(seg, model, ps.theta[i]);
        MarginalPair den =
            eval_log_marginal_with_prefix(seg, model, ps.propagation_mean[i]);
        ps.cached_log_marginal[i] = num.log_full;
        double w = num.log_full - den.log_full;
        if (one_step) w -= num.log_prefix - den.log_prefix;
        ps.log_weight[i] = w;
    }
    double lse = log_sum_exp(ps.log_weight);
    if (lse == kNegInf)
        throw std::runtime_error("lw_weights: particle collapse (all weights -inf)");
    for (auto& w : ps.log_weight) w -= lse;
}

namespace {

std::vector<int> draw_indices(const std::vector<double>& cum, int n,
                              PfResampleScheme scheme, std::mt19937_64& rng) {
    std::vector<int> idx(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double total = cum.back();
    if (scheme == PfResampleScheme::Systematic) {
        double u = unif(rng) * total / n;
        int j = 0;
        for (int i = 0; i < n; ++i) {
            double target = u + i * (total / n);
            while (j < static_cast<int>(cum.size()) - 1 && cum[j] <= target) ++j;
            idx[i] = j;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            double target = unif(rng) * total;
            idx[i] = static_cast<int>(
                std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
            if (idx[i] >= static_cast<int>(cum.size()))
                idx[i] = static_cast<int>(cum.size()) - 1;
        }
    }
    return idx;
}

}  // namespace

void lw_resample(ParticleSet& ps, std::mt19937_64& rng) {
    const int n = ps.size();
    std::vector<double> cum(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += std::exp(ps.log_weight[i]);
        cum[i] = acc;
    }
    std::vector<int> idx = draw_indices(cum, n, ps.scheme, rng);
    std::vector<double> new_theta(n), new_cache;
    bool has_cache = !ps.cached_log_marginal.empty();
    if (has_cache) new_cache.resize(n);
    for (int i = 0; i < n; ++i) {
        new_theta[i] = ps.theta[idx[i]];
        if (has_cache) new_cache[i] = ps.cached_log_marginal[idx[i]];
    }
    ps.theta = std::move(new_theta);
    if (has_cache) ps.cached_log_marginal = std::move(new_cache);
    ps.log_weight.assign(n, -std::log(static_cast<double>(n)));
}

void pf_eval_marginals(ParticleSet& ps, SegmentView seg, const ModelSpec& model) {
    ps.cached_log_marginal.resize(ps.size());
    for (int i = 0; i < ps.size(); ++i)
        ps.cached_log_marginal[i] = eval_log_marginal(seg, model, ps.theta[i]);
}

double pf_log_marginal(const ParticleSet& ps) {
    if (ps.cached_log_marginal.empty())
        throw std::logic_error("pf_log_marginal: marginal cache is empty");
    return log_sum_exp(ps.cached_log_marginal) -
           std::log(static_cast<double>(ps.cached_log_marginal.size()));
}

ThetaSummary particle_summary(const ParticleSet& ps) {
    ThetaSummary s;
    s.has_distribution = true;
    s.mean = ps.weighted_mean();
    s.sd = std::sqrt(std::max(0.0, ps.weighted_variance()));
    s.point = s.mean;
    std::vector<double> sorted = ps.theta;
    std::sort(sorted.begin(), sorted.end());
    s.q25 = quantile_type7_sorted(sorted, 0.25);
    s.q50 = quantile_type7_sorted(sorted, 0.50);
    s.q75 = quantile_type7_sorted(sorted, 0.75);
    return s;
}

}  // namespace bocpd
