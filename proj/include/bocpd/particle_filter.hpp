#pragma once

#include <random>
#include <vector>

#include "bocpd/model.hpp"

namespace bocpd {

enum class PfResampleScheme { Multinomial, Systematic };

// Weight target: the likelihood ratio at the propagated particle over its
// propagation mean, on the one-step predictive (default) or the whole
// segment. The full-segment form contracts the cloud before it can settle,
// so it is kept as an option rather than the default.
enum class PfWeightMode { OneStepPredictive, FullSegment };

// Liu-West particle cloud over the difficult parameter of one candidate.
// Weights are kept normalised in log space (log-sum-exp = 0).
struct ParticleSet {
    std::vector<double> theta;
    std::vector<double> log_weight;
    std::vector<double> cached_log_marginal;  // numerator marginals, Eq.-(10) values
    std::vector<double> propagation_mean;     // mu(theta_prev) from the last propagate
    double shrinkage_a = 0.98;
    PfResampleScheme scheme = PfResampleScheme::Multinomial;
    PfWeightMode weight_mode = PfWeightMode::OneStepPredictive;

    int size() const { return static_cast<int>(theta.size()); }
    double h() const { return std::sqrt(1.0 - shrinkage_a * shrinkage_a); }
    double weighted_mean() const;
    double weighted_variance() const;
};

ParticleSet make_particle_set(int n, const ThetaPrior& prior, double shrinkage_a,
                              std::mt19937_64& rng,
                              PfResampleScheme scheme = PfResampleScheme::Multinomial);

// Shrinkage propagation: theta_i <- N(a theta_i + (1-a) mean, h^2 V).
// Records the propagation means; preserves the first two weighted moments in
// expectation. Zero variance propagates means only. Draws are projected into
// the prior support.
void lw_propagate(ParticleSet& ps, const ThetaPrior& prior, std::mt19937_64& rng);

// Weight update: log w_i = log L(seg | theta_i) - log L(seg | mu_i), then
// normalise. Numerator marginals are cached for pf_log_marginal.
// Throws on total collapse (all weights -inf).
void lw_weights(ParticleSet& ps, SegmentView seg, const ModelSpec& model);

// Resample to equal weights; cached marginals follow their particles.
void lw_resample(ParticleSet& ps, std::mt19937_64& rng);

// Fills the marginal cache at the current particles (used at candidate
// creation, before any weighting happened).
void pf_eval_marginals(ParticleSet& ps, SegmentView seg, const ModelSpec& model);

// log of the particle average of the cached beta-marginalised likelihoods.
// Requires a filled cache (sequencing error otherwise).
double pf_log_marginal(const ParticleSet& ps);

struct ThetaSummary {
    double point = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();
    double q25 = std::numeric_limits<double>::quiet_NaN();
    double q50 = std::numeric_limits<double>::quiet_NaN();
    double q75 = std::numeric_limits<double>::quiet_NaN();
    bool has_distribution = false;
};

ThetaSummary particle_summary(const ParticleSet& ps);

}  // namespace bocpd
