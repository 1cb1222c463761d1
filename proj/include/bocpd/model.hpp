#pragma once

#include <array>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bocpd/math_util.hpp"

namespace bocpd {

enum class ModelKind { Mean, LinearTrend, ExpDecay, Periodic };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Prior over the difficult parameter theta. Support bounds are used both to
// initialise candidates and to clamp/integrate estimators.
struct ThetaPrior {
    enum class Kind { Normal, TruncatedNormal };
    Kind kind = Kind::Normal;
    double mean = 0.0;
    double sd = 1.0;
    double lower = kNegInf;  // meaningful for TruncatedNormal
    double upper = kPosInf;

    double support_lower() const { return kind == Kind::Normal ? kNegInf : lower; }
    double support_upper() const { return kind == Kind::Normal ? kPosInf : upper; }
    double sample(std::mt19937_64& rng) const;
    double log_pdf(double theta) const;
    void validate() const;
};

// Axis-aligned coefficient constraint region (truncated-Normal prior support).
struct CoefRegion {
    std::array<double, 2> lower{kNegInf, kNegInf};
    std::array<double, 2> upper{kPosInf, kPosInf};

    bool whole_space(int dim) const;
    void validate(int dim) const;
};

// Normal-inverse-Gamma prior: beta | s2 ~ N(mu0, s2 * V0), s2 ~ IG(shape, rate).
struct ConjugatePrior {
    std::array<double, 2> mu0{0.0, 0.0};
    std::array<std::array<double, 2>, 2> V0{{{1.0, 0.0}, {0.0, 1.0}}};
    double shape = 2.0;  // u
    double rate = 1.0;   // v
    std::optional<CoefRegion> region;

    void validate(int dim) const;
};

struct ModelSpec {
    ModelKind kind = ModelKind::Mean;
    double prior_model_prob = 1.0;
    ConjugatePrior coef_prior;
    std::optional<ThetaPrior> theta_prior;

    bool has_theta() const {
        return kind == ModelKind::ExpDecay || kind == ModelKind::Periodic;
    }
    int coef_count() const { return kind == ModelKind::Mean ? 1 : 2; }
    void validate() const;
};

// A contiguous slice of observations with segment-relative times 1..len.
struct SegmentView {
    const double* y = nullptr;
    int len = 0;
};

inline SegmentView segment_view(const std::vector<double>& series, int s, int t) {
    return SegmentView{series.data() + s, t - s};
}

// Sufficient statistics of a segment under a (possibly theta-dependent) basis
// (1, x_t). Mean-model evaluations use only n, sy, syy.
struct SuffStats {
    double n = 0, sy = 0, syy = 0;
    double sx = 0, sxx = 0, sxy = 0;

    void add(double t_rel, double x, double y) {
        n += 1;
        sy += y;
        syy += y * y;
        sx += x;
        sxx += x * x;
        sxy += x * y;
        (void)t_rel;
    }
};

// d/dtheta companions of the basis sums, for the analytic gradient.
struct GradStats {
    double sdx = 0, sdxx = 0, sdxy = 0;
};

struct DesignRow {
    std::array<double, 2> v{1.0, 0.0};
    int dim = 1;
};

// Regression basis at segment-relative time t_rel (>= 1).
DesignRow design_row(const ModelSpec& model, double t_rel,
                     std::optional<double> theta);

// One fused pass over the segment; grad may be null.
SuffStats segment_stats(SegmentView seg, ModelKind kind, double theta,
                        GradStats* grad = nullptr);

// Exact Normal-inverse-Gamma log marginal from sufficient statistics.
double log_marginal_from_stats(const SuffStats& st, int dim,
                               const ConjugatePrior& prior);

// Exact log marginal of the segment under the model (theta required iff the
// model has one). Ignores any truncation region; see log_marginal_truncated.
double log_marginal_likelihood(SegmentView seg, const ModelSpec& model,
                               std::optional<double> theta,
                               const ConjugatePrior& prior);

struct TruncatedMarginal {
    double log_value = kNegInf;
    bool underflow = false;
};

// Truncated-prior correction: untruncated marginal plus
// log Phi(region | mu1, s2_hat V1) - log Phi(region | mu0, s2_hat V0).
TruncatedMarginal log_marginal_truncated(SegmentView seg, const ModelSpec& model,
                                         std::optional<double> theta,
                                         const ConjugatePrior& prior,
                                         double sigma2_hat);

TruncatedMarginal log_marginal_truncated_from_stats(const SuffStats& st, int dim,
                                                    const ConjugatePrior& prior,
                                                    double sigma2_hat);

// OLS residual variance of the segment under the model basis, floored.
double segment_residual_variance(SegmentView seg, const ModelSpec& model,
                                 std::optional<double> theta,
                                 double floor = 1e-8);

double residual_variance_from_stats(const SuffStats& st, int dim,
                                    double floor = 1e-8);

// Marginal with the truncation correction applied automatically when the
// prior carries a region (sigma2_hat from an OLS fit of the segment).
double eval_log_marginal(SegmentView seg, const ModelSpec& model,
                         std::optional<double> theta);

// Marginals of the segment and of its one-shorter prefix in a single pass
// over the data (the particle-filter hot path).
struct MarginalPair {
    double log_prefix;  // log L(y_1..n-1), 0 when the segment has one point
    double log_full;    // log L(y_1..n)
};
MarginalPair eval_log_marginal_with_prefix(SegmentView seg, const ModelSpec& model,
                                           std::optional<double> theta);

struct GradResult {
    double gradient = 0.0;
    double curvature = 1.0;  // positive proxy for second-order updates
};

// Gradient (and curvature proxy) of the one-step log-predictive of the newest
// observation in seg, with coefficients and residual variance marginalised.
GradResult grad_log_conditional(double theta, SegmentView seg,
                                const ModelSpec& model,
                                const ConjugatePrior& prior);

// Gradient (and curvature proxy) of the whole-segment log marginal. The
// one-step predictive gradient is noise-dominated once the coefficient
// posterior adapts to the prefix, so this is the default ascent target for
// the online-gradient extension.
GradResult grad_log_marginal_segment(double theta, SegmentView seg,
                                     const ModelSpec& model,
                                     const ConjugatePrior& prior);

struct DrydownTransforms {
    double decay_rate;    // gamma in (0,1)
    double efold_samples; // omega in sample units
    double efold_days;
};

DrydownTransforms drydown_transforms(double theta, double sampling_interval_hours);

}  // namespace bocpd
