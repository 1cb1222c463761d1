#pragma once

#include "bocpd/model.hpp"

namespace bocpd {

enum class OgOrder { First, Second };

// Ascent target for the theta updates. The whole-segment marginal keeps the
// per-step gradients coherent; the literal one-step predictive is available
// for comparison.
enum class OgGradientTarget { FullSegment, OneStepPredictive };

// Distance-over-gradient step-size state for one candidate's theta.
struct DogState {
    double theta = 0.0;
    double theta_init = 0.0;
    double max_distance = 0.0;   // max_j |theta_j - theta_init|, nondecreasing
    double grad_sq_sum = 0.0;    // sum of squared gradient norms, nondecreasing
    double r_eps = 1e-6;
    OgOrder order = OgOrder::Second;
    double curvature_floor = 1e-4;
    // running max keeps the second-order scaling pinned to the informative
    // part of the segment once the local curvature flattens out
    double curvature_max = 0.0;
    bool seen_gradient = false;
    double gamma0 = 0.0;         // initial step, r_eps / |g0|
    int consecutive_clamps = 0;
    int stagnation_warnings = 0;
};

DogState make_dog_state(double theta0, double r_eps, OgOrder order,
                        double curvature_floor);

// Step size before the new gradient enters the accumulators:
// first call gamma0 = r_eps / |g| (r_eps when g = 0), afterwards
// max(max_distance, r_eps) / sqrt(grad_sq_sum). Then the accumulator absorbs
// the gradient; the caller records the post-update distance via
// dog_record_distance.
double dog_step(DogState& ds, double gradient);

void dog_record_distance(DogState& ds);

// Gradient move on the one-step log-predictive (toward higher likelihood),
// clamped to the prior support by projection. Exposed with an injected
// (gradient, curvature) pair so update rules are testable in isolation.
void og_apply_update(DogState& ds, double gradient, double curvature,
                     double support_lo, double support_hi);

// Full update: evaluate the configured gradient at the current theta on seg
// (whose last entry is the newest observation) and advance the state.
void og_update(DogState& ds, SegmentView seg, const ModelSpec& model,
               const ConjugatePrior& prior,
               OgGradientTarget target = OgGradientTarget::FullSegment);

}  // namespace bocpd
