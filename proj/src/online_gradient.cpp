#include "bocpd/online_gradient.hpp"

#include <algorithm>
#include <cmath>

namespace bocpd {

DogState make_dog_state(double theta0, double r_eps, OgOrder order,
                        double curvature_floor) {
    if (!(r_eps > 0.0))
        throw std::invalid_argument("dog state: r_eps must be > 0");
    DogState ds;
    ds.theta = theta0;
    ds.theta_init = theta0;
    ds.r_eps = r_eps;
    ds.order = order;
    ds.curvature_floor = curvature_floor;
    return ds;
}

double dog_step(DogState& ds, double gradient) {
    double g = std::fabs(gradient);
    double gamma;
    if (!ds.seen_gradient) {
        gamma = g > 0.0 ? ds.r_eps / g : ds.r_eps;
        ds.gamma0 = gamma;
        ds.seen_gradient = true;
    } else {
        gamma = std::max(ds.max_distance, ds.r_eps) / std::sqrt(ds.grad_sq_sum);
    }
    ds.grad_sq_sum += g * g;
    return gamma;
}

void dog_record_distance(DogState& ds) {
    ds.max_distance = std::max(ds.max_distance, std::fabs(ds.theta - ds.theta_init));
}

void og_apply_update(DogState& ds, double gradient, double curvature,
                     double support_lo, double support_hi) {
    if (!std::isfinite(gradient)) return;  // flagged upstream, skip this step
    double direction = gradient;
    if (ds.order == OgOrder::Second) {
        // distance-over-gradient runs on the preconditioned gradient, so the
        // first move is r_eps regardless of the curvature scale
        if (std::isfinite(curvature)) ds.curvature_max = std::max(ds.curvature_max, curvature);
        direction /= std::max(ds.curvature_max, ds.curvature_floor);
    }
    double gamma = dog_step(ds, direction);
    double step = gamma * direction;
    double proposed = ds.theta + step;  // ascent on the log-predictive
    double clamped = std::clamp(proposed, support_lo, support_hi);
    if (clamped != proposed) {
        if (++ds.consecutive_clamps >= 2) ++ds.stagnation_warnings;
    } else {
        ds.consecutive_clamps = 0;
    }
    ds.theta = clamped;
    dog_record_distance(ds);
}

void og_update(DogState& ds, SegmentView seg, const ModelSpec& model,
               const ConjugatePrior& prior, OgGradientTarget target) {
    GradResult g = target == OgGradientTarget::FullSegment
                       ? grad_log_marginal_segment(ds.theta, seg, model, prior)
                       : grad_log_conditional(ds.theta, seg, model, prior);
    const ThetaPrior& tp = *model.theta_prior;
    og_apply_update(ds, g.gradient, g.curvature, tp.support_lower(),
                    tp.support_upper());
}

}  // namespace bocpd
