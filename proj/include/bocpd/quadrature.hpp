#pragma once

#include <functional>

#include "bocpd/model.hpp"

namespace bocpd {

struct QuadOptions {
    int max_subdivisions = 1000;
    double rel_tol = 1e-6;
};

struct QuadResult {
    double log_integral = kNegInf;
    bool converged = false;
    int subdivisions = 0;
};

// Adaptive Gauss-Kronrod 15(7) in log space: integrates exp(log_f) over
// [a, b] without leaving the log domain, so integrands with log values far
// from zero are safe. Non-convergence within the subdivision cap is reported,
// not thrown.
QuadResult log_adaptive_quadrature(const std::function<double(double)>& log_f,
                                   double a, double b, const QuadOptions& opts);

// log integral of L(seg | theta) pi(theta) dtheta over the prior support
// (infinite supports are clipped at +-8.5 prior sd).
QuadResult theta_marginal_quadrature(SegmentView seg, const ModelSpec& model,
                                     const QuadOptions& opts);

// Posterior mean of theta by the same quadrature (ratio of two integrals).
double theta_posterior_mean_quadrature(SegmentView seg, const ModelSpec& model,
                                       const QuadOptions& opts, bool* converged);

}  // namespace bocpd
