#include "bocpd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace bocpd {

namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1, 1]; the embedded 7-point
// Gauss rule uses the odd-indexed nodes.
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

struct Interval {
    double a, b;
    double log_integral;   // GK15 estimate
    double log_abs_error;  // |GK15 - G7| in log space
};

Interval eval_interval(const std::function<double(double)>& log_f, double a,
                       double b) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double lf[15];
    double nodes[15];
    for (int i = 0; i < 7; ++i) {
        nodes[i] = c - hw * kXgk[i];
        nodes[14 - i] = c + hw * kXgk[i];
    }
    nodes[7] = c;
    double m = kNegInf;
    for (int i = 0; i < 15; ++i) {
        lf[i] = log_f(nodes[i]);
        m = std::max(m, lf[i]);
    }
    Interval iv{a, b, kNegInf, kNegInf};
    if (m == kNegInf) {
        iv.log_integral = kNegInf;
        iv.log_abs_error = kNegInf;
        return iv;
    }
    double gk = 0.0, g = 0.0;
    for (int i = 0; i < 7; ++i) {
        double pair = std::exp(lf[i] - m) + std::exp(lf[14 - i] - m);
        gk += kWgk[i] * pair;
        if (i % 2 == 1) g += kWg[i / 2] * pair;
    }
    gk += kWgk[7] * std::exp(lf[7] - m);
    g += kWg[3] * std::exp(lf[7] - m);
    iv.log_integral = m + std::log(gk * hw);
    double diff = std::fabs(gk - g) * hw;
    iv.log_abs_error = diff > 0.0 ? m + std::log(diff) : kNegInf;
    return iv;
}

}  // namespace

QuadResult log_adaptive_quadrature(const std::function<double(double)>& log_f,
                                   double a, double b, const QuadOptions& opts) {
    QuadResult res;
    if (!(a < b)) {
        res.converged = true;
        return res;
    }
    auto cmp = [](const Interval& x, const Interval& y) {
        return x.log_abs_error < y.log_abs_error;
    };
    std::priority_queue<Interval, std::vector<Interval>, decltype(cmp)> q(cmp);

    // running totals kept linear against a floating log scale
    double scale = kNegInf, sum = 0.0, err = 0.0;
    auto add = [&](double log_i, double log_e, double sign) {
        double m = std::max(log_i, log_e);
        if (m > scale) {
            double f = std::exp(scale - m);
            sum *= f;
            err *= f;
            scale = m;
        }
        if (scale == kNegInf) return;
        if (log_i != kNegInf) sum += sign * std::exp(log_i - scale);
        if (log_e != kNegInf) err += sign * std::exp(log_e - scale);
    };

    const int seed_panels = 8;
    for (int i = 0; i < seed_panels; ++i) {
        double lo = a + (b - a) * i / seed_panels;
        double hi = a + (b - a) * (i + 1) / seed_panels;
        Interval iv = eval_interval(log_f, lo, hi);
        add(iv.log_integral, iv.log_abs_error, +1.0);
        q.push(iv);
    }
    res.subdivisions = seed_panels;
    auto done = [&]() {
        return sum <= 0.0 || scale == kNegInf || err < opts.rel_tol * sum;
    };
    while (res.subdivisions < opts.max_subdivisions) {
        if (done()) {
            res.converged = true;
            break;
        }
        Interval worst = q.top();
        q.pop();
        add(worst.log_integral, worst.log_abs_error, -1.0);
        double mid = 0.5 * (worst.a + worst.b);
        Interval left = eval_interval(log_f, worst.a, mid);
        Interval right = eval_interval(log_f, mid, worst.b);
        ++res.subdivisions;
        add(left.log_integral, left.log_abs_error, +1.0);
        add(right.log_integral, right.log_abs_error, +1.0);
        q.push(left);
        q.push(right);
        sum = std::max(sum, 0.0);
        err = std::max(err, 0.0);
    }
    if (!res.converged && done()) res.converged = true;
    res.log_integral = sum > 0.0 ? scale + std::log(sum) : kNegInf;
    return res;
}

namespace {

void quad_bounds(const ThetaPrior& prior, double* lo, double* hi) {
    *lo = prior.support_lower();
    *hi = prior.support_upper();
    if (*lo == kNegInf) *lo = prior.mean - 8.5 * prior.sd;
    if (*hi == kPosInf) *hi = prior.mean + 8.5 * prior.sd;
}

}  // namespace

QuadResult theta_marginal_quadrature(SegmentView seg, const ModelSpec& model,
                                     const QuadOptions& opts) {
    const ThetaPrior& prior = *model.theta_prior;
    double lo, hi;
    quad_bounds(prior, &lo, &hi);
    auto log_f = [&](double th) {
        return eval_log_marginal(seg, model, th) + prior.log_pdf(th);
    };
    return log_adaptive_quadrature(log_f, lo, hi, opts);
}

double theta_posterior_mean_quadrature(SegmentView seg, const ModelSpec& model,
                                       const QuadOptions& opts, bool* converged) {
    const ThetaPrior& prior = *model.theta_prior;
    double lo, hi;
    quad_bounds(prior, &lo, &hi);
    auto log_f = [&](double th) {
        return eval_log_marginal(seg, model, th) + prior.log_pdf(th);
    };
    // shift theta so the numerator integrand stays positive
    double shift = std::min(0.0, lo);
    auto log_f_th = [&](double th) { return log_f(th) + std::log(th - shift + 1.0); };
    QuadResult num = log_adaptive_quadrature(log_f_th, lo, hi, opts);
    QuadResult den = log_adaptive_quadrature(log_f, lo, hi, opts);
    if (converged) *converged = num.converged && den.converged;
    return std::exp(num.log_integral - den.log_integral) + shift - 1.0;
}

}  // namespace bocpd
