#include "bocpd/model.hpp"

#include <cmath>
#include <sstream>

namespace bocpd {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Mean: return "mean";
        case ModelKind::LinearTrend: return "linear_trend";
        case ModelKind::ExpDecay: return "exp_decay";
        case ModelKind::Periodic: return "periodic";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "mean") return ModelKind::Mean;
    if (s == "linear_trend") return ModelKind::LinearTrend;
    if (s == "exp_decay") return ModelKind::ExpDecay;
    if (s == "periodic") return ModelKind::Periodic;
    throw std::invalid_argument("unknown model kind: " + s);
}

double ThetaPrior::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (kind == Kind::Normal) {
        return mean + sd * norm_quantile(unif(rng));
    }
    double pa = norm_cdf((lower - mean) / sd);
    double pb = norm_cdf((upper - mean) / sd);
    double u = pa + unif(rng) * (pb - pa);
    double x = mean + sd * norm_quantile(u);
    return std::clamp(x, lower, upper);
}

double ThetaPrior::log_pdf(double theta) const {
    double z = (theta - mean) / sd;
    double base = -0.5 * z * z - std::log(sd) - 0.5 * kLogTwoPi;
    if (kind == Kind::Normal) return base;
    if (theta < lower || theta > upper) return kNegInf;
    double mass = norm_cdf((upper - mean) / sd) - norm_cdf((lower - mean) / sd);
    return base - std::log(mass);
}

void ThetaPrior::validate() const {
    if (!(sd > 0.0) || !std::isfinite(mean))
        throw std::invalid_argument("theta prior: sd must be positive, mean finite");
    if (kind == Kind::TruncatedNormal && !(lower < upper))
        throw std::invalid_argument("theta prior: empty truncation interval");
}

bool CoefRegion::whole_space(int dim) const {
    for (int i = 0; i < dim; ++i)
        if (lower[i] != kNegInf || upper[i] != kPosInf) return false;
    return true;
}

void CoefRegion::validate(int dim) const {
    for (int i = 0; i < dim; ++i)
        if (!(lower[i] < upper[i]))
            throw std::invalid_argument("coefficient region has empty interior");
}

void ConjugatePrior::validate(int dim) const {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("inverse-Gamma prior: shape and rate must be > 0");
    if (dim == 1) {
        if (!(V0[0][0] > 0.0))
            throw std::invalid_argument("V0 must be positive definite");
    } else {
        double det = V0[0][0] * V0[1][1] - V0[0][1] * V0[1][0];
        if (!(V0[0][0] > 0.0) || !(det > 0.0) || V0[0][1] != V0[1][0])
            throw std::invalid_argument("V0 must be symmetric positive definite");
    }
    if (region) region->validate(dim);
}

void ModelSpec::validate() const {
    if (!(prior_model_prob > 0.0) || !(prior_model_prob <= 1.0))
        throw std::invalid_argument("prior model probability must be in (0,1]");
    coef_prior.validate(coef_count());
    if (has_theta()) {
        if (!theta_prior)
            throw std::invalid_argument(to_string(kind) + " model requires a theta prior");
        theta_prior->validate();
        if (kind == ModelKind::Periodic && !(theta_prior->support_lower() > 0.0))
            throw std::invalid_argument("periodic theta prior must have positive support");
    } else if (theta_prior) {
        throw std::invalid_argument(to_string(kind) + " model must not carry a theta prior");
    }
}

DesignRow design_row(const ModelSpec& model, double t_rel,
                     std::optional<double> theta) {
    if (t_rel < 1.0)
        throw std::invalid_argument("design_row: t_rel must be >= 1");
    if (model.has_theta() != theta.has_value())
        throw std::invalid_argument("design_row: theta required iff the model has one");
    DesignRow row;
    switch (model.kind) {
        case ModelKind::Mean:
            row.dim = 1;
            break;
        case ModelKind::LinearTrend:
            row.dim = 2;
            row.v[1] = t_rel;
            break;
        case ModelKind::ExpDecay:
            row.dim = 2;
            row.v[1] = std::exp(-std::exp(*theta) * t_rel);
            break;
        case ModelKind::Periodic:
            if (!(*theta > 0.0))
                throw std::domain_error("design_row: periodic theta must be > 0");
            row.dim = 2;
            row.v[1] = std::sin(t_rel / *theta);
            break;
    }
    return row;
}

SuffStats segment_stats(SegmentView seg, ModelKind kind, double theta,
                        GradStats* grad) {
    SuffStats st;
    const double* y = seg.y;
    const int n = seg.len;
    st.n = n;
    switch (kind) {
        case ModelKind::Mean: {
            double sy = 0, syy = 0;
            for (int i = 0; i < n; ++i) {
                sy += y[i];
                syy += y[i] * y[i];
            }
            st.sy = sy;
            st.syy = syy;
            break;
        }
        case ModelKind::LinearTrend: {
            double sy = 0, syy = 0, sxy = 0;
            for (int i = 0; i < n; ++i) {
                double t = i + 1.0;
                sy += y[i];
                syy += y[i] * y[i];
                sxy += t * y[i];
            }
            double dn = n;
            st.sy = sy;
            st.syy = syy;
            st.sxy = sxy;
            st.sx = dn * (dn + 1.0) / 2.0;
            st.sxx = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 6.0;
            break;
        }
        case ModelKind::ExpDecay: {
            // x_t = q^t with q = exp(-exp(theta)); dx_t = -exp(theta) * t * x_t
            double lam = std::exp(theta);
            double q = std::exp(-lam);
            double x = 1.0;
            double sy = 0, syy = 0, sx = 0, sxx = 0, sxy = 0;
            double sdx = 0, sdxx = 0, sdxy = 0;
            for (int i = 0; i < n; ++i) {
                x *= q;
                double yi = y[i];
                sy += yi;
                syy += yi * yi;
                sx += x;
                sxx += x * x;
                sxy += x * yi;
                if (grad) {
                    double dx = -lam * (i + 1.0) * x;
                    sdx += dx;
                    sdxx += dx * x;
                    sdxy += dx * yi;
                }
            }
            st.sy = sy; st.syy = syy; st.sx = sx; st.sxx = sxx; st.sxy = sxy;
            if (grad) { grad->sdx = sdx; grad->sdxx = sdxx; grad->sdxy = sdxy; }
            break;
        }
        case ModelKind::Periodic: {
            if (!(theta > 0.0))
                throw std::domain_error("segment_stats: periodic theta must be > 0");
            // rotation recurrence for sin(t/theta), cos(t/theta)
            double phi = 1.0 / theta;
            double cd = std::cos(phi), sd_ = std::sin(phi);
            double c = 1.0, s = 0.0;
            double sy = 0, syy = 0, sx = 0, sxx = 0, sxy = 0;
            double sdx = 0, sdxx = 0, sdxy = 0;
            double inv_t2 = 1.0 / (theta * theta);
            for (int i = 0; i < n; ++i) {
                double ns = s * cd + c * sd_;
                double nc = c * cd - s * sd_;
                s = ns;
                c = nc;
                double yi = y[i];
                sy += yi;
                syy += yi * yi;
                sx += s;
                sxx += s * s;
                sxy += s * yi;
                if (grad) {
                    double dx = -(i + 1.0) * inv_t2 * c;
                    sdx += dx;
                    sdxx += dx * s;
                    sdxy += dx * yi;
                }
            }
            st.sy = sy; st.syy = syy; st.sx = sx; st.sxx = sxx; st.sxy = sxy;
            if (grad) { grad->sdx = sdx; grad->sdxx = sdxx; grad->sdxy = sdxy; }
            break;
        }
    }
    return st;
}

namespace {

struct Posterior {
    // A = V0^-1 + X'X, c = V0^-1 mu0 + X'y, mu1 = A^-1 c
    double a11, a12, a22;        // A (a12 unused for dim 1)
    double mu1_0, mu1_1;
    double log_det_a;
    double log_det_v0;
    double v1;                   // posterior rate
    double prior_quad;           // mu0' V0^-1 mu0
};

Posterior posterior_terms(const SuffStats& st, int dim, const ConjugatePrior& prior) {
    Posterior p{};
    if (dim == 1) {
        double v0 = prior.V0[0][0];
        double iv0 = 1.0 / v0;
        p.a11 = iv0 + st.n;
        if (!(p.a11 > 0.0))
            throw std::runtime_error("log marginal: posterior scale not positive definite");
        double c0 = iv0 * prior.mu0[0] + st.sy;
        p.mu1_0 = c0 / p.a11;
        p.log_det_a = std::log(p.a11);
        p.log_det_v0 = std::log(v0);
        p.prior_quad = prior.mu0[0] * iv0 * prior.mu0[0];
        p.v1 = prior.rate + 0.5 * (st.syy + p.prior_quad - c0 * p.mu1_0);
    } else {
        double det_v0 = prior.V0[0][0] * prior.V0[1][1] - prior.V0[0][1] * prior.V0[1][0];
        if (!(det_v0 > 0.0))
            throw std::runtime_error("log marginal: V0 not positive definite");
        double i00 = prior.V0[1][1] / det_v0;
        double i01 = -prior.V0[0][1] / det_v0;
        double i11 = prior.V0[0][0] / det_v0;
        p.a11 = i00 + st.n;
        p.a12 = i01 + st.sx;
        p.a22 = i11 + st.sxx;
        double det_a = p.a11 * p.a22 - p.a12 * p.a12;
        if (!(det_a > 0.0) || !(p.a11 > 0.0))
            throw std::runtime_error("log marginal: posterior scale not positive definite");
        double c0 = i00 * prior.mu0[0] + i01 * prior.mu0[1] + st.sy;
        double c1 = i01 * prior.mu0[0] + i11 * prior.mu0[1] + st.sxy;
        p.mu1_0 = (p.a22 * c0 - p.a12 * c1) / det_a;
        p.mu1_1 = (-p.a12 * c0 + p.a11 * c1) / det_a;
        p.log_det_a = std::log(det_a);
        p.log_det_v0 = std::log(det_v0);
        p.prior_quad = prior.mu0[0] * (i00 * prior.mu0[0] + i01 * prior.mu0[1]) +
                       prior.mu0[1] * (i01 * prior.mu0[0] + i11 * prior.mu0[1]);
        p.v1 = prior.rate +
               0.5 * (st.syy + p.prior_quad - (c0 * p.mu1_0 + c1 * p.mu1_1));
    }
    if (!(p.v1 > 0.0)) p.v1 = std::numeric_limits<double>::min();
    return p;
}

}  // namespace

double log_marginal_from_stats(const SuffStats& st, int dim,
                               const ConjugatePrior& prior) {
    if (st.n == 0) return 0.0;
    Posterior p = posterior_terms(st, dim, prior);
    double u1 = prior.shape + 0.5 * st.n;
    return -0.5 * st.n * kLogTwoPi - 0.5 * (p.log_det_a + p.log_det_v0) +
           std::lgamma(u1) - std::lgamma(prior.shape) +
           prior.shape * std::log(prior.rate) - u1 * std::log(p.v1);
}

double log_marginal_likelihood(SegmentView seg, const ModelSpec& model,
                               std::optional<double> theta,
                               const ConjugatePrior& prior) {
    if (model.has_theta() != theta.has_value())
        throw std::invalid_argument("log_marginal_likelihood: theta required iff model has one");
    if (seg.len == 0) return 0.0;
    SuffStats st = segment_stats(seg, model.kind, theta.value_or(0.0));
    double out = log_marginal_from_stats(st, model.coef_count(), prior);
    if (!std::isfinite(out)) {
        std::ostringstream os;
        os << "log_marginal_likelihood: non-finite result (model=" << to_string(model.kind)
           << ", len=" << seg.len;
        if (theta) os << ", theta=" << *theta;
        os << ")";
        throw std::runtime_error(os.str());
    }
    return out;
}

double residual_variance_from_stats(const SuffStats& st, int dim, double floor) {
    if (st.n <= dim) return floor;
    double rss;
    if (dim == 1) {
        double b = st.sy / st.n;
        rss = st.syy - 2.0 * b * st.sy + b * b * st.n;
    } else {
        double det = st.n * st.sxx - st.sx * st.sx;
        if (std::fabs(det) < 1e-12 * std::max(1.0, st.n * st.sxx)) {
            double b = st.sy / st.n;  // collinear basis, fall back to mean fit
            rss = st.syy - 2.0 * b * st.sy + b * b * st.n;
        } else {
            double b0 = (st.sxx * st.sy - st.sx * st.sxy) / det;
            double b1 = (st.n * st.sxy - st.sx * st.sy) / det;
            rss = st.syy - 2.0 * (b0 * st.sy + b1 * st.sxy) +
                  (b0 * b0 * st.n + 2.0 * b0 * b1 * st.sx + b1 * b1 * st.sxx);
        }
    }
    double dof = std::max(1.0, st.n - dim);
    return std::max(floor, rss / dof);
}

double segment_residual_variance(SegmentView seg, const ModelSpec& model,
                                 std::optional<double> theta, double floor) {
    SuffStats st = segment_stats(seg, model.kind, theta.value_or(0.0));
    return residual_variance_from_stats(st, model.coef_count(), floor);
}

TruncatedMarginal log_marginal_truncated_from_stats(const SuffStats& st, int dim,
                                                    const ConjugatePrior& prior,
                                                    double sigma2_hat) {
    if (!prior.region)
        throw std::invalid_argument("log_marginal_truncated: prior has no region");
    if (!(sigma2_hat > 0.0))
        throw std::invalid_argument("log_marginal_truncated: sigma2_hat must be > 0");
    TruncatedMarginal out;
    double base = log_marginal_from_stats(st, dim, prior);
    if (prior.region->whole_space(dim)) {
        out.log_value = base;
        return out;
    }
    Posterior p = posterior_terms(st, dim, prior);

    double post_mean[2] = {p.mu1_0, p.mu1_1};
    double post_cov[4];
    if (dim == 1) {
        post_cov[0] = sigma2_hat / p.a11;
    } else {
        double det_a = p.a11 * p.a22 - p.a12 * p.a12;
        post_cov[0] = sigma2_hat * p.a22 / det_a;
        post_cov[1] = sigma2_hat * -p.a12 / det_a;
        post_cov[2] = post_cov[1];
        post_cov[3] = sigma2_hat * p.a11 / det_a;
    }
    double prior_mean[2] = {prior.mu0[0], prior.mu0[1]};
    double prior_cov[4] = {sigma2_hat * prior.V0[0][0], sigma2_hat * prior.V0[0][1],
                           sigma2_hat * prior.V0[1][0], sigma2_hat * prior.V0[1][1]};

    double num = norm_box_prob(dim, prior.region->lower.data(), prior.region->upper.data(),
                               post_mean, post_cov);
    double den = norm_box_prob(dim, prior.region->lower.data(), prior.region->upper.data(),
                               prior_mean, prior_cov);
    if (num <= 0.0 || den <= 0.0) {
        out.log_value = kNegInf;
        out.underflow = true;
        return out;
    }
    out.log_value = base + std::log(num) - std::log(den);
    return out;
}

TruncatedMarginal log_marginal_truncated(SegmentView seg, const ModelSpec& model,
                                         std::optional<double> theta,
                                         const ConjugatePrior& prior,
                                         double sigma2_hat) {
    if (model.has_theta() != theta.has_value())
        throw std::invalid_argument("log_marginal_truncated: theta required iff model has one");
    SuffStats st = segment_stats(seg, model.kind, theta.value_or(0.0));
    return log_marginal_truncated_from_stats(st, model.coef_count(), prior, sigma2_hat);
}

double eval_log_marginal(SegmentView seg, const ModelSpec& model,
                         std::optional<double> theta) {
    if (!model.coef_prior.region ||
        model.coef_prior.region->whole_space(model.coef_count())) {
        return log_marginal_likelihood(seg, model, theta, model.coef_prior);
    }
    double s2 = segment_residual_variance(seg, model, theta);
    return log_marginal_truncated(seg, model, theta, model.coef_prior, s2).log_value;
}

namespace {

double eval_from_stats_impl(const SuffStats& st, const ModelSpec& model) {
    const int dim = model.coef_count();
    if (!model.coef_prior.region || model.coef_prior.region->whole_space(dim))
        return log_marginal_from_stats(st, dim, model.coef_prior);
    double s2 = residual_variance_from_stats(st, dim);
    return log_marginal_truncated_from_stats(st, dim, model.coef_prior, s2).log_value;
}

}  // namespace

MarginalPair eval_log_marginal_with_prefix(SegmentView seg, const ModelSpec& model,
                                           std::optional<double> theta) {
    if (model.has_theta() != theta.has_value())
        throw std::invalid_argument("eval_log_marginal_with_prefix: theta mismatch");
    MarginalPair out{0.0, 0.0};
    if (seg.len == 0) return out;
    SegmentView prefix{seg.y, seg.len - 1};
    SuffStats st = segment_stats(prefix, model.kind, theta.value_or(0.0));
    out.log_prefix = seg.len > 1 ? eval_from_stats_impl(st, model) : 0.0;
    DesignRow row = design_row(model, seg.len, theta);
    st.add(seg.len, row.v[1], seg.y[seg.len - 1]);
    out.log_full = eval_from_stats_impl(st, model);
    return out;
}

namespace {

// d/dtheta of the full-segment log marginal, from the fused gradient sums.
double grad_log_marginal(const SuffStats& st, const GradStats& gs,
                         const ConjugatePrior& prior) {
    Posterior p = posterior_terms(st, 2, prior);
    double det_a = p.a11 * p.a22 - p.a12 * p.a12;
    // S' = [[0, sdx], [sdx, 2 sdxx]], c' = (0, sdxy)
    // d(log det A) = tr(A^-1 S')
    double tr = (-p.a12 * gs.sdx * 2.0 + p.a11 * 2.0 * gs.sdxx) / det_a;
    double s_mu = gs.sdx * p.mu1_1;  // (S' mu1)[0]
    double s_mu1 = gs.sdx * p.mu1_0 + 2.0 * gs.sdxx * p.mu1_1;
    double mu_s_mu = p.mu1_0 * s_mu + p.mu1_1 * s_mu1;
    double dv1 = -(gs.sdxy * p.mu1_1) + 0.5 * mu_s_mu;
    double u1 = prior.shape + 0.5 * st.n;
    return -0.5 * tr - u1 * dv1 / p.v1;
}

double one_step_grad(double theta, SegmentView seg, const ModelSpec& model,
                     const ConjugatePrior& prior) {
    GradStats g_full;
    SuffStats full = segment_stats(seg, model.kind, theta, &g_full);
    double grad = grad_log_marginal(full, g_full, prior);
    if (seg.len > 1) {
        GradStats g_pre;
        SegmentView prefix{seg.y, seg.len - 1};
        SuffStats pre = segment_stats(prefix, model.kind, theta, &g_pre);
        grad -= grad_log_marginal(pre, g_pre, prior);
    }
    return grad;
}

}  // namespace

namespace {

template <typename GradFn>
GradResult grad_with_curvature(double theta, const ModelSpec& model,
                               const GradFn& grad_at) {
    GradResult r;
    r.gradient = grad_at(theta);
    // curvature proxy: central difference of the analytic gradient
    double h = 1e-4 * std::max(1.0, std::fabs(theta));
    double lo = theta - h, hi = theta + h;
    if (model.kind == ModelKind::Periodic && lo <= 0.0) {
        lo = theta;
        h *= 0.5;
        hi = theta + 2.0 * h;
    }
    double g_hi = grad_at(hi);
    double g_lo = grad_at(lo);
    r.curvature = std::fabs((g_hi - g_lo) / (hi - lo));
    if (!std::isfinite(r.curvature)) r.curvature = 1.0;
    return r;
}

}  // namespace

GradResult grad_log_conditional(double theta, SegmentView seg,
                                const ModelSpec& model,
                                const ConjugatePrior& prior) {
    if (!model.has_theta())
        throw std::invalid_argument("grad_log_conditional: model has no theta");
    if (seg.len < 1)
        throw std::invalid_argument("grad_log_conditional: empty segment");
    return grad_with_curvature(theta, model, [&](double th) {
        return one_step_grad(th, seg, model, prior);
    });
}

GradResult grad_log_marginal_segment(double theta, SegmentView seg,
                                     const ModelSpec& model,
                                     const ConjugatePrior& prior) {
    if (!model.has_theta())
        throw std::invalid_argument("grad_log_marginal_segment: model has no theta");
    if (seg.len < 1)
        throw std::invalid_argument("grad_log_marginal_segment: empty segment");
    return grad_with_curvature(theta, model, [&](double th) {
        GradStats gs;
        SuffStats st = segment_stats(seg, model.kind, th, &gs);
        return grad_log_marginal(st, gs, prior);
    });
}

DrydownTransforms drydown_transforms(double theta, double sampling_interval_hours) {
    DrydownTransforms d;
    d.decay_rate = std::exp(-std::exp(theta));
    d.efold_samples = std::exp(-theta);
    d.efold_days = d.efold_samples * sampling_interval_hours / 24.0;
    return d;
}

}  // namespace bocpd
