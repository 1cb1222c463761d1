#include "bocpd/math_util.hpp"

#include <algorithm>
#include <cmath>

namespace bocpd {

double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf || std::isinf(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double exp_normalize(std::span<const double> log_w, std::span<double> out) {
    double m = kNegInf;
    for (double x : log_w) m = std::max(m, x);
    if (m == kNegInf) {
        std::fill(out.begin(), out.end(), 0.0);
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        out[i] = std::exp(log_w[i] - m);
        s += out[i];
    }
    for (auto& x : out) x /= s;
    return s;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_log_cdf(double x) {
    if (x > -37.0) return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
    // asymptotic expansion for the deep lower tail where erfc underflows
    double x2 = x * x;
    double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - 0.5 * kLogTwoPi + std::log(series);
}

double norm_quantile(double p) {
    if (p <= 0.0) return kNegInf;
    if (p >= 1.0) return kPosInf;
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement
    double e = norm_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

// Genz's algorithm for the bivariate normal upper-quadrant probability.
double bvn_upper(double h, double k, double rho) {
    if (std::isinf(h) || std::isinf(k)) {
        if (h == kPosInf || k == kPosInf) return 0.0;
        if (h == kNegInf && k == kNegInf) return 1.0;
        if (h == kNegInf) return norm_cdf(-k);
        return norm_cdf(-h);
    }
    static const double x6[] = {0.04691007703066800, 0.23076534494715845,
                                0.50000000000000000, 0.76923465505284155,
                                0.95308992296933200};
    // Gauss-Legendre nodes/weights on (-1, 1)
    static const double xl6[] = {-0.9324695142031521, -0.6612093864662645,
                                 -0.2386191860831969, 0.2386191860831969,
                                 0.6612093864662645,  0.9324695142031521};
    static const double wl6[] = {0.1713244923791704, 0.3607615730481386,
                                 0.4679139345726910, 0.4679139345726910,
                                 0.3607615730481386, 0.1713244923791704};
    static const double xl12[] = {-0.9815606342467192, -0.9041172563704749,
                                  -0.7699026741943047, -0.5873179542866175,
                                  -0.3678314989981802, -0.1252334085114689,
                                  0.1252334085114689,  0.3678314989981802,
                                  0.5873179542866175,  0.7699026741943047,
                                  0.9041172563704749,  0.9815606342467192};
    static const double wl12[] = {0.0471753363865118, 0.1069393259953184,
                                  0.1600783285433462, 0.2031674267230659,
                                  0.2334925365383548, 0.2491470458134028,
                                  0.2491470458134028, 0.2334925365383548,
                                  0.2031674267230659, 0.1600783285433462,
                                  0.1069393259953184, 0.0471753363865118};
    static const double xl20[] = {
        -0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
        -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
        -0.5108670019508271, -0.3737060887154195, -0.2277858511416451,
        -0.0765265211334973, 0.0765265211334973,  0.2277858511416451,
        0.3737060887154195,  0.5108670019508271,  0.6360536807265150,
        0.7463319064601508,  0.8391169718222188,  0.9122344282513259,
        0.9639719272779138,  0.9931285991850949};
    static const double wl20[] = {
        0.0176140071391521, 0.0406014298003869, 0.0626720483341091,
        0.0832767415767048, 0.1019301198172404, 0.1181945319615184,
        0.1316886384491766, 0.1420961093183820, 0.1491729864726037,
        0.1527533871307258, 0.1527533871307258, 0.1491729864726037,
        0.1420961093183820, 0.1316886384491766, 0.1181945319615184,
        0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
        0.0406014298003869, 0.0176140071391521};
    (void)x6;

    const double* xg;
    const double* wg;
    int ng;
    double ar = std::fabs(rho);
    if (ar < 0.3) {
        xg = xl6; wg = wl6; ng = 6;
    } else if (ar < 0.75) {
        xg = xl12; wg = wl12; ng = 12;
    } else {
        xg = xl20; wg = wl20; ng = 20;
    }

    double bvn = 0.0;
    if (ar < 0.925) {
        double hk = h * k, hs = (h * h + k * k) / 2.0;
        double asr = std::asin(rho);
        for (int i = 0; i < ng; ++i) {
            double sn = std::sin(asr * (xg[i] + 1.0) / 2.0);
            bvn += wg[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        bvn = bvn * asr / (4.0 * M_PI) + norm_cdf(-h) * norm_cdf(-k);
    } else {
        double h2 = h, k2 = k;
        if (rho < 0.0) { k2 = -k2; }
        double hk = h2 * k2;
        if (ar < 1.0) {
            double as = (1.0 - rho) * (1.0 + rho);
            double a = std::sqrt(as);
            double bs = (h2 - k2) * (h2 - k2);
            double cc = (4.0 - hk) / 8.0;
            double dd = (12.0 - hk) / 16.0;
            double asr = -(bs / as + hk) / 2.0;
            if (asr > -100.0) {
                bvn = a * std::exp(asr) *
                      (1.0 - cc * (bs - as) * (1.0 - dd * bs / 5.0) / 3.0 +
                       cc * dd * as * as / 5.0);
            }
            if (-hk < 100.0) {
                double b = std::sqrt(bs);
                bvn -= std::exp(-hk / 2.0) * std::sqrt(2.0 * M_PI) * norm_cdf(-b / a) *
                       b * (1.0 - cc * bs * (1.0 - dd * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for (int i = 0; i < ng; ++i) {
                double xs = (a * (xg[i] + 1.0)) * (a * (xg[i] + 1.0));
                double rs = std::sqrt(1.0 - xs);
                double asr2 = -(bs / xs + hk) / 2.0;
                if (asr2 > -100.0) {
                    bvn += a * wg[i] * std::exp(asr2) *
                           (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                            (1.0 + cc * xs * (1.0 + dd * xs)));
                }
            }
            bvn = -bvn / (2.0 * M_PI);
        }
        if (rho > 0.0) {
            bvn += norm_cdf(-std::max(h2, k2));
        } else {
            bvn = -bvn;
            if (k2 > h2) bvn += norm_cdf(k2) - norm_cdf(h2);
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

namespace {

// P(X <= x, Y <= y) with correlation rho
double bvn_cdf(double x, double y, double rho) {
    if (x == kNegInf || y == kNegInf) return 0.0;
    if (x == kPosInf && y == kPosInf) return 1.0;
    if (x == kPosInf) return norm_cdf(y);
    if (y == kPosInf) return norm_cdf(x);
    return bvn_upper(-x, -y, rho);
}

}  // namespace

double norm_box_prob(int dim, const double* lo, const double* hi,
                     const double* mean, const double* cov2x2) {
    if (dim == 1) {
        double sd = std::sqrt(cov2x2[0]);
        double a = (lo[0] - mean[0]) / sd;
        double b = (hi[0] - mean[0]) / sd;
        double pa = std::isinf(a) ? (a < 0 ? 0.0 : 1.0) : norm_cdf(a);
        double pb = std::isinf(b) ? (b < 0 ? 0.0 : 1.0) : norm_cdf(b);
        return std::max(0.0, pb - pa);
    }
    double s1 = std::sqrt(cov2x2[0]);
    double s2 = std::sqrt(cov2x2[3]);
    double rho = cov2x2[1] / (s1 * s2);
    rho = std::clamp(rho, -1.0, 1.0);
    auto std1 = [&](double v) { return std::isinf(v) ? v : (v - mean[0]) / s1; };
    auto std2 = [&](double v) { return std::isinf(v) ? v : (v - mean[1]) / s2; };
    double a1 = std1(lo[0]), b1 = std1(hi[0]);
    double a2 = std2(lo[1]), b2 = std2(hi[1]);
    double p = bvn_cdf(b1, b2, rho) - bvn_cdf(a1, b2, rho) - bvn_cdf(b1, a2, rho) +
               bvn_cdf(a1, a2, rho);
    return std::clamp(p, 0.0, 1.0);
}

double quantile_type7_sorted(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n == 1) return sorted[0];
    double h = (static_cast<double>(n) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t s = splitmix64(master_seed ^ splitmix64(stream_id));
    return std::mt19937_64(s);
}

}  // namespace bocpd
