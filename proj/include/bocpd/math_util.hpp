#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace bocpd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

// log(e^a + e^b), safe for -inf arguments
inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

double log_sum_exp(std::span<const double> v);

// Exponentiates shifted log-weights into out; returns the linear-scale sum.
double exp_normalize(std::span<const double> log_w, std::span<double> out);

double norm_cdf(double x);
double norm_log_cdf(double x);
// Inverse standard normal CDF (Acklam rational approximation + one refinement).
double norm_quantile(double p);

// P(X > h, Y > k) for standard bivariate normal with correlation rho.
double bvn_upper(double h, double k, double rho);

// Mass of the axis-aligned box [lo, hi] under N(mean, cov) in 1 or 2 dims.
// Bounds may be +-inf. Returns a value in [0, 1].
double norm_box_prob(int dim,
                     const double* lo, const double* hi,
                     const double* mean, const double* cov2x2);

// Linear-interpolation quantile (type 7) of a sorted range, p in [0,1].
double quantile_type7_sorted(std::span<const double> sorted, double p);

// Deterministic per-entity RNG streams derived from a master seed.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream_id);

}  // namespace bocpd
