#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bocpd/math_util.hpp"

using namespace bocpd;
using Catch::Approx;

TEST_CASE("log_add_exp handles -inf and ordering") {
    CHECK(log_add_exp(kNegInf, kNegInf) == kNegInf);
    CHECK(log_add_exp(kNegInf, 1.5) == 1.5);
    CHECK(log_add_exp(0.0, 0.0) == Approx(std::log(2.0)));
    CHECK(log_add_exp(-1000.0, 0.0) == Approx(0.0).margin(1e-12));
}

TEST_CASE("log_sum_exp matches direct summation") {
    std::vector<double> v{-3.0, 0.5, -1.2, 2.0};
    double direct = 0.0;
    for (double x : v) direct += std::exp(x);
    CHECK(log_sum_exp(v) == Approx(std::log(direct)).epsilon(1e-14));
    std::vector<double> empty;
    CHECK(log_sum_exp(empty) == kNegInf);
}

TEST_CASE("exp_normalize produces a distribution") {
    std::vector<double> lw{-700.0, -701.0, -705.0};
    std::vector<double> w(3);
    exp_normalize(lw, w);
    CHECK(w[0] + w[1] + w[2] == Approx(1.0).epsilon(1e-14));
    CHECK(w[0] > w[1]);
    CHECK(w[1] > w[2]);
}

TEST_CASE("norm_quantile inverts norm_cdf") {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        double x = norm_quantile(p);
        CHECK(norm_cdf(x) == Approx(p).epsilon(1e-9).margin(1e-13));
    }
    CHECK(norm_quantile(0.5) == Approx(0.0).margin(1e-12));
}

TEST_CASE("norm_log_cdf deep tail stays finite and monotone") {
    double prev = kNegInf;
    for (double x = -60.0; x <= 0.0; x += 5.0) {
        double v = norm_log_cdf(x);
        CHECK(std::isfinite(v));
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("bvn_upper special cases") {
    // independent: P(X>h, Y>k) = Phi(-h) Phi(-k)
    CHECK(bvn_upper(0.3, -0.7, 0.0) ==
          Approx(norm_cdf(-0.3) * norm_cdf(0.7)).epsilon(1e-12));
    // perfectly correlated: P(X>h, X>k) = Phi(-max(h,k))
    CHECK(bvn_upper(0.5, -0.2, 1.0 - 1e-15) == Approx(norm_cdf(-0.5)).epsilon(1e-7));
    // infinities collapse to the marginal
    CHECK(bvn_upper(kNegInf, 0.4, 0.6) == Approx(norm_cdf(-0.4)).epsilon(1e-12));
    CHECK(bvn_upper(kPosInf, 0.4, 0.6) == 0.0);
    // orthant mass: P(X>0, Y>0) = 1/4 + asin(rho) / (2 pi)
    CHECK(bvn_upper(0.0, 0.0, 0.5) ==
          Approx(0.25 + std::asin(0.5) / (2.0 * M_PI)).epsilon(1e-10));
    CHECK(bvn_upper(0.0, 0.0, -0.5) ==
          Approx(0.25 + std::asin(-0.5) / (2.0 * M_PI)).epsilon(1e-10));
}

TEST_CASE("bvn box probability matches Monte Carlo") {
    double mean[2] = {0.3, -0.2};
    double cov[4] = {1.2, 0.7, 0.7, 0.9};
    double lo[2] = {-0.5, -1.0};
    double hi[2] = {1.5, 0.4};
    double p = norm_box_prob(2, lo, hi, mean, cov);

    std::mt19937_64 rng(123);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double l00 = std::sqrt(cov[0]);
    double l10 = cov[1] / l00;
    double l11 = std::sqrt(cov[3] - l10 * l10);
    int inside = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        double z0 = gauss(rng), z1 = gauss(rng);
        double x = mean[0] + l00 * z0;
        double y = mean[1] + l10 * z0 + l11 * z1;
        if (x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1]) ++inside;
    }
    double phat = static_cast<double>(inside) / n;
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(phat - p) < 4.0 * se + 1e-6);
}

TEST_CASE("half-infinite box under a 1-d normal") {
    double mean = 0.0, cov = 2.5;
    double lo = 0.0, hi = kPosInf;
    CHECK(norm_box_prob(1, &lo, &hi, &mean, &cov) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("quantile type 7 matches hand computation on five values") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0, 10.0};
    CHECK(quantile_type7_sorted(v, 0.5) == Approx(3.0));
    CHECK(quantile_type7_sorted(v, 0.25) == Approx(2.0));
    CHECK(quantile_type7_sorted(v, 0.75) == Approx(4.0));
    // h = 4 * 0.1 = 0.4 -> 1 + 0.4 * (2 - 1)
    CHECK(quantile_type7_sorted(v, 0.1) == Approx(1.4));
    CHECK(quantile_type7_sorted(v, 1.0) == Approx(10.0));
    std::vector<double> one{7.0};
    CHECK(quantile_type7_sorted(one, 0.33) == Approx(7.0));
}

TEST_CASE("rng streams are deterministic and distinct") {
    auto a1 = make_stream(42, 7);
    auto a2 = make_stream(42, 7);
    auto b = make_stream(42, 8);
    CHECK(a1() == a2());
    CHECK(a1() != b());
}
