#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "bocpd/run_length.hpp"
#include "bocpd/sor.hpp"

using namespace bocpd;
using Catch::Approx;

TEST_CASE("geometric transition probability is the constant hazard") {
    for (double eta : {0.005, 0.01}) {
        RunLength rl = RunLength::geometric(eta);
        for (auto [s, t] : {std::pair{0, 5}, {3, 100}, {17, 18}}) {
            auto tr = rl.transition_prob(s, t);
            CHECK(tr.change == Approx(eta).epsilon(1e-12));
            CHECK(tr.stay == Approx(1.0 - eta).epsilon(1e-12));
            CHECK(tr.stay + tr.change == Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("run length concentrated at one forces a change") {
    RunLength rl = RunLength::geometric(1.0);
    auto tr = rl.transition_prob(4, 5);  // run length 1, survival still positive
    CHECK(tr.change == Approx(1.0));
    // longer runs have exhausted the support
    CHECK_THROWS_AS(rl.transition_prob(3, 5), std::domain_error);
}

TEST_CASE("table run length matches the geometric it tabulates") {
    const double eta = 0.02;
    std::vector<double> g(400);
    for (int l = 1; l <= 400; ++l) g[l - 1] = eta * std::pow(1.0 - eta, l - 1);
    RunLength tab = RunLength::table(g);
    RunLength geo = RunLength::geometric(eta);
    for (int l : {1, 2, 17, 350}) {
        CHECK(tab.log_g(l) == Approx(geo.log_g(l)).epsilon(1e-10));
        CHECK(tab.log_survival(l) == Approx(geo.log_survival(l)).epsilon(1e-8));
    }
    auto tr = tab.transition_prob(10, 30);
    CHECK(tr.change == Approx(eta).epsilon(1e-8));
}

TEST_CASE("table run length rejects bad mass") {
    CHECK_THROWS_AS(RunLength::table({}), std::invalid_argument);
    CHECK_THROWS_AS(RunLength::table({0.5, 0.7}), std::invalid_argument);
    CHECK_THROWS_AS(RunLength::table({0.5, -0.1}), std::invalid_argument);
}

TEST_CASE("sor threshold on the worked example") {
    std::vector<double> w{0.5, 0.3, 0.1, 0.06, 0.04};
    double alpha = sor_threshold(w, 3);
    // two weights above the threshold, the remaining mass 0.2 spread over one slot
    CHECK(alpha == Approx(0.2).epsilon(1e-9));
}

namespace {

// exact solver: try every split point of the sorted weights
double sor_threshold_exact(std::vector<double> w, int cap) {
    std::sort(w.begin(), w.end());
    int n = static_cast<int>(w.size());
    double prefix = 0.0;
    for (int k = 1; k <= n; ++k) {
        prefix += w[k - 1];
        int above = n - k;
        if (above > cap) continue;
        double alpha = prefix / (cap - above);
        bool ok = w[k - 1] < alpha && (k == n || alpha <= w[k]);
        if (ok) return alpha;
    }
    return w.back();
}

}  // namespace

TEST_CASE("sor threshold agrees with the exact split-point solver") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        int n = 5 + static_cast<int>(unif(rng) * 60);
        int cap = 1 + static_cast<int>(unif(rng) * (n - 1));
        std::vector<double> w(n);
        double total = 0.0;
        for (auto& x : w) {
            x = std::pow(unif(rng), 3.0) + 1e-6;
            total += x;
        }
        for (auto& x : w) x /= total;
        double got = sor_threshold(w, cap);
        double want = sor_threshold_exact(w, cap);
        CHECK(got == Approx(want).epsilon(1e-7));
    }
}

TEST_CASE("sor keeps exactly the cap and retains heavy weights bit-identically") {
    std::vector<SorItem> items;
    std::vector<double> w{0.5, 0.3, 0.1, 0.06, 0.04};
    for (int i = 0; i < 5; ++i) items.push_back({i, w[i], false});
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        SorResult r = sor_resample(items, 3, rng);
        REQUIRE(r.kept.size() == 3);
        bool saw0 = false, saw1 = false;
        for (std::size_t k = 0; k < r.kept.size(); ++k) {
            if (r.kept[k] == 0) {
                saw0 = true;
                CHECK(r.kept_weights[k] == 0.5);  // exact, not approximate
            }
            if (r.kept[k] == 1) {
                saw1 = true;
                CHECK(r.kept_weights[k] == 0.3);
            }
            if (r.kept[k] >= 2) CHECK(r.kept_weights[k] == Approx(0.2).epsilon(1e-9));
        }
        CHECK(saw0);
        CHECK(saw1);
    }
}

TEST_CASE("dominant weight is always retained") {
    std::vector<SorItem> items{{0, 0.99, false}};
    for (int i = 1; i < 12; ++i) items.push_back({i, 0.01 / 11, false});
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 100; ++rep) {
        SorResult r = sor_resample(items, 2, rng);
        REQUIRE(r.kept.size() == 2);
        CHECK(std::find(r.kept.begin(), r.kept.end(), 0) != r.kept.end());
    }
}

TEST_CASE("sor resampling is unbiased") {
    // every candidate's expected post-resampling weight equals its weight
    std::mt19937_64 rng(5);
    std::vector<SorItem> items;
    std::mt19937_64 wrng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 25, cap = 10, reps = 20000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double w = std::pow(unif(wrng), 2.5) + 1e-4;
        items.push_back({i, w, false});
        total += w;
    }
    for (auto& it : items) it.weight /= total;

    std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
    for (int rep = 0; rep < reps; ++rep) {
        SorResult r = sor_resample(items, cap, rng);
        REQUIRE(static_cast<int>(r.kept.size()) == cap);
        std::vector<double> post(n, 0.0);
        for (std::size_t k = 0; k < r.kept.size(); ++k)
            post[r.kept[k]] = r.kept_weights[k];
        for (int i = 0; i < n; ++i) {
            sum[i] += post[i];
            sumsq[i] += post[i] * post[i];
        }
    }
    for (int i = 0; i < n; ++i) {
        double mean = sum[i] / reps;
        double var = sumsq[i] / reps - mean * mean;
        double se = std::sqrt(std::max(var, 1e-20) / reps);
        INFO("candidate " << i << " w=" << items[i].weight << " mean=" << mean);
        CHECK(std::fabs(mean - items[i].weight) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("equal weights survive uniformly with preserved expectation") {
    const int n = 24, cap = 8, reps = 20000;
    std::vector<SorItem> items;
    for (int i = 0; i < n; ++i) items.push_back({i, 1.0 / n, false});
    std::mt19937_64 rng(6);
    std::vector<int> count(n, 0);
    for (int rep = 0; rep < reps; ++rep) {
        SorResult r = sor_resample(items, cap, rng);
        REQUIRE(static_cast<int>(r.kept.size()) == cap);
        for (int idx : r.kept) ++count[idx];
    }
    double expected = static_cast<double>(cap) / n * reps;
    double se = std::sqrt(reps * (double)cap / n * (1.0 - (double)cap / n));
    for (int i = 0; i < n; ++i)
        CHECK(std::fabs(count[i] - expected) < 4.0 * se);
}

TEST_CASE("protected candidates are exempt from the cap") {
    std::vector<SorItem> items;
    for (int i = 0; i < 20; ++i) items.push_back({i, 0.05, i < 4});
    std::mt19937_64 rng(7);
    SorResult r = sor_resample(items, 10, rng);
    REQUIRE(r.kept.size() == 10);
    for (int i = 0; i < 4; ++i)
        CHECK(std::find(r.kept.begin(), r.kept.end(), i) != r.kept.end());

    // more protected than the cap: keep the protected set only, with a flag
    for (auto& it : items) it.exempt = it.index < 12;
    SorResult r2 = sor_resample(items, 10, rng);
    CHECK(r2.protected_overflow);
    CHECK(r2.kept.size() == 12);
}

TEST_CASE("no-op when the pool does not exceed the cap") {
    std::vector<SorItem> items{{0, 0.6, false}, {1, 0.4, false}};
    std::mt19937_64 rng(9);
    SorResult r = sor_resample(items, 5, rng);
    REQUIRE(r.kept.size() == 2);
    CHECK(r.kept_weights[0] == 0.6);
    CHECK(r.kept_weights[1] == 0.4);
}
