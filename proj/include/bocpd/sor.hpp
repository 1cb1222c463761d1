#pragma once

#include <random>
#include <vector>

namespace bocpd {

struct SorItem {
    int index;      // caller's identifier
    double weight;  // nonnegative
    bool exempt;    // protected from removal (does not consume the cap)
};

struct SorResult {
    std::vector<int> kept;             // indices that survive
    std::vector<double> kept_weights;  // adjusted weights, aligned with kept
    double alpha = 0.0;
    bool protected_overflow = false;   // more exempt items than the cap
};

// Stratified optimal resampling: solve sum_i min{1, w_i/alpha} = cap for
// alpha, keep every item with w >= alpha at its exact weight, and
// stratified-sample the remainder, each survivor taking weight alpha.
// Exempt items always survive with their weight; the cap then applies to the
// non-exempt pool. No-op when the pool does not exceed the cap.
SorResult sor_resample(const std::vector<SorItem>& items, int cap,
                       std::mt19937_64& rng);

// Threshold solver exposed for diagnostics/tests: bisection on
// h(alpha) = sum min{1, w/alpha} - cap, tolerance 1e-12.
double sor_threshold(const std::vector<double>& weights, int cap);

}  // namespace bocpd
