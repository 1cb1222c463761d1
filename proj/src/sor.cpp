#include "bocpd/sor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bocpd {

double sor_threshold(const std::vector<double>& weights, int cap) {
    double total = 0.0, wmax = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("sor: negative weight");
        total += w;
        wmax = std::max(wmax, w);
    }
    if (!(total > 0.0)) throw std::invalid_argument("sor: all weights zero");
    if (cap < 1) throw std::invalid_argument("sor: cap must be >= 1");

    auto h = [&](double alpha) {
        double s = 0.0;
        for (double w : weights) s += std::min(1.0, w / alpha);
        return s;
    };
    double lo = wmax * 1e-18, hi = std::max(total, wmax);
    // ensure the bracket straddles cap
    while (h(lo) < cap) lo *= 0.5;
    while (h(hi) > cap) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double v = h(mid);
        if (std::fabs(v - static_cast<double>(cap)) < 1e-12) return mid;
        if (v > cap)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16 * hi) break;
    }
    return 0.5 * (lo + hi);
}

SorResult sor_resample(const std::vector<SorItem>& items, int cap,
                       std::mt19937_64& rng) {
    SorResult out;
    std::vector<const SorItem*> pool;
    int exempt_count = 0;
    for (const auto& it : items) {
        if (it.exempt) {
            out.kept.push_back(it.index);
            out.kept_weights.push_back(it.weight);
            ++exempt_count;
        } else {
            pool.push_back(&it);
        }
    }
    int pool_cap = cap - exempt_count;
    if (pool_cap <= 0) {
        // keep the exempt items only; nothing left to resample
        out.protected_overflow = true;
        return out;
    }
    if (static_cast<int>(pool.size()) <= pool_cap) {
        for (const auto* it : pool) {
            out.kept.push_back(it->index);
            out.kept_weights.push_back(it->weight);
        }
        return out;
    }

    std::vector<double> w(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) w[i] = pool[i]->weight;
    double alpha = sor_threshold(w, pool_cap);
    out.alpha = alpha;

    std::vector<std::size_t> small;
    int above = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (w[i] >= alpha) {
            out.kept.push_back(pool[i]->index);
            out.kept_weights.push_back(w[i]);
            ++above;
        } else {
            small.push_back(i);
        }
    }
    int need = pool_cap - above;
    if (need <= 0 || small.empty()) return out;

    // systematic stratified draw over the small weights: every selected
    // survivor carries weight alpha, E[count_i] = w_i / alpha
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng) * alpha;
    double cum = 0.0;
    int picked = 0;
    std::vector<bool> taken(small.size(), false);
    for (std::size_t j = 0; j < small.size(); ++j) {
        cum += w[small[j]];
        if (cum > u) {
            taken[j] = true;
            u += alpha;
            ++picked;
            if (picked == need) break;
        }
    }
    // bisection tolerance can leave the final stratum point past the total
    // small mass; top up from the tail so exactly `need` survive
    for (std::size_t j = small.size(); picked < need && j-- > 0;) {
        if (!taken[j]) {
            taken[j] = true;
            ++picked;
        }
    }
    for (std::size_t j = 0; j < small.size(); ++j) {
        if (taken[j]) {
            out.kept.push_back(pool[small[j]]->index);
            out.kept_weights.push_back(alpha);
        }
    }
    return out;
}

}  // namespace bocpd
