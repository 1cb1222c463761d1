#include "bocpd/run_length.hpp"

#include <cmath>

namespace bocpd {

RunLength RunLength::geometric(double hazard) {
    if (!(hazard > 0.0) || !(hazard <= 1.0))
        throw std::invalid_argument("geometric run length: hazard must be in (0,1]");
    RunLength rl;
    rl.geometric_ = true;
    rl.hazard_ = hazard;
    rl.log_hazard_ = std::log(hazard);
    rl.log_keep_ = hazard < 1.0 ? std::log1p(-hazard) : kNegInf;
    return rl;
}

RunLength RunLength::table(std::vector<double> g) {
    if (g.empty()) throw std::invalid_argument("run length table: empty");
    double total = 0.0;
    for (double x : g) {
        if (x < 0.0) throw std::invalid_argument("run length table: negative mass");
        total += x;
    }
    if (!(total > 0.0) || total > 1.0 + 1e-12)
        throw std::invalid_argument("run length table: mass must be in (0,1]");
    RunLength rl;
    rl.geometric_ = false;
    rl.log_g_.resize(g.size());
    rl.log_surv_.resize(g.size() + 1);
    rl.log_surv_[0] = 0.0;
    double cum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        rl.log_g_[i] = g[i] > 0.0 ? std::log(g[i]) : kNegInf;
        cum += g[i];
        rl.log_surv_[i + 1] = cum < 1.0 ? std::log1p(-cum) : kNegInf;
    }
    return rl;
}

double RunLength::log_g(int l) const {
    if (l < 1) return kNegInf;
    if (geometric_) return l == 1 ? log_hazard_ : log_hazard_ + (l - 1) * log_keep_;
    if (l > static_cast<int>(log_g_.size())) return kNegInf;
    return log_g_[l - 1];
}

double RunLength::log_survival(int l) const {
    if (l <= 0) return 0.0;
    if (geometric_) return l * log_keep_;
    if (l >= static_cast<int>(log_surv_.size())) return log_surv_.back();
    return log_surv_[l];
}

RunLength::Transition RunLength::transition_prob(int s, int t) const {
    if (!(s < t)) throw std::invalid_argument("transition_prob: requires s < t");
    double denom = log_survival(t - s - 1);
    if (denom == kNegInf)
        throw std::domain_error("transition_prob: run-length support exhausted (G = 1)");
    Transition tr;
    tr.stay = std::exp(log_survival(t - s) - denom);
    tr.change = std::exp(log_g(t - s) - denom);
    return tr;
}

double RunLength::log_stay(int s, int t) const {
    double denom = log_survival(t - s - 1);
    if (denom == kNegInf)
        throw std::domain_error("log_stay: run-length support exhausted (G = 1)");
    return log_survival(t - s) - denom;
}

double RunLength::log_change(int s, int t) const {
    double denom = log_survival(t - s - 1);
    if (denom == kNegInf)
        throw std::domain_error("log_change: run-length support exhausted (G = 1)");
    return log_g(t - s) - denom;
}

}  // namespace bocpd
