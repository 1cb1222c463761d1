#pragma once

#include <stdexcept>
#include <vector>

#include "bocpd/math_util.hpp"

namespace bocpd {

// Run-length distribution g(l) driving the stay/change transition of the
// last-changepoint chain. Geometric or an explicit table.
class RunLength {
  public:
    static RunLength geometric(double hazard);
    static RunLength table(std::vector<double> g);

    // log g(l), l >= 1
    double log_g(int l) const;
    // log(1 - G(l)), G(l) = sum_{j<=l} g(j); G(0) = 0
    double log_survival(int l) const;

    struct Transition {
        double stay;
        double change;
    };
    // Pr(C_{t+1} = s | C_t = s) and Pr(C_{t+1} = t | C_t = s) given s < t.
    Transition transition_prob(int s, int t) const;
    double log_stay(int s, int t) const;
    double log_change(int s, int t) const;

    bool is_geometric() const { return geometric_; }
    double hazard() const { return hazard_; }

  private:
    RunLength() = default;
    bool geometric_ = true;
    double hazard_ = 0.005;
    double log_hazard_ = 0.0;
    double log_keep_ = 0.0;  // log(1 - hazard)
    std::vector<double> log_g_;
    std::vector<double> log_surv_;  // log(1 - G(l)), index l
};

}  // namespace bocpd
