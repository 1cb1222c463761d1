#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bocpd/model.hpp"
#include "bocpd/online_gradient.hpp"
#include "bocpd/particle_filter.hpp"
#include "bocpd/quadrature.hpp"
#include "bocpd/run_length.hpp"
#include "bocpd/sor.hpp"

namespace bocpd {

enum class Extension { ParticleFilter, OnlineGradient, NumericReference };

std::string to_string(Extension e);
Extension extension_from_string(const std::string& s);

struct PfOptions {
    int particles = 1000;
    double shrinkage_a = 0.98;
    PfResampleScheme scheme = PfResampleScheme::Multinomial;
};

struct OgOptions {
    OgOrder order = OgOrder::Second;
    OgGradientTarget gradient_target = OgGradientTarget::FullSegment;
    double r_eps = 1e-6;
    double curvature_floor = 1e-4;
};

struct CandidateCap {
    bool enabled = true;
    int high_water = 80;
    int cap = 40;
};

struct EngineConfig {
    std::vector<ModelSpec> models;
    RunLength run_length = RunLength::geometric(0.005);
    int min_segment_length = 2;  // d
    Extension extension = Extension::ParticleFilter;
    PfOptions pf;
    OgOptions og;
    QuadOptions quadrature;
    CandidateCap cap;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency

    void validate() const;
};

// Sequential estimator of one candidate's difficult parameter.
class ThetaEstimator {
  public:
    virtual ~ThetaEstimator() = default;
    // State initialisation on the creation segment; returns log L(s, t, m*).
    virtual double init(SegmentView seg) = 0;
    // Marginal of the creation prefix (newest observation removed) under the
    // freshly initialised state; log 1 = 0 for an empty prefix.
    virtual double init_prefix(SegmentView prefix) = 0;
    // Advance with the newest observation in seg; returns log L(s, t+1, m*).
    virtual double step(SegmentView seg) = 0;
    virtual ThetaSummary summary() const = 0;
};

struct CandidateState {
    int start = 0;  // s: segment is y_{(s+1):t}
    int created_at = 0;
    int protected_until = 0;
    double log_p_smap = 0.0;  // log P_s^MAP frozen at creation
    std::vector<double> log_marg;
    std::vector<double> log_marg_prev;
    double log_mix = 0.0;
    double log_mix_prev = 0.0;
    double log_w = 0.0;
    double log_filter = 0.0;
    std::vector<SuffStats> stats;  // per model, used by non-theta kinds
    std::vector<std::unique_ptr<ThetaEstimator>> theta;  // per model, null if none
    std::vector<ThetaSummary> last_summary;
    bool dead = false;
    bool quad_divergence = false;
    std::string fail_reason;
};

// log W_{t}^{(s)}: one-step mixture predictive of the candidate.
double candidate_log_weight(const CandidateState& cand);

struct StepRecord {
    int t = 0;
    std::vector<int> starts;
    std::vector<double> log_filter;       // aligned with starts
    std::vector<double> log_p_entries;    // row-major starts x models, P_t(s,m)
    double log_p_map = kNegInf;           // P_t^MAP
    int back_start = -1;
    int back_model = -1;                  // 0-based model index
    std::vector<ThetaSummary> theta_summary;  // row-major starts x models
};

class FilterHistory {
  public:
    FilterHistory() = default;
    FilterHistory(int n, int d) : n_(n), d_(d) {}
    int n() const { return n_; }
    int min_segment() const { return d_; }
    bool has(int t) const {
        return t >= d_ && t - d_ < static_cast<int>(records_.size());
    }
    const StepRecord& at(int t) const;
    void push(StepRecord rec) { records_.push_back(std::move(rec)); }
    int model_count() const { return models_; }
    void set_model_count(int m) { models_ = m; }

  private:
    int n_ = 0, d_ = 1, models_ = 0;
    std::vector<StepRecord> records_;
};

struct QuadratureDivergence : std::runtime_error {
    QuadratureDivergence(int t, int s)
        : std::runtime_error("numeric reference: quadrature failed to converge at t=" +
                             std::to_string(t) + ", candidate s=" + std::to_string(s)),
          time(t), candidate(s) {}
    int time;
    int candidate;
};

// Forward filtering over last-changepoint candidates.
class Filter {
  public:
    Filter(EngineConfig config, std::vector<double> series);

    // Runs the recursion end to end. Throws QuadratureDivergence for the
    // numeric-reference extension when an integral fails to converge.
    void run();

    const FilterHistory& history() const { return history_; }
    const std::vector<double>& series() const { return series_; }
    const EngineConfig& config() const { return config_; }
    const std::vector<CandidateState>& candidates() const { return candidates_; }

  private:
    void init_first_candidate();
    void advance(int t);  // one recursion step to time t
    CandidateState make_candidate(int s, int t);
    std::unique_ptr<ThetaEstimator> make_estimator(const ModelSpec& model, int s);
    void update_candidate(CandidateState& cand, int t);
    void refresh_mixture(CandidateState& cand);
    void record(int t);
    void resample_if_needed(int t);
    void parallel_update(int t);
    double eval_from_stats(const SuffStats& st, const ModelSpec& model) const;

    EngineConfig config_;
    std::vector<double> series_;
    std::vector<double> log_prior_prob_;
    std::vector<CandidateState> candidates_;
    FilterHistory history_;
    std::mt19937_64 master_rng_;
    int n_ = 0;
};

}  // namespace bocpd
