#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fnac/actor.hpp"
#include "fnac/market_data.hpp"

namespace fnac {

enum class FeeKind { kConstant, kHalfIdentity, kStep };

// Size-dependent fee multiplier g: order size |a - x| in [0, 2] -> spread
// scaling factor. Non-decreasing and non-negative by construction.
struct FeeSchedule {
    FeeKind kind = FeeKind::kConstant;
    double constant = 0.5;
    // step bands: value[0] for x < thresholds[0]; value[i] while x <= thresholds[i];
    // value.back() beyond the last threshold. Matches a step like
    // g = 1 on [0, 0.75), 1.75 on [0.75, 1.25], 2.75 above.
    std::vector<double> thresholds;
    std::vector<double> values;

    static FeeSchedule constant_fee(double value = 0.5);
    static FeeSchedule half_identity();
    static FeeSchedule step_default();
    static FeeSchedule step(std::vector<double> thresholds, std::vector<double> values);

    void validate() const;
    double operator()(double order_size) const;
};

std::string to_string(FeeKind kind);
FeeKind fee_kind_from_string(const std::string& s);

struct EnvConfig {
    int persistence = 1;  // k: minutes each decision is held
    ActionMode mode = ActionMode::kDiscrete;
    FeeSchedule fee;
    double max_exposure = 100000.0;  // documentation only; rewards are per unit notional

    void validate() const;
};

struct TransitionSample {
    TradingState state;
    double action = 0.0;
    double reward = 0.0;
    TradingState next_state;
    bool done = false;  // true exactly on the forced-close record
};

struct StepResult {
    double reward = 0.0;
    int next_t = 0;
    double next_allocation = 0.0;
    bool at_close = false;  // post-step time reached the forced-close point
};

// One persisted decision: reward = a*(p_{t+k} - p_t) - g(|a-x|)*sigma_t*|a-x|.
// If fewer than k minutes remain the action persists for the remainder so the
// forced close always lands on minute 600.
StepResult step(const Episode& episode, int t, double allocation, double action, const EnvConfig& cfg);

// Cost of returning to Flat at episode end: -g(|x|)*sigma*|x|.
double force_close(double allocation, double spread, const FeeSchedule& fee);

// Decision minutes of an episode under persistence k: 45, 45+k, ... < 600.
std::vector<int> decision_minutes(const EnvConfig& cfg);

// Batch dataset D plus per-sample episode bookkeeping used by the advantage
// weighting and the reports.
struct Dataset {
    std::vector<TransitionSample> samples;
    std::vector<std::int32_t> dates;          // per sample: episode calendar day
    std::vector<std::size_t> episode_begin;   // offset of each episode's first sample
    std::vector<double> episode_returns;      // sum of rewards incl. forced close
    std::vector<double> reference_prices;     // mid at each episode's first decision

    std::size_t size() const { return samples.size(); }
    std::size_t n_episodes() const { return episode_begin.size(); }
};

using ActionChooser = std::function<double(const TradingState&, rng::Stream&)>;

// Core episode simulator shared by policy rollouts, baselines and backtests.
// chooser picks the target allocation at each decision minute.
Dataset rollout_with(const MarketSeries& series, const EnvConfig& cfg, const ActionChooser& chooser,
                     std::uint64_t seed, int threads = 1);

// Samples actions from the policy (or takes its greedy action); deterministic
// given the seed, and parallelism-invariant: each episode gets its own RNG
// stream derived from (seed, episode index) and results merge in episode order.
Dataset rollout(const MarketSeries& series, const Policy& policy, const EnvConfig& cfg,
                std::uint64_t seed, bool greedy = false, int threads = 1);

// Optional export: one CSV row per TransitionSample with the flattened state.
void write_dataset_csv(const Dataset& dataset, const std::string& path);

}  // namespace fnac
