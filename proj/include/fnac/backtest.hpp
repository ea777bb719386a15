#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fnac/actor.hpp"
#include "fnac/critic.hpp"
#include "fnac/env.hpp"

namespace fnac {

struct EpisodePath {
    std::int32_t date = 0;
    double episode_return = 0.0;   // sum of rewards incl. forced close
    double reference_price = 0.0;  // mid at the first decision minute
    std::vector<double> rewards;      // per decision + close
    std::vector<double> allocations;  // allocation after each decision (incl. close -> 0)
    std::vector<double> orders;       // |a_t - x_t| per decision + close
};

struct BacktestResult {
    std::vector<std::int32_t> dates;
    // percent of invested amount: 100 * return / reference price, running sum
    std::vector<double> cumulative_mean;
    std::vector<double> cumulative_std;  // across seeds
    std::vector<EpisodePath> paths;      // from the first seed
    double mean_episode_return = 0.0;    // currency units, averaged over seeds
    double reward_std = 0.0;             // std of per-step rewards, first seed
};

// Greedy by default, which makes the result seed-invariant; with greedy=false
// each seed drives an independent sampled rollout and the aggregate is the
// mean +/- std across seeds.
BacktestResult backtest(const MarketSeries& series, const Policy& policy, const EnvConfig& cfg,
                        const std::vector<std::uint64_t>& seeds, bool greedy = true, int threads = 1);

enum class BaselineKind { kBuyHold, kSellHold };

BaselineKind baseline_kind_from_string(const std::string& s);

// Buy&Hold / Sell&Hold: full long (short) from the first decision minute to
// the forced close, every day.
BacktestResult baseline(BaselineKind kind, const MarketSeries& series, const EnvConfig& cfg,
                        int threads = 1);

struct OracleResult {
    double value = 0.0;                // optimal episode return
    std::vector<double> allocations;   // one optimal path, per decision minute
};

// Exact backward induction over (decision index, allocation in {-1, 0, 1});
// discrete mode only. Ties prefer the smaller |allocation|.
OracleResult dp_oracle(const Episode& episode, const EnvConfig& cfg);

// CSV report bundle: cumulative_returns, allocation_heatmap, order_sizes,
// reward_hist and (when a critic is given) feature_importance.
void write_report(const BacktestResult& result, const BoostedEnsemble* critic,
                  const std::string& out_dir);

}  // namespace fnac
