#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fnac/actor.hpp"
#include "fnac/advantage.hpp"
#include "fnac/critic.hpp"
#include "fnac/env.hpp"
#include "fnac/risk.hpp"

namespace fnac {

struct TrainConfig {
    int iterations = 100;
    double alpha = 1.0;  // natural-gradient step size, constant across iterations
    std::uint64_t rollout_seed_base = 0;
    EnvConfig env;
    RiskSpec risk;
    CriticConfig critic;
    double ridge = 0.1;
    Weighting weighting = Weighting::kUniform;
    std::vector<int> hidden;  // empty -> architecture defaults for the mode
    double s_min = 1e-2;
    int eval_every = 10;
    int early_stop_patience = 10;  // evaluations without improvement
    int threads = 1;

    void validate() const;
    PolicyArch make_arch() const;
};

struct IterationRecord {
    int iteration = 0;
    double train_return = 0.0;  // mean per-episode return before risk transform
    double valid_return = std::numeric_limits<double>::quiet_NaN();  // NaN when not evaluated
    double w_norm = 0.0;
    double critic_mse = 0.0;
    double rho = std::numeric_limits<double>::quiet_NaN();
    double j = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;  // timing only; kept out of the CSV so runs diff clean
};

struct TrainReport {
    std::vector<IterationRecord> records;
    int best_iteration = 0;
    double best_valid_return = 0.0;

    void write_csv(const std::string& path) const;
};

struct TrainResult {
    Policy policy;
    BoostedEnsemble critic;
    TrainReport report;
};

// Mean greedy per-episode return of a policy on a series.
double evaluate_mean_return(const MarketSeries& series, const Policy& policy, const EnvConfig& cfg,
                            int threads = 1);

// The FNAC loop: rollout -> optional risk transform -> critic fit ->
// compatible advantage solve -> natural-gradient update, with periodic greedy
// validation and best-checkpoint selection.
TrainResult train(const MarketSeries& train_series, const MarketSeries& valid_series,
                  const TrainConfig& cfg, std::uint64_t seed);

// Two-stage hyperparameter search mirroring the model-selection protocol:
// critic + ridge knobs score on the first validation set, actor knobs on the
// second.
struct HyperGrid {
    std::vector<double> critic_shrinkage;
    std::vector<int> critic_rounds;
    std::vector<double> min_child_weight;
    std::vector<double> ridge;
    std::vector<double> alpha;
    std::vector<std::vector<int>> hidden;
};

struct SelectionEntry {
    TrainConfig config;
    double valid_return = 0.0;
};

struct SelectionResult {
    TrainConfig best;
    std::vector<SelectionEntry> stage1;
    std::vector<SelectionEntry> stage2;
};

SelectionResult select_model(const HyperGrid& grid, const MarketSeries& train_series,
                             const MarketSeries& valid_critic, const MarketSeries& valid_actor,
                             const TrainConfig& base, std::uint64_t seed);

}  // namespace fnac
